#ifndef RESIAM_BOX_HPP
#define RESIAM_BOX_HPP

#include <algorithm>

namespace resiam {

/// Axis-aligned box in continuous pixel coordinates (pixel i spans i-0.5..i+0.5).
struct Box {
    double x = 0.0;   // left edge
    double y = 0.0;   // top edge
    double w = 0.0;
    double h = 0.0;

    double cx() const { return x + 0.5 * w; }
    double cy() const { return y + 0.5 * h; }
    double area() const { return w > 0.0 && h > 0.0 ? w * h : 0.0; }
    bool valid() const { return w > 0.0 && h > 0.0; }
};

/// Intersection-over-union of two axis-aligned boxes; 0 when either is empty.
/// The intersection is capped at the smaller area so rounding in the edge
/// arithmetic can never push the result above 1.
inline double iou(const Box& a, const Box& b) {
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = std::min(ix * iy, std::min(a.area(), b.area()));
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

} // namespace resiam

#endif
