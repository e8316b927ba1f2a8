#include "resiam/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace resiam {

namespace {

std::size_t checked_count(const std::vector<int>& shape) {
    if (shape.empty() || shape.size() > 4) {
        throw std::invalid_argument("Tensor: rank must be 1..4, got rank " +
                                    std::to_string(shape.size()));
    }
    std::size_t n = 1;
    for (int e : shape) {
        if (e <= 0) {
            throw std::invalid_argument("Tensor: extents must be positive");
        }
        n *= static_cast<std::size_t>(e);
    }
    return n;
}

double cubic_keys(double x) {
    // Keys interpolation kernel, a = -0.5.
    x = std::abs(x);
    if (x < 1.0) {
        return 1.0 + x * x * (1.5 * x - 2.5);
    }
    if (x < 2.0) {
        return 2.0 - x * (4.0 - x * (2.5 - 0.5 * x));
    }
    return 0.0;
}

} // namespace

Tensor Tensor::zeros(const std::vector<int>& shape) {
    Tensor t;
    t.shape_ = shape;
    t.size_ = checked_count(shape);
    t.data_.assign(t.size_, 0.0);
    return t;
}

Tensor Tensor::zeros_complex(const std::vector<int>& shape) {
    Tensor t;
    t.shape_ = shape;
    t.size_ = checked_count(shape);
    t.complex_ = true;
    t.data_.assign(2 * t.size_, 0.0);
    return t;
}

Tensor Tensor::zeros_like(const Tensor& other) {
    return other.complex_ ? zeros_complex(other.shape_) : zeros(other.shape_);
}

Tensor Tensor::from_data(const std::vector<int>& shape, std::vector<double> values) {
    Tensor t;
    t.shape_ = shape;
    t.size_ = checked_count(shape);
    if (values.size() != t.size_) {
        throw std::invalid_argument("Tensor::from_data: " + std::to_string(values.size()) +
                                    " values for shape " + t.shape_str());
    }
    t.data_ = std::move(values);
    return t;
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        os << (i ? "," : "") << shape_[i];
    }
    os << ']';
    return os.str();
}

ImagePatch::ImagePatch(Tensor t) : data(std::move(t)) {
    if (data.rank() != 3) {
        throw std::invalid_argument("ImagePatch: expected [C,H,W], got " + data.shape_str());
    }
    if (data.is_complex()) {
        throw std::invalid_argument("ImagePatch: must be real");
    }
    const int c = data.extent(0);
    if (c != 1 && c != 3) {
        throw std::invalid_argument("ImagePatch: channel count must be 1 or 3, got " +
                                    std::to_string(c));
    }
}

Tensor conv2d(const Tensor& input, const Tensor& kernels, int stride, int padding) {
    if (input.is_complex() || kernels.is_complex()) {
        throw std::invalid_argument("conv2d: real tensors only");
    }
    if (input.rank() != 3 || kernels.rank() != 4) {
        throw std::invalid_argument("conv2d: expected input [C,H,W] and kernels [Chat,C,Sh,Sw], got " +
                                    input.shape_str() + " and " + kernels.shape_str());
    }
    const int C = input.extent(0), H = input.extent(1), W = input.extent(2);
    const int Co = kernels.extent(0), Ck = kernels.extent(1);
    const int Sh = kernels.extent(2), Sw = kernels.extent(3);
    if (C != Ck) {
        throw std::invalid_argument("conv2d: input channels " + std::to_string(C) +
                                    " do not match kernel channels " + std::to_string(Ck) +
                                    " (input " + input.shape_str() + ", kernels " +
                                    kernels.shape_str() + ")");
    }
    if (stride < 1) {
        throw std::invalid_argument("conv2d: stride must be positive");
    }
    if (padding < 0) {
        throw std::invalid_argument("conv2d: padding must be non-negative");
    }
    const int Hp = H + 2 * padding, Wp = W + 2 * padding;
    if (Sh > Hp || Sw > Wp) {
        throw std::invalid_argument("conv2d: kernel " + kernels.shape_str() +
                                    " larger than padded input " + input.shape_str());
    }
    const int Ho = (Hp - Sh) / stride + 1;
    const int Wo = (Wp - Sw) / stride + 1;

    Tensor out = Tensor::zeros({Co, Ho, Wo});
    const double* in = input.raw();
    const double* kn = kernels.raw();
    double* op = out.raw();

    for (int co = 0; co < Co; ++co) {
        for (int c = 0; c < C; ++c) {
            const double* inc = in + static_cast<std::size_t>(c) * H * W;
            const double* knc = kn + (static_cast<std::size_t>(co) * C + c) * Sh * Sw;
            double* oc = op + static_cast<std::size_t>(co) * Ho * Wo;
            for (int oy = 0; oy < Ho; ++oy) {
                const int y0 = oy * stride - padding;
                for (int ox = 0; ox < Wo; ++ox) {
                    const int x0 = ox * stride - padding;
                    double acc = 0.0;
                    for (int ky = 0; ky < Sh; ++ky) {
                        const int y = y0 + ky;
                        if (y < 0 || y >= H) continue;
                        const double* row = inc + static_cast<std::size_t>(y) * W;
                        const double* krow = knc + static_cast<std::size_t>(ky) * Sw;
                        for (int kx = 0; kx < Sw; ++kx) {
                            const int x = x0 + kx;
                            if (x < 0 || x >= W) continue;
                            acc += row[x] * krow[kx];
                        }
                    }
                    oc[static_cast<std::size_t>(oy) * Wo + ox] += acc;
                }
            }
        }
    }
    return out;
}

namespace {

// Applies fn(plane_in, plane_out) over all leading-axes slices of t.
template <class Fn>
Tensor map_planes(const Tensor& t, int out_h, int out_w, Fn&& fn) {
    const int r = t.rank();
    if (r < 2) {
        throw std::invalid_argument("spatial op: rank must be >= 2, got " + t.shape_str());
    }
    const int H = t.extent(r - 2), W = t.extent(r - 1);
    std::vector<int> out_shape = t.shape();
    out_shape[static_cast<std::size_t>(r - 2)] = out_h;
    out_shape[static_cast<std::size_t>(r - 1)] = out_w;
    const int comps = t.is_complex() ? 2 : 1;
    Tensor out = t.is_complex() ? Tensor::zeros_complex(out_shape) : Tensor::zeros(out_shape);

    std::size_t planes = 1;
    for (int a = 0; a < r - 2; ++a) planes *= static_cast<std::size_t>(t.extent(a));

    // Complex planes are deinterleaved into scratch buffers so fn sees plain grids.
    std::vector<double> sin_buf, sout_buf;
    for (std::size_t p = 0; p < planes; ++p) {
        for (int comp = 0; comp < comps; ++comp) {
            const double* src = t.raw() + p * static_cast<std::size_t>(H) * W * comps;
            double* dst = out.raw() + p * static_cast<std::size_t>(out_h) * out_w * comps;
            if (comps == 1) {
                fn(src, H, W, dst, out_h, out_w);
            } else {
                sin_buf.resize(static_cast<std::size_t>(H) * W);
                sout_buf.assign(static_cast<std::size_t>(out_h) * out_w, 0.0);
                for (std::size_t i = 0; i < sin_buf.size(); ++i) sin_buf[i] = src[2 * i + comp];
                fn(sin_buf.data(), H, W, sout_buf.data(), out_h, out_w);
                for (std::size_t i = 0; i < sout_buf.size(); ++i) dst[2 * i + comp] = sout_buf[i];
            }
        }
    }
    return out;
}

} // namespace

Tensor rotate90(const Tensor& t, int quarter_turns) {
    const int r = t.rank();
    if (r < 2) {
        throw std::invalid_argument("rotate90: rank must be >= 2");
    }
    const int H = t.extent(r - 2), W = t.extent(r - 1);
    int q = ((quarter_turns % 4) + 4) % 4;
    if ((q == 1 || q == 3) && H != W) {
        throw std::invalid_argument("rotate90: odd quarter turns require square spatial extent, got " +
                                    t.shape_str());
    }
    return map_planes(t, H, W, [&](const double* in, int h, int w, double* out, int, int) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double v;
                switch (q) {
                    case 0: v = in[static_cast<std::size_t>(y) * w + x]; break;
                    case 1: v = in[static_cast<std::size_t>(x) * w + (w - 1 - y)]; break;
                    case 2: v = in[static_cast<std::size_t>(h - 1 - y) * w + (w - 1 - x)]; break;
                    default: v = in[static_cast<std::size_t>(h - 1 - x) * w + y]; break;
                }
                out[static_cast<std::size_t>(y) * w + x] = v;
            }
        }
    });
}

Tensor rotate_spatial(const Tensor& t, double theta, Interp interp) {
    const int r = t.rank();
    const int H = t.extent(r - 2), W = t.extent(r - 1);
    const double cy = 0.5 * (H - 1), cx = 0.5 * (W - 1);
    const double ct = std::cos(theta), st = std::sin(theta);
    return map_planes(t, H, W, [&](const double* in, int h, int w, double* out, int, int) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                // math coords: mx right, my up; sample source at R(-theta) * p
                const double mx = x - cx, my = cy - y;
                const double sx = mx * ct + my * st;
                const double sy = -mx * st + my * ct;
                const double col = cx + sx, row = cy - sy;
                double v = 0.0;
                if (interp == Interp::Nearest) {
                    const long ri = std::lround(row), ci = std::lround(col);
                    if (ri >= 0 && ri < h && ci >= 0 && ci < w) {
                        v = in[static_cast<std::size_t>(ri) * w + ci];
                    }
                } else {
                    const int r0 = static_cast<int>(std::floor(row));
                    const int c0 = static_cast<int>(std::floor(col));
                    const double fy = row - r0, fx = col - c0;
                    auto tap = [&](int rr, int cc) -> double {
                        if (rr < 0 || rr >= h || cc < 0 || cc >= w) return 0.0;
                        return in[static_cast<std::size_t>(rr) * w + cc];
                    };
                    v = (1 - fy) * ((1 - fx) * tap(r0, c0) + fx * tap(r0, c0 + 1)) +
                        fy * ((1 - fx) * tap(r0 + 1, c0) + fx * tap(r0 + 1, c0 + 1));
                }
                out[static_cast<std::size_t>(y) * w + x] = v;
            }
        }
    });
}

ImagePatch rotate_image(const ImagePatch& img, double theta, Interp interp) {
    // reduce to (-pi, pi]
    double th = std::remainder(theta, 2.0 * M_PI);
    if (th <= -M_PI) th += 2.0 * M_PI;
    if (th == 0.0) {
        return img;
    }
    const double q = th / (M_PI / 2.0);
    const double qr = std::round(q);
    if (std::abs(q - qr) < 1e-12) {
        const int turns = static_cast<int>(qr);
        const bool odd = (((turns % 4) + 4) % 4) % 2 == 1;
        if (!odd || img.height() == img.width()) {
            return ImagePatch(rotate90(img.data, turns));
        }
    }
    return ImagePatch(rotate_spatial(img.data, th, interp));
}

ImagePatch crop_centered(const ImagePatch& img, double cx, double cy, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) {
        throw std::invalid_argument("crop_centered: size must be positive, got " +
                                    std::to_string(out_h) + "x" + std::to_string(out_w));
    }
    const int C = img.channels(), H = img.height(), W = img.width();
    // round-half-down keeps a size-2 crop about (1,1) on the top-left block
    const long r0 = static_cast<long>(std::ceil(cy - 0.5 * (out_h - 1) - 0.5));
    const long c0 = static_cast<long>(std::ceil(cx - 0.5 * (out_w - 1) - 0.5));

    Tensor out = Tensor::zeros({C, out_h, out_w});
    for (int c = 0; c < C; ++c) {
        double mean = 0.0;
        const double* plane = img.data.raw() + static_cast<std::size_t>(c) * H * W;
        for (std::size_t i = 0; i < static_cast<std::size_t>(H) * W; ++i) mean += plane[i];
        mean /= static_cast<double>(H) * W;
        double* op = out.raw() + static_cast<std::size_t>(c) * out_h * out_w;
        for (int y = 0; y < out_h; ++y) {
            const long sy = r0 + y;
            for (int x = 0; x < out_w; ++x) {
                const long sx = c0 + x;
                op[static_cast<std::size_t>(y) * out_w + x] =
                    (sy >= 0 && sy < H && sx >= 0 && sx < W)
                        ? plane[static_cast<std::size_t>(sy) * W + sx]
                        : mean;
            }
        }
    }
    return ImagePatch(std::move(out));
}

ImagePatch resize_bilinear(const ImagePatch& img, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) {
        throw std::invalid_argument("resize_bilinear: size must be positive");
    }
    const int H = img.height(), W = img.width();
    if (out_h == H && out_w == W) {
        return img;
    }
    const double sy = static_cast<double>(H) / out_h;
    const double sx = static_cast<double>(W) / out_w;
    Tensor out = map_planes(img.data, out_h, out_w,
                            [&](const double* in, int h, int w, double* op, int oh, int ow) {
        for (int y = 0; y < oh; ++y) {
            double row = (y + 0.5) * sy - 0.5;
            row = std::clamp(row, 0.0, static_cast<double>(h - 1));
            const int r0 = static_cast<int>(row);
            const int r1 = std::min(r0 + 1, h - 1);
            const double fy = row - r0;
            for (int x = 0; x < ow; ++x) {
                double col = (x + 0.5) * sx - 0.5;
                col = std::clamp(col, 0.0, static_cast<double>(w - 1));
                const int c0 = static_cast<int>(col);
                const int c1 = std::min(c0 + 1, w - 1);
                const double fx = col - c0;
                const double v = (1 - fy) * ((1 - fx) * in[static_cast<std::size_t>(r0) * w + c0] +
                                             fx * in[static_cast<std::size_t>(r0) * w + c1]) +
                                 fy * ((1 - fx) * in[static_cast<std::size_t>(r1) * w + c0] +
                                       fx * in[static_cast<std::size_t>(r1) * w + c1]);
                op[static_cast<std::size_t>(y) * ow + x] = v;
            }
        }
    });
    return ImagePatch(std::move(out));
}

Tensor upsample_bicubic(const Tensor& hw, int factor) {
    if (hw.rank() != 2 || hw.is_complex()) {
        throw std::invalid_argument("upsample_bicubic: expected real [H,W], got " + hw.shape_str());
    }
    if (factor < 1) {
        throw std::invalid_argument("upsample_bicubic: factor must be >= 1");
    }
    const int H = hw.extent(0), W = hw.extent(1);
    if (factor == 1) {
        return hw;
    }
    const int Ho = (H - 1) * factor + 1, Wo = (W - 1) * factor + 1;
    Tensor out = Tensor::zeros({Ho, Wo});
    const double* in = hw.raw();
    auto tap = [&](int r, int c) -> double {
        r = std::clamp(r, 0, H - 1);
        c = std::clamp(c, 0, W - 1);
        return in[static_cast<std::size_t>(r) * W + c];
    };
    for (int y = 0; y < Ho; ++y) {
        const int yi = y / factor;
        const double fy = static_cast<double>(y % factor) / factor;
        double wy[4];
        for (int i = 0; i < 4; ++i) wy[i] = cubic_keys(fy - (i - 1));
        for (int x = 0; x < Wo; ++x) {
            const int xi = x / factor;
            const double fx = static_cast<double>(x % factor) / factor;
            double acc = 0.0;
            for (int i = 0; i < 4; ++i) {
                double rowv = 0.0;
                for (int j = 0; j < 4; ++j) {
                    rowv += cubic_keys(fx - (j - 1)) * tap(yi + i - 1, xi + j - 1);
                }
                acc += wy[i] * rowv;
            }
            out.at(y, x) = acc;
        }
    }
    return out;
}

} // namespace resiam
