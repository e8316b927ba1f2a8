#ifndef RESIAM_IO_HPP
#define RESIAM_IO_HPP

#include <string>
#include <utility>
#include <vector>

#include "resiam/box.hpp"
#include "resiam/net.hpp"
#include "resiam/tensor.hpp"

namespace resiam {

/// 8-bit PNG, returned as [1,H,W] (grayscale) or [3,H,W] (color) in [0,1].
/// Palette and 16-bit files are expanded/narrowed; alpha is dropped.
Tensor read_png(const std::string& path);

/// Writes [1,H,W] or [3,H,W] as an 8-bit PNG; values are clamped to [0,1]
/// and quantized to 255 levels.
void write_png(const std::string& path, const Tensor& img);

/// [3,H,W] -> [1,H,W] via the usual luma weights; grayscale passes through.
Tensor to_gray(const Tensor& img);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// One ground-truth row: axis-aligned box plus absolute in-plane angle
/// relative to frame 0.
struct FrameAnnotation {
    int frame = 0;
    Box box;
    double angle_deg = 0.0;
};

std::string annotations_to_csv(const std::vector<FrameAnnotation>& rows);
std::vector<FrameAnnotation> annotations_from_csv(const std::string& text);

/// One tracker-output row, matching the tracker's CSV (frame,x,y,w,h,
/// orientation_deg,score).
struct ResultRow {
    int frame = 0;
    Box box;
    double orientation_deg = 0.0;
    double score = 0.0;
};

std::vector<ResultRow> results_from_csv(const std::string& text);

/// Self-describing versioned JSON container: basis manifest, layer plan,
/// every coefficient/bias array, and the response head. Doubles survive the
/// round trip bit-for-bit.
std::string network_to_json(const Network& net, const TrackerHead& head);
std::pair<Network, TrackerHead> network_from_json(const std::string& text);

void save_network(const std::string& path, const Network& net, const TrackerHead& head);
std::pair<Network, TrackerHead> load_network(const std::string& path);

} // namespace resiam

#endif
