#ifndef RESIAM_TRACKER_HPP
#define RESIAM_TRACKER_HPP

#include <functional>
#include <vector>

#include "resiam/box.hpp"
#include "resiam/net.hpp"
#include "resiam/tensor.hpp"

namespace resiam {

/// Maps an image patch to a real feature stack [C,H,W].
using Encoder = std::function<Tensor(const ImagePatch&)>;

struct TrackerConfig {
    int Lambda = 4;
    int exemplar_size = 35;
    int search_size = 67;
    double context = 0.5;      // context fraction of (w + h) padded around the target
    std::vector<double> scales{1.0 / 1.0375, 1.0, 1.0375};
    double scale_penalty = 0.9745;   // multiplies peak scores of non-identity scales
    double scale_damping = 0.59;     // update rate toward the winning scale
    double window_weight = 0.176;    // cosine-window mixing weight on the response
    int upsample = 16;               // response upsampling factor before localization
    int gamma = 0;                   // orientation window half-width; 0 disables the constraint

    void validate() const;
};

struct TrackState {
    int frame = 0;
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    double scale = 1.0;          // cumulative size factor relative to the initial box
    int orientation_index = 0;
    double orientation_deg = 0.0;
    double score = 0.0;

    Box box() const { return Box{cx - 0.5 * w, cy - 0.5 * h, w, h}; }
    static TrackState from_box(int frame, const Box& b);
};

/// Fixed set of template features, one entry per orientation hypothesis.
/// Entry i holds features of the exemplar rotated by i*360/entries degrees,
/// so it matches a target that has rotated counter-clockwise by that angle.
struct TemplateBank {
    std::vector<Tensor> feats;   // entries() x [C,h,w]
    Box source;
    int exemplar_size = 0;

    int entries() const { return static_cast<int>(feats.size()); }
};

struct OrientationPick {
    int index = 0;
    double peak = 0.0;
};

/// Side length of the square context region around a box: sqrt((w+c)(h+c))
/// with c = context*(w+h).
double context_region(const Box& box, double context);

/// Square crop of `frame` centered on `box`, rotated counter-clockwise by
/// `rot_deg` about the box center, covering the context region, resized to
/// out_size x out_size.
ImagePatch canonical_patch(const ImagePatch& frame, const Box& box, double rot_deg,
                           int out_size, double region_scale, double context);

/// Integer side of the search crop for a given scale index (odd, >= 3).
int search_crop_size(const TrackState& prev, const TrackerConfig& cfg, int scale_index);

TemplateBank make_template_bank(const ImagePatch& frame, const Box& box,
                                const Encoder& encoder, const TrackerConfig& cfg);

/// Cross-correlate one template stack [C,h,w] against search features [C,H,W];
/// returns the valid-extent response [H-h+1, W-w+1].
Tensor correlate_single(const Tensor& templ, const Tensor& feat);

/// One response map per bank entry.
std::vector<Tensor> correlate(const TemplateBank& bank, const Tensor& feat);

/// Orientation indices reachable from prev_index with at most `gamma` cyclic
/// steps, sorted ascending. gamma = 0 means unconstrained (all indices).
std::vector<int> allowed_window(int prev_index, int gamma, int Lambda);

/// Pick the heatmap with the largest peak among `allowed` indices. Ties go to
/// the index cyclically nearest prev_index, then to the lower index.
OrientationPick global_maxpool(const std::vector<Tensor>& heatmaps,
                               const std::vector<int>& allowed, int prev_index);

/// Orientation angle i*360/Lambda in degrees, wrapped to (-180, 180].
double estimate_orientation(int index, int Lambda);

/// Turn per-scale winning heatmaps into the next state: scale-penalized peak
/// pick, cosine-windowed sub-cell localization on the upsampled response, and
/// damped size update. orient[s] is the orientation chosen for scale s.
TrackState localize(const std::vector<Tensor>& heatmaps, const std::vector<int>& orient,
                    const TrackerConfig& cfg, const TrackState& prev, int total_stride);

/// Run the tracker over an in-memory sequence. Frame 0 is taken from the
/// ground-truth box with orientation index 0.
std::vector<TrackState> track_sequence(const std::vector<ImagePatch>& frames, const Box& init,
                                       const Encoder& encoder, const TrackerConfig& cfg,
                                       int total_stride);

/// Convenience overload driving the group-equivariant network.
std::vector<TrackState> track_sequence(const std::vector<ImagePatch>& frames, const Box& init,
                                       const Network& net, const TrackerConfig& cfg);

/// One CSV row per state: frame,x,y,w,h,orientation_deg,score.
std::string states_to_csv(const std::vector<TrackState>& states);

} // namespace resiam

#endif
