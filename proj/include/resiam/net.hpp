#ifndef RESIAM_NET_HPP
#define RESIAM_NET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "resiam/basis.hpp"
#include "resiam/tensor.hpp"

namespace resiam {

/// Cyclic rotation group C_Lambda with angles Theta = {2 pi lambda / Lambda}.
struct GroupSpec {
    int Lambda = 1;

    static GroupSpec cyclic(int Lambda);
    double angle(int lam) const;
    std::vector<double> angles() const;
    bool operator==(const GroupSpec&) const = default;
};

/// Feature map on the group: [C, Lambda, H, W]; slice (c, lambda) is the
/// response of channel c at orientation Theta[lambda].
struct GroupFeatureMap {
    Tensor data;
    GroupSpec group;

    GroupFeatureMap() = default;
    GroupFeatureMap(Tensor t, GroupSpec g);

    int channels() const { return data.extent(0); }
    int orientations() const { return data.extent(1); }
    int height() const { return data.extent(2); }
    int width() const { return data.extent(3); }
};

enum class LayerKind { Lift, Group, PoolSpatial, PoolOrientation };
enum class PoolMode { Max, Mean };

struct LayerSpec {
    LayerKind kind = LayerKind::Lift;
    int in_ch = 0;
    int out_ch = 0;
    int S = 0;
    int stride = 1;
    bool norm = false;
    bool relu = false;
    PoolMode pool_mode = PoolMode::Max;

    static LayerSpec lift(int in_ch, int out_ch, int S, int stride, bool norm, bool relu);
    static LayerSpec group(int in_ch, int out_ch, int S, int stride, bool norm, bool relu);
    static LayerSpec pool_spatial(int factor);
    static LayerSpec pool_orientation(PoolMode mode = PoolMode::Max);

    bool is_conv() const { return kind == LayerKind::Lift || kind == LayerKind::Group; }
};

struct NetworkSpec {
    GroupSpec group;
    std::vector<LayerSpec> layers;

    /// First conv is lift, later convs are group, exactly one orientation pool
    /// placed last, channel chain consistent.
    void validate() const;
    int total_stride() const;
    int conv_layer_count() const;
};

/// Encoder: basis + layer plan + one FilterWeights per conv layer.
struct Network {
    SteerableBasis basis;
    NetworkSpec spec;
    std::vector<FilterWeights> params;

    void validate() const;
    std::size_t param_count() const;
};

/// Trainable affine head applied to the raw correlation response.
struct TrackerHead {
    double gain = 0.01;
    double bias = 0.0;
};

/// Desk-scale encoder preset: 4 conv layers (lift, group, group, group), all
/// 3x3, strides 2,2,1,1, norm+ReLU on all but the last, max orientation pool.
/// Channel widths are pinned per Lambda so parameter counts match the Lambda=4
/// reference within 2%. Supported Lambda: 1, 4, 8.
Network desk_network(int Lambda, std::uint64_t seed);
std::vector<int> desk_channels(int Lambda);

/// Instance normalization: per leading-axis channel, statistics jointly over
/// all remaining axes (for group maps that includes the orientation axis —
/// per-orientation statistics would break equivariance), epsilon 1e-5, no
/// affine part.
Tensor instance_norm(const Tensor& x);

GroupFeatureMap lift_conv(const ImagePatch& img, const FilterWeights& w,
                          const SteerableBasis& basis, const GroupSpec& g, int stride);
GroupFeatureMap group_conv(const GroupFeatureMap& f, const FilterWeights& w,
                           const SteerableBasis& basis, int stride);
Tensor orientation_pool(const GroupFeatureMap& f, PoolMode mode = PoolMode::Max);
GroupFeatureMap pool_spatial(const GroupFeatureMap& f, int factor);

/// The group action on a feature map: spatial rotation by quarter_turns*90deg
/// plus cyclic shift of the orientation axis by quarter_turns*Lambda/4 slots.
/// Requires quarter_turns*Lambda % 4 == 0.
GroupFeatureMap rotate_group_feature_map(const GroupFeatureMap& f, int quarter_turns);

/// Encoder output phi(img): all layers applied in order, [C,H,W] after the
/// orientation pool. Kernels are steered once per orientation and applied with
/// conv2d (the inference route).
Tensor forward(const Network& net, const ImagePatch& img);

/// Caches kept by the training route for the backward pass.
struct LayerCache {
    Tensor atom_maps;   // complex [C_in(*Lambda), A, H', W'] per-atom correlations
    Tensor conv_out;    // [C, Lambda, H', W'] before normalization
    Tensor norm_out;    // after normalization (== conv_out when norm is off)
    std::vector<double> inv_std;   // per channel, empty when norm is off
};

struct ForwardCache {
    std::vector<LayerCache> layers;   // one per conv layer
    Tensor pool_argmax;               // [C,H,W] winning orientation index (max pool)
    Tensor output;                    // [C,H,W]
    std::vector<int> input_shape;
};

/// Training route: correlates the input with each basis atom once, then
/// phase-combines per orientation. Must agree with forward() within 1e-10.
Tensor forward_train(const Network& net, const ImagePatch& img, ForwardCache& cache);

} // namespace resiam

#endif
