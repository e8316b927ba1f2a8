#include "resiam/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace resiam {

namespace {

constexpr double kNormEps = 1e-5;

void check_stride_tiles(int H, int W, int S, int stride) {
    if (S > H || S > W) {
        throw std::invalid_argument("conv layer: kernel size " + std::to_string(S) +
                                    " exceeds input " + std::to_string(H) + "x" +
                                    std::to_string(W));
    }
    if ((H - S) % stride != 0 || (W - S) % stride != 0) {
        throw std::invalid_argument(
            "conv layer: stride " + std::to_string(stride) + " does not tile the valid extent of " +
            std::to_string(H) + "x" + std::to_string(W) + " with kernel " + std::to_string(S) +
            "; rotation equivariance would break");
    }
}

// Normalizes each leading-axis slice over everything else; optionally reports
// 1/sqrt(var + eps) per channel.
Tensor instance_norm_impl(const Tensor& x, std::vector<double>* inv_std_out) {
    if (x.rank() < 2 || x.is_complex()) {
        throw std::invalid_argument("instance_norm: expected a real tensor of rank >= 2, got " +
                                    x.shape_str());
    }
    const int C = x.extent(0);
    const std::size_t N = x.size() / static_cast<std::size_t>(C);
    Tensor y = Tensor::zeros_like(x);
    if (inv_std_out) inv_std_out->assign(static_cast<std::size_t>(C), 0.0);
    for (int c = 0; c < C; ++c) {
        const double* src = x.raw() + static_cast<std::size_t>(c) * N;
        double* dst = y.raw() + static_cast<std::size_t>(c) * N;
        double mean = 0.0;
        for (std::size_t i = 0; i < N; ++i) mean += src[i];
        mean /= static_cast<double>(N);
        double var = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double d = src[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(N);
        const double inv = 1.0 / std::sqrt(var + kNormEps);
        if (inv_std_out) (*inv_std_out)[static_cast<std::size_t>(c)] = inv;
        for (std::size_t i = 0; i < N; ++i) dst[i] = (src[i] - mean) * inv;
    }
    return y;
}

void apply_relu(Tensor& t) {
    for (double& v : t.storage()) v = std::max(v, 0.0);
}

// Stacked real/imaginary atom kernels [2A, 1, S, S] for per-channel correlation.
Tensor atom_kernel_stack(const SteerableBasis& basis) {
    const int A = basis.atom_count(), S = basis.S();
    Tensor k = Tensor::zeros({2 * A, 1, S, S});
    for (int a = 0; a < A; ++a) {
        const double* g = basis.atom(a).grid.raw();
        double* re = k.raw() + static_cast<std::size_t>(2 * a) * S * S;
        double* im = k.raw() + static_cast<std::size_t>(2 * a + 1) * S * S;
        for (int i = 0; i < S * S; ++i) {
            re[i] = g[2 * i];
            im[i] = g[2 * i + 1];
        }
    }
    return k;
}

// Correlates every plane of a [P,H,W] stack with every atom.
// Returns complex [P, A, H', W'].
Tensor atom_maps_for_planes(const Tensor& planes, const SteerableBasis& basis, int stride) {
    const int P = planes.extent(0), H = planes.extent(1), W = planes.extent(2);
    const int A = basis.atom_count(), S = basis.S();
    const Tensor stack = atom_kernel_stack(basis);
    const int Ho = (H - S) / stride + 1, Wo = (W - S) / stride + 1;
    Tensor U = Tensor::zeros_complex({P, A, Ho, Wo});
    const std::size_t plane_px = static_cast<std::size_t>(Ho) * Wo;
    for (int p = 0; p < P; ++p) {
        Tensor one = Tensor::zeros({1, H, W});
        const double* src = planes.raw() + static_cast<std::size_t>(p) * H * W;
        std::copy(src, src + static_cast<std::size_t>(H) * W, one.raw());
        Tensor maps = conv2d(one, stack, stride);   // [2A, Ho, Wo]
        for (int a = 0; a < A; ++a) {
            const double* re = maps.raw() + static_cast<std::size_t>(2 * a) * plane_px;
            const double* im = maps.raw() + static_cast<std::size_t>(2 * a + 1) * plane_px;
            double* dst = U.raw() + ((static_cast<std::size_t>(p) * A + a) * plane_px) * 2;
            for (std::size_t i = 0; i < plane_px; ++i) {
                dst[2 * i] = re[i];
                dst[2 * i + 1] = im[i];
            }
        }
    }
    return U;
}

} // namespace

GroupSpec GroupSpec::cyclic(int Lambda) {
    if (Lambda < 1) {
        throw std::invalid_argument("GroupSpec: Lambda must be >= 1, got " +
                                    std::to_string(Lambda));
    }
    return GroupSpec{Lambda};
}

double GroupSpec::angle(int lam) const { return 2.0 * M_PI * lam / Lambda; }

std::vector<double> GroupSpec::angles() const {
    std::vector<double> a(static_cast<std::size_t>(Lambda));
    for (int lam = 0; lam < Lambda; ++lam) a[static_cast<std::size_t>(lam)] = angle(lam);
    return a;
}

GroupFeatureMap::GroupFeatureMap(Tensor t, GroupSpec g) : data(std::move(t)), group(g) {
    if (data.rank() != 4 || data.is_complex()) {
        throw std::invalid_argument("GroupFeatureMap: expected real [C,Lambda,H,W], got " +
                                    data.shape_str());
    }
    if (data.extent(1) != group.Lambda) {
        throw std::invalid_argument("GroupFeatureMap: orientation axis " +
                                    std::to_string(data.extent(1)) + " does not match Lambda " +
                                    std::to_string(group.Lambda));
    }
}

LayerSpec LayerSpec::lift(int in_ch, int out_ch, int S, int stride, bool norm, bool relu) {
    return LayerSpec{LayerKind::Lift, in_ch, out_ch, S, stride, norm, relu, PoolMode::Max};
}
LayerSpec LayerSpec::group(int in_ch, int out_ch, int S, int stride, bool norm, bool relu) {
    return LayerSpec{LayerKind::Group, in_ch, out_ch, S, stride, norm, relu, PoolMode::Max};
}
LayerSpec LayerSpec::pool_spatial(int factor) {
    return LayerSpec{LayerKind::PoolSpatial, 0, 0, 0, factor, false, false, PoolMode::Max};
}
LayerSpec LayerSpec::pool_orientation(PoolMode mode) {
    return LayerSpec{LayerKind::PoolOrientation, 0, 0, 0, 1, false, false, mode};
}

void NetworkSpec::validate() const {
    if (layers.empty()) {
        throw std::invalid_argument("NetworkSpec: no layers");
    }
    GroupSpec::cyclic(group.Lambda);
    bool seen_conv = false;
    int pools = 0;
    int prev_out = -1;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        if (l.is_conv()) {
            if (!seen_conv && l.kind != LayerKind::Lift) {
                throw std::invalid_argument("NetworkSpec: the first conv layer must be a lift");
            }
            if (seen_conv && l.kind == LayerKind::Lift) {
                throw std::invalid_argument("NetworkSpec: only the first conv layer may be a lift");
            }
            if (l.in_ch < 1 || l.out_ch < 1 || l.S < 1 || l.S % 2 == 0 || l.stride < 1) {
                throw std::invalid_argument("NetworkSpec: bad conv geometry at layer " +
                                            std::to_string(i));
            }
            if (seen_conv && l.in_ch != prev_out) {
                throw std::invalid_argument("NetworkSpec: layer " + std::to_string(i) +
                                            " expects " + std::to_string(l.in_ch) +
                                            " channels but gets " + std::to_string(prev_out));
            }
            seen_conv = true;
            prev_out = l.out_ch;
        } else if (l.kind == LayerKind::PoolSpatial) {
            if (l.stride < 2) {
                throw std::invalid_argument("NetworkSpec: spatial pool factor must be >= 2");
            }
        } else {
            ++pools;
            if (i + 1 != layers.size()) {
                throw std::invalid_argument("NetworkSpec: the orientation pool must be last");
            }
        }
    }
    if (!seen_conv) {
        throw std::invalid_argument("NetworkSpec: need at least one conv layer");
    }
    if (pools != 1) {
        throw std::invalid_argument("NetworkSpec: exactly one orientation pool required, got " +
                                    std::to_string(pools));
    }
}

int NetworkSpec::total_stride() const {
    int s = 1;
    for (const LayerSpec& l : layers) {
        if (l.is_conv()) s *= l.stride;
        else if (l.kind == LayerKind::PoolSpatial) s *= l.stride;
    }
    return s;
}

int NetworkSpec::conv_layer_count() const {
    int n = 0;
    for (const LayerSpec& l : layers) n += l.is_conv() ? 1 : 0;
    return n;
}

void Network::validate() const {
    spec.validate();
    if (basis.Lambda() != spec.group.Lambda) {
        throw std::invalid_argument("Network: basis Lambda " + std::to_string(basis.Lambda()) +
                                    " does not match group Lambda " +
                                    std::to_string(spec.group.Lambda));
    }
    if (static_cast<int>(params.size()) != spec.conv_layer_count()) {
        throw std::invalid_argument("Network: " + std::to_string(params.size()) +
                                    " weight sets for " + std::to_string(spec.conv_layer_count()) +
                                    " conv layers");
    }
    std::size_t p = 0;
    for (const LayerSpec& l : spec.layers) {
        if (!l.is_conv()) continue;
        const FilterWeights& w = params[p++];
        if (l.S != basis.S()) {
            throw std::invalid_argument("Network: all conv layers must share the basis kernel size " +
                                        std::to_string(basis.S()));
        }
        const int want_off = (l.kind == LayerKind::Lift) ? 1 : spec.group.Lambda;
        if (w.out_ch != l.out_ch || w.in_ch != l.in_ch || w.offsets != want_off) {
            throw std::invalid_argument("Network: weight set " + std::to_string(p - 1) +
                                        " has layout (" + std::to_string(w.out_ch) + "," +
                                        std::to_string(w.in_ch) + "," + std::to_string(w.offsets) +
                                        "), layer wants (" + std::to_string(l.out_ch) + "," +
                                        std::to_string(l.in_ch) + "," + std::to_string(want_off) +
                                        ")");
        }
        w.validate(basis);
    }
}

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (const FilterWeights& w : params) n += w.param_count(basis);
    return n;
}

std::vector<int> desk_channels(int Lambda) {
    // Pinned so param counts match the Lambda=4 reference (10328) within 2%:
    // Lambda=1 -> 10383, Lambda=8 -> 10317.
    switch (Lambda) {
        case 1: return {11, 22, 23, 23};
        case 4: return {8, 16, 16, 16};
        case 8: return {6, 8, 7, 8};
        default:
            throw std::invalid_argument("desk_channels: preset pinned for Lambda in {1,4,8}, got " +
                                        std::to_string(Lambda));
    }
}

Network desk_network(int Lambda, std::uint64_t seed) {
    const std::vector<int> ch = desk_channels(Lambda);
    Network net;
    net.basis = default_basis(3, Lambda);
    net.spec.group = GroupSpec::cyclic(Lambda);
    net.spec.layers = {
        LayerSpec::lift(1, ch[0], 3, 2, true, true),
        LayerSpec::group(ch[0], ch[1], 3, 2, true, true),
        LayerSpec::group(ch[1], ch[2], 3, 1, true, true),
        LayerSpec::group(ch[2], ch[3], 3, 1, false, false),
        LayerSpec::pool_orientation(PoolMode::Max),
    };
    Rng rng(seed);
    net.params.push_back(random_filter_weights(rng, ch[0], 1, 1, net.basis));
    for (int l = 1; l < 4; ++l) {
        net.params.push_back(
            random_filter_weights(rng, ch[static_cast<std::size_t>(l)],
                                  ch[static_cast<std::size_t>(l - 1)], Lambda, net.basis));
    }
    net.validate();
    return net;
}

Tensor instance_norm(const Tensor& x) { return instance_norm_impl(x, nullptr); }

GroupFeatureMap lift_conv(const ImagePatch& img, const FilterWeights& w,
                          const SteerableBasis& basis, const GroupSpec& g, int stride) {
    if (basis.Lambda() != g.Lambda) {
        throw std::invalid_argument("lift_conv: basis Lambda " + std::to_string(basis.Lambda()) +
                                    " does not match group Lambda " + std::to_string(g.Lambda));
    }
    if (w.offsets != 1) {
        throw std::invalid_argument("lift_conv: lift weights must have a single offset slice");
    }
    if (img.channels() != w.in_ch) {
        throw std::invalid_argument("lift_conv: image has " + std::to_string(img.channels()) +
                                    " channels, weights expect " + std::to_string(w.in_ch));
    }
    check_stride_tiles(img.height(), img.width(), basis.S(), stride);

    const int Ho = (img.height() - basis.S()) / stride + 1;
    const int Wo = (img.width() - basis.S()) / stride + 1;
    Tensor out = Tensor::zeros({w.out_ch, g.Lambda, Ho, Wo});
    const std::size_t px = static_cast<std::size_t>(Ho) * Wo;
    for (int lam = 0; lam < g.Lambda; ++lam) {
        Tensor kernels = steer(w, basis, g.angle(lam));
        Tensor o = conv2d(img.data, kernels, stride);   // [out_ch, Ho, Wo]
        for (int co = 0; co < w.out_ch; ++co) {
            const double* src = o.raw() + static_cast<std::size_t>(co) * px;
            double* dst = out.raw() + (static_cast<std::size_t>(co) * g.Lambda + lam) * px;
            const double beta = w.bias[static_cast<std::size_t>(co)];
            for (std::size_t i = 0; i < px; ++i) dst[i] = src[i] + beta;
        }
    }
    return GroupFeatureMap(std::move(out), g);
}

GroupFeatureMap group_conv(const GroupFeatureMap& f, const FilterWeights& w,
                           const SteerableBasis& basis, int stride) {
    const int Lambda = f.group.Lambda;
    if (basis.Lambda() != Lambda) {
        throw std::invalid_argument("group_conv: basis Lambda " + std::to_string(basis.Lambda()) +
                                    " does not match feature-map Lambda " + std::to_string(Lambda));
    }
    if (w.offsets != Lambda) {
        throw std::invalid_argument("group_conv: weights carry " + std::to_string(w.offsets) +
                                    " offset slices, the group needs " + std::to_string(Lambda));
    }
    if (f.channels() != w.in_ch) {
        throw std::invalid_argument("group_conv: feature map has " + std::to_string(f.channels()) +
                                    " channels, weights expect " + std::to_string(w.in_ch));
    }
    const int C = f.channels(), H = f.height(), W = f.width(), S = basis.S();
    check_stride_tiles(H, W, S, stride);

    const Tensor in_flat = Tensor::from_data({C * Lambda, H, W}, f.data.storage());
    const int Ho = (H - S) / stride + 1, Wo = (W - S) / stride + 1;
    Tensor out = Tensor::zeros({w.out_ch, Lambda, Ho, Wo});
    const std::size_t px = static_cast<std::size_t>(Ho) * Wo;
    const std::size_t ksz = static_cast<std::size_t>(S) * S;

    for (int t = 0; t < Lambda; ++t) {
        Tensor steered = steer(w, basis, f.group.angle(t));   // [out, in*Lambda, S, S]
        Tensor kt = Tensor::zeros({w.out_ch, C * Lambda, S, S});
        for (int co = 0; co < w.out_ch; ++co)
            for (int c = 0; c < C; ++c)
                for (int phi = 0; phi < Lambda; ++phi) {
                    const int off = ((t - phi) % Lambda + Lambda) % Lambda;
                    const double* src = steered.raw() +
                                        ((static_cast<std::size_t>(co) * C + c) * Lambda + off) * ksz;
                    double* dst = kt.raw() +
                                  ((static_cast<std::size_t>(co) * C + c) * Lambda + phi) * ksz;
                    std::copy(src, src + ksz, dst);
                }
        Tensor o = conv2d(in_flat, kt, stride);   // [out_ch, Ho, Wo]
        for (int co = 0; co < w.out_ch; ++co) {
            const double* src = o.raw() + static_cast<std::size_t>(co) * px;
            double* dst = out.raw() + (static_cast<std::size_t>(co) * Lambda + t) * px;
            const double beta = w.bias[static_cast<std::size_t>(co)];
            for (std::size_t i = 0; i < px; ++i) dst[i] = src[i] + beta;
        }
    }
    return GroupFeatureMap(std::move(out), f.group);
}

Tensor orientation_pool(const GroupFeatureMap& f, PoolMode mode) {
    const int C = f.channels(), L = f.orientations(), H = f.height(), W = f.width();
    Tensor out = Tensor::zeros({C, H, W});
    const std::size_t px = static_cast<std::size_t>(H) * W;
    for (int c = 0; c < C; ++c) {
        double* dst = out.raw() + static_cast<std::size_t>(c) * px;
        for (int lam = 0; lam < L; ++lam) {
            const double* src = f.data.raw() + (static_cast<std::size_t>(c) * L + lam) * px;
            if (mode == PoolMode::Max) {
                if (lam == 0)
                    std::copy(src, src + px, dst);
                else
                    for (std::size_t i = 0; i < px; ++i) dst[i] = std::max(dst[i], src[i]);
            } else {
                for (std::size_t i = 0; i < px; ++i) dst[i] += src[i];
            }
        }
        if (mode == PoolMode::Mean)
            for (std::size_t i = 0; i < px; ++i) dst[i] /= L;
    }
    return out;
}

GroupFeatureMap pool_spatial(const GroupFeatureMap& f, int factor) {
    if (factor < 2) {
        throw std::invalid_argument("pool_spatial: factor must be >= 2");
    }
    const int H = f.height(), W = f.width();
    if (H % factor != 0 || W % factor != 0) {
        throw std::invalid_argument("pool_spatial: factor " + std::to_string(factor) +
                                    " does not divide " + std::to_string(H) + "x" +
                                    std::to_string(W) + "; rotation equivariance would break");
    }
    const int C = f.channels(), L = f.orientations();
    const int Ho = H / factor, Wo = W / factor;
    Tensor out = Tensor::zeros({C, L, Ho, Wo});
    for (int c = 0; c < C; ++c)
        for (int lam = 0; lam < L; ++lam)
            for (int y = 0; y < Ho; ++y)
                for (int x = 0; x < Wo; ++x) {
                    double m = f.data.at(c, lam, y * factor, x * factor);
                    for (int dy = 0; dy < factor; ++dy)
                        for (int dx = 0; dx < factor; ++dx)
                            m = std::max(m, f.data.at(c, lam, y * factor + dy, x * factor + dx));
                    out.at(c, lam, y, x) = m;
                }
    return GroupFeatureMap(std::move(out), f.group);
}

GroupFeatureMap rotate_group_feature_map(const GroupFeatureMap& f, int quarter_turns) {
    const int Lambda = f.group.Lambda;
    if ((quarter_turns * Lambda) % 4 != 0) {
        throw std::invalid_argument("rotate_group_feature_map: rotation by " +
                                    std::to_string(quarter_turns) +
                                    " quarter turns is not in the C_" + std::to_string(Lambda) +
                                    " group");
    }
    const int m = (((quarter_turns * Lambda / 4) % Lambda) + Lambda) % Lambda;
    Tensor spatial = rotate90(f.data, quarter_turns);
    Tensor out = Tensor::zeros_like(spatial);
    const int C = f.channels(), H = spatial.extent(2), W = spatial.extent(3);
    const std::size_t px = static_cast<std::size_t>(H) * W;
    for (int c = 0; c < C; ++c)
        for (int lam = 0; lam < Lambda; ++lam) {
            const double* src = spatial.raw() + (static_cast<std::size_t>(c) * Lambda + lam) * px;
            double* dst = out.raw() +
                          (static_cast<std::size_t>(c) * Lambda + ((lam + m) % Lambda)) * px;
            std::copy(src, src + px, dst);
        }
    return GroupFeatureMap(std::move(out), f.group);
}

namespace {

// Shared tail of both forward routes: normalization + ReLU per the layer spec.
void finish_conv_layer(const LayerSpec& l, GroupFeatureMap& g, LayerCache* cache) {
    if (cache) cache->conv_out = g.data;
    if (l.norm) {
        std::vector<double> inv_std;
        g.data = instance_norm_impl(g.data, cache ? &inv_std : nullptr);
        if (cache) cache->inv_std = std::move(inv_std);
    }
    if (cache) cache->norm_out = g.data;
    if (l.relu) apply_relu(g.data);
}

} // namespace

Tensor forward(const Network& net, const ImagePatch& img) {
    net.validate();
    GroupFeatureMap g;
    bool have_map = false;
    std::size_t p = 0;
    for (const LayerSpec& l : net.spec.layers) {
        switch (l.kind) {
            case LayerKind::Lift:
                g = lift_conv(img, net.params[p++], net.basis, net.spec.group, l.stride);
                finish_conv_layer(l, g, nullptr);
                have_map = true;
                break;
            case LayerKind::Group:
                g = group_conv(g, net.params[p++], net.basis, l.stride);
                finish_conv_layer(l, g, nullptr);
                break;
            case LayerKind::PoolSpatial:
                g = pool_spatial(g, l.stride);
                break;
            case LayerKind::PoolOrientation:
                return orientation_pool(g, l.pool_mode);
        }
    }
    // validate() guarantees the orientation pool terminates the stack
    (void)have_map;
    throw std::logic_error("forward: network has no orientation pool");
}

namespace {

// Phase-combination of cached atom maps: the training route's conv layer.
// For lifts, offsets == 1 and phi is absent (U indexed by input channel).
Tensor combine_atom_maps(const Tensor& U, const FilterWeights& w, const SteerableBasis& basis,
                         int Lambda) {
    const int A = basis.atom_count();
    const int Ho = U.extent(2), Wo = U.extent(3);
    const std::size_t px = static_cast<std::size_t>(Ho) * Wo;
    Tensor out = Tensor::zeros({w.out_ch, Lambda, Ho, Wo});

    std::vector<double> pre(static_cast<std::size_t>(A) * Lambda);
    std::vector<double> pim(static_cast<std::size_t>(A) * Lambda);
    for (int t = 0; t < Lambda; ++t) {
        const double th = std::remainder(2.0 * M_PI * t / Lambda, 2.0 * M_PI);
        for (int a = 0; a < A; ++a) {
            const int k = basis.atom(a).k;
            pre[static_cast<std::size_t>(a) * Lambda + t] = std::cos(k * th);
            pim[static_cast<std::size_t>(a) * Lambda + t] = -std::sin(k * th);
        }
    }

    for (int co = 0; co < w.out_ch; ++co)
        for (int t = 0; t < Lambda; ++t) {
            double* dst = out.raw() + (static_cast<std::size_t>(co) * Lambda + t) * px;
            const double beta = w.bias[static_cast<std::size_t>(co)];
            for (std::size_t i = 0; i < px; ++i) dst[i] = beta;
            for (int c = 0; c < w.in_ch; ++c)
                for (int o = 0; o < w.offsets; ++o) {
                    // for group layers the offset o pairs with input slice
                    // phi = (t - o) mod Lambda; lifts have the single o = 0
                    const int phi = (w.offsets == 1) ? 0 : (((t - o) % Lambda + Lambda) % Lambda);
                    const int uplane = (w.offsets == 1) ? c : c * Lambda + phi;
                    for (int a = 0; a < A; ++a) {
                        const double wre = w.re.at(co, c, o, a);
                        const double wim = w.im.at(co, c, o, a);
                        const double phr = pre[static_cast<std::size_t>(a) * Lambda + t];
                        const double phi_im = pim[static_cast<std::size_t>(a) * Lambda + t];
                        const double cre = wre * phr - wim * phi_im;
                        const double cim = wre * phi_im + wim * phr;
                        const double* u = U.raw() +
                                          ((static_cast<std::size_t>(uplane) * A + a) * px) * 2;
                        for (std::size_t i = 0; i < px; ++i)
                            dst[i] += cre * u[2 * i] - cim * u[2 * i + 1];
                    }
                }
        }
    return out;
}

} // namespace

Tensor forward_train(const Network& net, const ImagePatch& img, ForwardCache& cache) {
    net.validate();
    cache = ForwardCache{};
    cache.input_shape = img.data.shape();

    const int Lambda = net.spec.group.Lambda;
    GroupFeatureMap g;
    std::size_t p = 0;
    for (const LayerSpec& l : net.spec.layers) {
        switch (l.kind) {
            case LayerKind::Lift: {
                const FilterWeights& w = net.params[p++];
                if (img.channels() != w.in_ch) {
                    throw std::invalid_argument("forward_train: image channels do not match lift");
                }
                check_stride_tiles(img.height(), img.width(), net.basis.S(), l.stride);
                LayerCache lc;
                lc.atom_maps = atom_maps_for_planes(img.data, net.basis, l.stride);
                g = GroupFeatureMap(combine_atom_maps(lc.atom_maps, w, net.basis, Lambda),
                                    net.spec.group);
                finish_conv_layer(l, g, &lc);
                cache.layers.push_back(std::move(lc));
                break;
            }
            case LayerKind::Group: {
                const FilterWeights& w = net.params[p++];
                check_stride_tiles(g.height(), g.width(), net.basis.S(), l.stride);
                LayerCache lc;
                const Tensor flat = Tensor::from_data(
                    {g.channels() * Lambda, g.height(), g.width()}, g.data.storage());
                lc.atom_maps = atom_maps_for_planes(flat, net.basis, l.stride);
                g = GroupFeatureMap(combine_atom_maps(lc.atom_maps, w, net.basis, Lambda),
                                    net.spec.group);
                finish_conv_layer(l, g, &lc);
                cache.layers.push_back(std::move(lc));
                break;
            }
            case LayerKind::PoolSpatial:
                throw std::invalid_argument("forward_train: spatial pooling is not supported on the training route");
            case LayerKind::PoolOrientation: {
                const int C = g.channels(), H = g.height(), W = g.width();
                Tensor out = Tensor::zeros({C, H, W});
                cache.pool_argmax = Tensor::zeros({C, H, W});
                if (l.pool_mode == PoolMode::Max) {
                    for (int c = 0; c < C; ++c)
                        for (int y = 0; y < H; ++y)
                            for (int x = 0; x < W; ++x) {
                                int best = 0;
                                double bv = g.data.at(c, 0, y, x);
                                for (int lam = 1; lam < Lambda; ++lam) {
                                    const double v = g.data.at(c, lam, y, x);
                                    if (v > bv) {
                                        bv = v;
                                        best = lam;
                                    }
                                }
                                out.at(c, y, x) = bv;
                                cache.pool_argmax.at(c, y, x) = best;
                            }
                } else {
                    for (int c = 0; c < C; ++c)
                        for (int y = 0; y < H; ++y)
                            for (int x = 0; x < W; ++x) {
                                double s = 0.0;
                                for (int lam = 0; lam < Lambda; ++lam) s += g.data.at(c, lam, y, x);
                                out.at(c, y, x) = s / Lambda;
                            }
                }
                cache.output = out;
                return out;
            }
        }
    }
    throw std::logic_error("forward_train: network has no orientation pool");
}

} // namespace resiam
