#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "resiam/net.hpp"
#include "resiam/rng.hpp"

#include "plain_cnn.hpp"

using namespace resiam;

namespace {

Tensor random_tensor(Rng& rng, const std::vector<int>& shape) {
    Tensor t = Tensor::zeros(shape);
    for (double& v : t.storage()) v = rng.gaussian();
    return t;
}

ImagePatch random_image(Rng& rng, int h, int w) {
    Tensor t = Tensor::zeros({1, h, w});
    for (double& v : t.storage()) v = 0.5 + 0.2 * rng.gaussian();
    return ImagePatch(std::move(t));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (std::size_t i = 0; i < a.storage().size(); ++i)
        m = std::max(m, std::abs(a.storage()[i] - b.storage()[i]));
    return m;
}

} // namespace

TEST_CASE("group spec and feature map validation") {
    CHECK_THROWS_AS(GroupSpec::cyclic(0), std::invalid_argument);
    GroupSpec g = GroupSpec::cyclic(4);
    CHECK(g.angle(1) == doctest::Approx(M_PI / 2.0));
    CHECK(g.angles().size() == 4);
    CHECK(g.angles()[0] == 0.0);

    CHECK_THROWS_AS(GroupFeatureMap(Tensor::zeros({2, 3, 5, 5}), g), std::invalid_argument);
    CHECK_THROWS_AS(GroupFeatureMap(Tensor::zeros({2, 5, 5}), g), std::invalid_argument);
    GroupFeatureMap ok(Tensor::zeros({2, 4, 5, 5}), g);
    CHECK(ok.channels() == 2);
    CHECK(ok.orientations() == 4);
}

TEST_CASE("network spec validation rules") {
    GroupSpec g = GroupSpec::cyclic(4);

    NetworkSpec ok;
    ok.group = g;
    ok.layers = {LayerSpec::lift(1, 4, 3, 2, true, true),
                 LayerSpec::group(4, 8, 3, 1, true, true),
                 LayerSpec::pool_orientation()};
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.total_stride() == 2);
    CHECK(ok.conv_layer_count() == 2);

    NetworkSpec no_pool = ok;
    no_pool.layers.pop_back();
    CHECK_THROWS_AS(no_pool.validate(), std::invalid_argument);

    NetworkSpec pool_mid = ok;
    std::swap(pool_mid.layers[1], pool_mid.layers[2]);
    CHECK_THROWS_AS(pool_mid.validate(), std::invalid_argument);

    NetworkSpec group_first = ok;
    group_first.layers[0].kind = LayerKind::Group;
    CHECK_THROWS_AS(group_first.validate(), std::invalid_argument);

    NetworkSpec lift_later = ok;
    lift_later.layers[1].kind = LayerKind::Lift;
    CHECK_THROWS_AS(lift_later.validate(), std::invalid_argument);

    NetworkSpec bad_chain = ok;
    bad_chain.layers[1].in_ch = 5;
    CHECK_THROWS_AS(bad_chain.validate(), std::invalid_argument);
}

TEST_CASE("instance_norm: statistics, shape-collapse identity, permutation equivariance") {
    Rng rng(61);
    Tensor x = random_tensor(rng, {3, 4, 6, 6});
    for (double& v : x.storage()) v = 2.0 * v + 1.0;
    Tensor y = instance_norm(x);

    const std::size_t n = 4 * 6 * 6;
    for (int c = 0; c < 3; ++c) {
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += y.raw()[c * n + i];
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = y.raw()[c * n + i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        CHECK(std::abs(mean) < 1e-12);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));   // eps=1e-5 shrinks it slightly
    }

    // [C,1,H,W] and [C,H,W] flavors are byte-identical
    Tensor g4 = random_tensor(rng, {3, 1, 5, 5});
    Tensor g3 = Tensor::from_data({3, 5, 5}, g4.storage());
    CHECK(instance_norm(g4).storage() == instance_norm(g3).storage());

    // joint statistics over (Lambda,H,W) commute with the group action
    GroupFeatureMap f(random_tensor(rng, {2, 4, 5, 5}), GroupSpec::cyclic(4));
    GroupFeatureMap rf = rotate_group_feature_map(f, 1);
    Tensor a = instance_norm(rf.data);
    GroupFeatureMap nf(instance_norm(f.data), f.group);
    Tensor b = rotate_group_feature_map(nf, 1).data;
    CHECK(max_abs_diff(a, b) <= 1e-12);
}

TEST_CASE("rotate_group_feature_map shifts the orientation axis with the rotation") {
    Rng rng(62);
    GroupFeatureMap f(random_tensor(rng, {2, 4, 3, 3}), GroupSpec::cyclic(4));

    GroupFeatureMap r1 = rotate_group_feature_map(f, 1);
    for (int c = 0; c < 2; ++c)
        for (int lam = 0; lam < 4; ++lam)
            for (int y = 0; y < 3; ++y)
                for (int x = 0; x < 3; ++x)
                    CHECK(r1.data.at(c, (lam + 1) % 4, y, x) ==
                          f.data.at(c, lam, x, 3 - 1 - y));   // rotate90 q=1 source

    GroupFeatureMap r2 = rotate_group_feature_map(rotate_group_feature_map(f, 1), 1);
    CHECK(r2.data.storage() == rotate_group_feature_map(f, 2).data.storage());
    GroupFeatureMap r4 = rotate_group_feature_map(rotate_group_feature_map(f, 2), 2);
    CHECK(r4.data.storage() == f.data.storage());

    // Lambda=8: a quarter turn advances the orientation index by 2
    GroupFeatureMap f8(random_tensor(rng, {1, 8, 3, 3}), GroupSpec::cyclic(8));
    GroupFeatureMap r8 = rotate_group_feature_map(f8, 1);
    for (int lam = 0; lam < 8; ++lam)
        CHECK(r8.data.at(0, (lam + 2) % 8, 1, 1) == f8.data.at(0, lam, 1, 1));

    GroupFeatureMap f2(random_tensor(rng, {1, 2, 3, 3}), GroupSpec::cyclic(2));
    CHECK_THROWS_AS(rotate_group_feature_map(f2, 1), std::invalid_argument);
    CHECK_NOTHROW(rotate_group_feature_map(f2, 2));
}

TEST_CASE("lift_conv: isotropic weights give identical orientation slices") {
    SteerableBasis b = default_basis(3, 4);
    Rng rng(63);
    FilterWeights w = random_filter_weights(rng, 3, 1, 1, b);
    for (int a = 0; a < b.atom_count(); ++a)
        if (b.atom(a).k != 0)
            for (int co = 0; co < 3; ++co) {
                w.re.at(co, 0, 0, a) = 0.0;
                w.im.at(co, 0, 0, a) = 0.0;
            }
    ImagePatch img = random_image(rng, 9, 9);
    GroupFeatureMap out = lift_conv(img, w, b, GroupSpec::cyclic(4), 2);
    const std::size_t px = 4 * 4;
    for (int co = 0; co < 3; ++co)
        for (int lam = 1; lam < 4; ++lam)
            for (std::size_t i = 0; i < px; ++i)
                CHECK(out.data.raw()[(co * 4 + lam) * px + i] ==
                      out.data.raw()[(co * 4 + 0) * px + i]);
}

TEST_CASE("lift_conv at Lambda=1 is conv2d with the steered kernel plus bias") {
    SteerableBasis b = default_basis(3, 1);
    Rng rng(64);
    FilterWeights w = random_filter_weights(rng, 2, 1, 1, b);
    for (std::size_t i = 0; i < w.bias.size(); ++i) w.bias[i] = 0.1 * (1.0 + static_cast<double>(i));
    ImagePatch img = random_image(rng, 9, 9);

    GroupFeatureMap out = lift_conv(img, w, b, GroupSpec::cyclic(1), 1);
    Tensor want = conv2d(img.data, steer(w, b, 0.0), 1);
    const std::size_t px = 7 * 7;
    for (int co = 0; co < 2; ++co)
        for (std::size_t i = 0; i < px; ++i)
            CHECK(out.data.raw()[co * px + i] ==
                  want.raw()[co * px + i] + w.bias[static_cast<std::size_t>(co)]);
}

TEST_CASE("lift_conv equivariance: rotated image gives rotated+shifted response") {
    SteerableBasis b = default_basis(3, 4);
    Rng rng(65);
    for (int trial = 0; trial < 3; ++trial) {
        FilterWeights w = random_filter_weights(rng, 2, 1, 1, b);
        ImagePatch img = random_image(rng, 9, 9);
        for (int q = 1; q <= 3; ++q) {
            ImagePatch rot(rotate90(img.data, q));
            GroupFeatureMap out_rot = lift_conv(rot, w, b, GroupSpec::cyclic(4), 2);
            GroupFeatureMap out = lift_conv(img, w, b, GroupSpec::cyclic(4), 2);
            GroupFeatureMap want = rotate_group_feature_map(out, q);
            CHECK(max_abs_diff(out_rot.data, want.data) <= 1e-6);
        }
    }
}

TEST_CASE("lift_conv validation") {
    SteerableBasis b = default_basis(3, 4);
    Rng rng(66);
    FilterWeights w = random_filter_weights(rng, 2, 1, 1, b);
    ImagePatch img = random_image(rng, 9, 9);
    CHECK_THROWS_AS(lift_conv(img, w, b, GroupSpec::cyclic(8), 2), std::invalid_argument);
    FilterWeights w3 = random_filter_weights(rng, 2, 3, 1, b);
    CHECK_THROWS_AS(lift_conv(img, w3, b, GroupSpec::cyclic(4), 2), std::invalid_argument);
    ImagePatch bad = random_image(rng, 8, 8);   // (8-3) % 2 != 0
    CHECK_THROWS_AS(lift_conv(bad, w, b, GroupSpec::cyclic(4), 2), std::invalid_argument);
    FilterWeights wg = random_filter_weights(rng, 2, 1, 4, b);
    CHECK_THROWS_AS(lift_conv(img, wg, b, GroupSpec::cyclic(4), 2), std::invalid_argument);
}

TEST_CASE("group_conv at Lambda=1 collapses to plain conv2d") {
    SteerableBasis b = default_basis(3, 1);
    Rng rng(67);
    FilterWeights w = random_filter_weights(rng, 3, 2, 1, b);
    Tensor data = random_tensor(rng, {2, 1, 9, 9});
    GroupFeatureMap f(data, GroupSpec::cyclic(1));

    GroupFeatureMap out = group_conv(f, w, b, 1);
    Tensor flat = Tensor::from_data({2, 9, 9}, data.storage());
    Tensor want = conv2d(flat, steer(w, b, 0.0), 1);
    const std::size_t px = 7 * 7;
    for (int co = 0; co < 3; ++co)
        for (std::size_t i = 0; i < px; ++i)
            CHECK(out.data.raw()[co * px + i] ==
                  want.raw()[co * px + i] + w.bias[static_cast<std::size_t>(co)]);
}

TEST_CASE("group_conv diagonal weights act per matching orientation slice") {
    SteerableBasis b = default_basis(3, 4);
    Rng rng(68);
    FilterWeights w = zero_filter_weights(3, 2, 4, b);
    // populate only offset 0, k=0 atoms
    for (int co = 0; co < 3; ++co)
        for (int ci = 0; ci < 2; ++ci)
            for (int a = 0; a < b.atom_count(); ++a)
                if (b.atom(a).k == 0) w.re.at(co, ci, 0, a) = rng.gaussian();

    GroupFeatureMap f(random_tensor(rng, {2, 4, 9, 9}), GroupSpec::cyclic(4));
    GroupFeatureMap out = group_conv(f, w, b, 1);

    // oracle: offset-0 kernels at theta=0 applied slice-by-slice
    Tensor steered = steer(w, b, 0.0);   // [3, 2*4, S, S], offset 0 at plane ci*4
    Tensor kernels = Tensor::zeros({3, 2, 3, 3});
    for (int co = 0; co < 3; ++co)
        for (int ci = 0; ci < 2; ++ci)
            for (int u = 0; u < 3; ++u)
                for (int v = 0; v < 3; ++v)
                    kernels.at(co, ci, u, v) = steered.at(co, ci * 4 + 0, u, v);

    for (int t = 0; t < 4; ++t) {
        Tensor slice = Tensor::zeros({2, 9, 9});
        for (int c = 0; c < 2; ++c)
            for (int y = 0; y < 9; ++y)
                for (int x = 0; x < 9; ++x) slice.at(c, y, x) = f.data.at(c, t, y, x);
        Tensor want = conv2d(slice, kernels, 1);
        for (int co = 0; co < 3; ++co)
            for (int y = 0; y < 7; ++y)
                for (int x = 0; x < 7; ++x)
                    CHECK(std::abs(out.data.at(co, t, y, x) - want.at(co, y, x)) <= 1e-10);
    }
}

TEST_CASE("group_conv equivariance on the regular representation") {
    SteerableBasis b = default_basis(3, 4);
    Rng rng(69);
    for (int trial = 0; trial < 3; ++trial) {
        FilterWeights w = random_filter_weights(rng, 3, 2, 4, b);
        GroupFeatureMap f(random_tensor(rng, {2, 4, 9, 9}), GroupSpec::cyclic(4));
        for (int q = 1; q <= 3; ++q) {
            GroupFeatureMap fr = rotate_group_feature_map(f, q);
            GroupFeatureMap out_rot = group_conv(fr, w, b, 2);
            GroupFeatureMap want = rotate_group_feature_map(group_conv(f, w, b, 2), q);
            CHECK(max_abs_diff(out_rot.data, want.data) <= 1e-6);
        }
    }
}

TEST_CASE("group_conv validation") {
    SteerableBasis b = default_basis(3, 4);
    Rng rng(70);
    GroupFeatureMap f(random_tensor(rng, {2, 4, 9, 9}), GroupSpec::cyclic(4));
    FilterWeights lift_w = random_filter_weights(rng, 3, 2, 1, b);
    CHECK_THROWS_AS(group_conv(f, lift_w, b, 1), std::invalid_argument);
    FilterWeights wrong_ch = random_filter_weights(rng, 3, 5, 4, b);
    CHECK_THROWS_AS(group_conv(f, wrong_ch, b, 1), std::invalid_argument);
    SteerableBasis b8 = default_basis(3, 8);
    FilterWeights w8 = random_filter_weights(rng, 3, 2, 8, b8);
    CHECK_THROWS_AS(group_conv(f, w8, b8, 1), std::invalid_argument);
}

TEST_CASE("orientation_pool: max envelope, mean, equal slices, rotation") {
    Rng rng(71);
    GroupFeatureMap f(random_tensor(rng, {2, 4, 5, 5}), GroupSpec::cyclic(4));

    Tensor mx = orientation_pool(f, PoolMode::Max);
    Tensor mn = orientation_pool(f, PoolMode::Mean);
    for (int c = 0; c < 2; ++c)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x) {
                double wmax = f.data.at(c, 0, y, x), wsum = 0.0;
                for (int lam = 0; lam < 4; ++lam) {
                    wmax = std::max(wmax, f.data.at(c, lam, y, x));
                    wsum += f.data.at(c, lam, y, x);
                }
                CHECK(mx.at(c, y, x) == wmax);
                CHECK(mn.at(c, y, x) == doctest::Approx(wsum / 4.0).epsilon(1e-12));
            }

    // equal slices -> pooled output equals the slice
    Tensor eq = Tensor::zeros({1, 4, 3, 3});
    for (int lam = 0; lam < 4; ++lam)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) eq.at(0, lam, y, x) = y * 3.0 + x;
    Tensor eqp = orientation_pool(GroupFeatureMap(eq, GroupSpec::cyclic(4)), PoolMode::Max);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) CHECK(eqp.at(0, y, x) == y * 3.0 + x);

    // pooled output is invariant along orientation, equivariant in space
    GroupFeatureMap fr = rotate_group_feature_map(f, 1);
    CHECK(max_abs_diff(orientation_pool(fr, PoolMode::Max),
                       rotate90(orientation_pool(f, PoolMode::Max), 1)) <= 1e-6);
}

TEST_CASE("pool_spatial: 2x2 max and divisibility guard") {
    Rng rng(72);
    GroupFeatureMap f(random_tensor(rng, {1, 2, 4, 4}), GroupSpec::cyclic(2));
    GroupFeatureMap p = pool_spatial(f, 2);
    CHECK(p.height() == 2);
    for (int lam = 0; lam < 2; ++lam)
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 2; ++x) {
                double m = -1e300;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        m = std::max(m, f.data.at(0, lam, 2 * y + dy, 2 * x + dx));
                CHECK(p.data.at(0, lam, y, x) == m);
            }
    GroupFeatureMap odd(random_tensor(rng, {1, 2, 5, 5}), GroupSpec::cyclic(2));
    CHECK_THROWS_AS(pool_spatial(odd, 2), std::invalid_argument);
}

TEST_CASE("desk presets: pinned channels and matched parameter counts") {
    CHECK(desk_channels(4) == std::vector<int>{8, 16, 16, 16});
    CHECK(desk_channels(1) == std::vector<int>{11, 22, 23, 23});
    CHECK(desk_channels(8) == std::vector<int>{6, 8, 7, 8});
    CHECK_THROWS_AS(desk_channels(2), std::invalid_argument);

    Network r4 = desk_network(4, 1);
    Network r1 = desk_network(1, 1);
    Network r8 = desk_network(8, 1);
    CHECK(r4.param_count() == 10328);
    CHECK(r1.param_count() == 10383);
    CHECK(r8.param_count() == 10317);
    const double ref = static_cast<double>(r4.param_count());
    CHECK(std::abs(static_cast<double>(r1.param_count()) - ref) / ref <= 0.02);
    CHECK(std::abs(static_cast<double>(r8.param_count()) - ref) / ref <= 0.02);

    CHECK(r4.spec.total_stride() == 4);
}

TEST_CASE("forward: zero image with zero biases gives zero output") {
    Network net = desk_network(4, 7);
    for (FilterWeights& w : net.params)
        for (double& b : w.bias) b = 0.0;
    ImagePatch img(Tensor::zeros({1, 27, 27}));
    Tensor out = forward(net, img);
    for (double v : out.storage()) CHECK(v == 0.0);
}

TEST_CASE("forward at Lambda=1 matches the plain-CNN reference byte for byte") {
    Rng rng(73);
    Network net = desk_network(1, 99);
    ImagePatch img = random_image(rng, 27, 27);
    Tensor got = forward(net, img);
    Tensor want = plain_cnn_forward(net, img);
    REQUIRE(got.same_shape(want));
    CHECK(got.storage() == want.storage());
}

TEST_CASE("forward end-to-end equivariance for the exact subgroup") {
    Rng rng(74);
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        Network net = desk_network(4, seed);
        ImagePatch img = random_image(rng, 27, 27);
        Tensor base = forward(net, img);
        for (int q = 1; q <= 3; ++q) {
            ImagePatch rot(rotate90(img.data, q));
            Tensor out = forward(net, rot);
            CHECK(max_abs_diff(out, rotate90(base, q)) <= 1e-5);
        }
    }
}

TEST_CASE("training route agrees with the inference route") {
    Rng rng(75);
    for (int lambda : {1, 4, 8}) {
        Network net = desk_network(lambda, 1234);
        ImagePatch img = random_image(rng, 27, 27);
        Tensor a = forward(net, img);
        ForwardCache cache;
        Tensor b = forward_train(net, img, cache);
        CHECK(max_abs_diff(a, b) <= 1e-10);

        REQUIRE(cache.layers.size() == 4);
        CHECK(cache.output.storage() == b.storage());
        for (const LayerCache& lc : cache.layers) {
            CHECK(lc.atom_maps.is_complex());
            CHECK(lc.conv_out.rank() == 4);
            CHECK(lc.norm_out.same_shape(lc.conv_out));
        }
        CHECK(cache.layers[0].inv_std.size() == static_cast<std::size_t>(desk_channels(lambda)[0]));
        CHECK(cache.layers[3].inv_std.empty());
        for (double v : cache.pool_argmax.storage()) {
            CHECK(v >= 0.0);
            CHECK(v < lambda);
        }
    }
}

TEST_CASE("network validation catches mismatched weights") {
    Network net = desk_network(4, 5);
    CHECK_NOTHROW(net.validate());

    Network missing = net;
    missing.params.pop_back();
    CHECK_THROWS_AS(missing.validate(), std::invalid_argument);

    Network wrong_basis = net;
    wrong_basis.basis = default_basis(3, 8);
    CHECK_THROWS_AS(wrong_basis.validate(), std::invalid_argument);

    Network wrong_off = net;
    wrong_off.params[1].offsets = 1;
    CHECK_THROWS_AS(wrong_off.validate(), std::invalid_argument);
}
