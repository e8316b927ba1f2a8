#include "resiam/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>

#include "resiam/tracker.hpp"

namespace resiam {

namespace {

double softplus(double z) {
    // log(1 + exp(z)) without overflow.
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_scores(const Tensor& scores, const LabelMap& lm, const char* who) {
    if (scores.rank() != 2 || scores.is_complex())
        throw std::invalid_argument(std::string(who) + ": scores must be a real rank-2 map, got " +
                                    scores.shape_str());
    if (!scores.same_shape(lm.labels) || !scores.same_shape(lm.weights))
        throw std::invalid_argument(std::string(who) + ": scores " + scores.shape_str() +
                                    " do not match label map " + lm.labels.shape_str());
}

// Phase factors of atom a at group angle index t, matching the forward route.
struct PhaseTable {
    std::vector<double> re;   // cos(k * theta_t)
    std::vector<double> im;   // -sin(k * theta_t)
    int Lambda = 0;

    PhaseTable(const SteerableBasis& basis, int Lambda_) : Lambda(Lambda_) {
        const int A = basis.atom_count();
        re.resize(static_cast<std::size_t>(A) * Lambda);
        im.resize(static_cast<std::size_t>(A) * Lambda);
        for (int t = 0; t < Lambda; ++t) {
            const double th = std::remainder(2.0 * M_PI * t / Lambda, 2.0 * M_PI);
            for (int a = 0; a < A; ++a) {
                const int k = basis.atom(a).k;
                re[static_cast<std::size_t>(a) * Lambda + t] = std::cos(k * th);
                im[static_cast<std::size_t>(a) * Lambda + t] = -std::sin(k * th);
            }
        }
    }
    double pr(int a, int t) const { return re[static_cast<std::size_t>(a) * Lambda + t]; }
    double pi(int a, int t) const { return im[static_cast<std::size_t>(a) * Lambda + t]; }
};

// Backward of one phase-combined conv layer. d_out is [out_ch, Lambda, Ho, Wo];
// returns the gradient w.r.t. the layer's input planes ([P, Hin, Win]).
Tensor conv_layer_backward(const FilterWeights& w, const SteerableBasis& basis, int Lambda,
                           int stride, const Tensor& atom_maps, const Tensor& d_out,
                           FilterWeights& grad) {
    const int A = basis.atom_count();
    const int S = basis.S();
    const int Ho = d_out.extent(2);
    const int Wo = d_out.extent(3);
    const std::size_t px = static_cast<std::size_t>(Ho) * Wo;
    const int planes = atom_maps.extent(0);
    const PhaseTable ph(basis, Lambda);

    Tensor d_atoms = Tensor::zeros_complex({planes, A, Ho, Wo});

    for (int co = 0; co < w.out_ch; ++co)
        for (int t = 0; t < Lambda; ++t) {
            const double* dout =
                d_out.raw() + (static_cast<std::size_t>(co) * Lambda + t) * px;
            double dsum = 0.0;
            for (std::size_t i = 0; i < px; ++i) dsum += dout[i];
            grad.bias[static_cast<std::size_t>(co)] += dsum;
            for (int c = 0; c < w.in_ch; ++c)
                for (int o = 0; o < w.offsets; ++o) {
                    const int phi = (w.offsets == 1) ? 0 : (((t - o) % Lambda + Lambda) % Lambda);
                    const int uplane = (w.offsets == 1) ? c : c * Lambda + phi;
                    for (int a = 0; a < A; ++a) {
                        const double wre = w.re.at(co, c, o, a);
                        const double wim = w.im.at(co, c, o, a);
                        const double phr = ph.pr(a, t);
                        const double phim = ph.pi(a, t);
                        const double cre = wre * phr - wim * phim;
                        const double cim = wre * phim + wim * phr;
                        const double* u = atom_maps.raw() +
                                          ((static_cast<std::size_t>(uplane) * A + a) * px) * 2;
                        double* du = d_atoms.raw() +
                                     ((static_cast<std::size_t>(uplane) * A + a) * px) * 2;
                        double gre = 0.0;
                        double gim = 0.0;
                        for (std::size_t i = 0; i < px; ++i) {
                            const double d = dout[i];
                            gre += d * (phr * u[2 * i] - phim * u[2 * i + 1]);
                            gim += d * (-phim * u[2 * i] - phr * u[2 * i + 1]);
                            du[2 * i] += cre * d;
                            du[2 * i + 1] += -cim * d;
                        }
                        grad.re.at(co, c, o, a) += gre;
                        grad.im.at(co, c, o, a) += gim;
                    }
                }
        }

    // Transposed correlation: route d_atoms back through the atom grids.
    const int Hin = (Ho - 1) * stride + S;
    const int Win = (Wo - 1) * stride + S;
    Tensor d_in = Tensor::zeros({planes, Hin, Win});
    for (int p = 0; p < planes; ++p)
        for (int a = 0; a < A; ++a) {
            const double* g = basis.atom(a).grid.raw();
            const double* du =
                d_atoms.raw() + ((static_cast<std::size_t>(p) * A + a) * px) * 2;
            for (int y = 0; y < Ho; ++y)
                for (int x = 0; x < Wo; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * Wo + x;
                    const double dre = du[2 * i];
                    const double dim = du[2 * i + 1];
                    if (dre == 0.0 && dim == 0.0) continue;
                    for (int u_ = 0; u_ < S; ++u_) {
                        double* row = d_in.raw() +
                                      (static_cast<std::size_t>(p) * Hin + (y * stride + u_)) * Win +
                                      x * stride;
                        const double* grow = g + static_cast<std::size_t>(u_) * S * 2;
                        for (int v = 0; v < S; ++v)
                            row[v] += dre * grow[2 * v] + dim * grow[2 * v + 1];
                    }
                }
        }
    return d_in;
}

// Exact instance-norm backward using the cached normalized output and 1/std.
void norm_backward_inplace(Tensor& d, const Tensor& norm_out, const std::vector<double>& inv_std) {
    const int C = d.extent(0);
    const std::size_t slab = d.size() / static_cast<std::size_t>(C);
    for (int c = 0; c < C; ++c) {
        double* dv = d.raw() + static_cast<std::size_t>(c) * slab;
        const double* y = norm_out.raw() + static_cast<std::size_t>(c) * slab;
        double m1 = 0.0;
        double m2 = 0.0;
        for (std::size_t i = 0; i < slab; ++i) {
            m1 += dv[i];
            m2 += dv[i] * y[i];
        }
        m1 /= static_cast<double>(slab);
        m2 /= static_cast<double>(slab);
        const double r = inv_std[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < slab; ++i) dv[i] = r * (dv[i] - m1 - y[i] * m2);
    }
}

void check_grad_shapes(const Network& net, const std::vector<FilterWeights>& grads,
                       const char* who) {
    if (grads.size() != net.params.size())
        throw std::invalid_argument(std::string(who) + ": gradient layer count mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        const FilterWeights& g = grads[i];
        const FilterWeights& p = net.params[i];
        if (g.out_ch != p.out_ch || g.in_ch != p.in_ch || g.offsets != p.offsets ||
            !g.re.same_shape(p.re) || !g.im.same_shape(p.im) || g.bias.size() != p.bias.size())
            throw std::invalid_argument(std::string(who) + ": gradient shape mismatch at layer " +
                                        std::to_string(i));
    }
}

void axpy_params(FilterWeights& dst, const FilterWeights& src, double alpha) {
    for (std::size_t i = 0; i < dst.re.storage().size(); ++i)
        dst.re.storage()[i] += alpha * src.re.storage()[i];
    for (std::size_t i = 0; i < dst.im.storage().size(); ++i)
        dst.im.storage()[i] += alpha * src.im.storage()[i];
    for (std::size_t i = 0; i < dst.bias.size(); ++i) dst.bias[i] += alpha * src.bias[i];
}

} // namespace

void TrainConfig::validate() const {
    if (!(lr_final > 0.0) || !(lr_initial >= lr_final))
        throw std::invalid_argument("TrainConfig: need lr_initial >= lr_final > 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("TrainConfig: momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0)) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (steps_per_epoch < 1) throw std::invalid_argument("TrainConfig: steps_per_epoch must be >= 1");
    if (checkpoint_every < 0)
        throw std::invalid_argument("TrainConfig: checkpoint_every must be >= 0");
}

double learning_rate(const TrainConfig& cfg, int step, int total_steps) {
    if (step < 0 || (total_steps > 0 && step >= total_steps))
        throw std::invalid_argument("learning_rate: step out of range");
    if (total_steps <= 1) return cfg.lr_initial;
    const double frac = static_cast<double>(step) / (total_steps - 1);
    return cfg.lr_initial * std::pow(cfg.lr_final / cfg.lr_initial, frac);
}

LabelMap make_label_map(int h, int w, double cy, double cx, double radius) {
    if (h < 1 || w < 1) throw std::invalid_argument("make_label_map: empty map");
    if (!(radius >= 0.0)) throw std::invalid_argument("make_label_map: radius must be >= 0");
    LabelMap lm;
    lm.radius = radius;
    lm.labels = Tensor::zeros({h, w});
    lm.weights = Tensor::zeros({h, w});
    int n_pos = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
            const bool pos = d2 <= radius * radius;
            lm.labels.at(y, x) = pos ? 1.0 : -1.0;
            if (pos) ++n_pos;
        }
    const int n_neg = h * w - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("make_label_map: both classes must be non-empty");
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            lm.weights.at(y, x) = lm.labels.at(y, x) > 0.0 ? 0.5 / n_pos : 0.5 / n_neg;
    return lm;
}

double loss(const Tensor& scores, const LabelMap& lm) {
    check_scores(scores, lm, "loss");
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        total += lm.weights.storage()[i] *
                 softplus(-lm.labels.storage()[i] * scores.storage()[i]);
    return total;
}

Tensor loss_grad(const Tensor& scores, const LabelMap& lm) {
    check_scores(scores, lm, "loss_grad");
    Tensor g = Tensor::zeros_like(scores);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double l = lm.labels.storage()[i];
        g.storage()[i] = lm.weights.storage()[i] * (-l) *
                         sigmoid(-l * scores.storage()[i]);
    }
    return g;
}

NetGrads zero_grads(const Network& net) {
    NetGrads g;
    g.layers.reserve(net.params.size());
    for (const FilterWeights& w : net.params)
        g.layers.push_back(zero_filter_weights(w.out_ch, w.in_ch, w.offsets, net.basis));
    return g;
}

Tensor network_backward(const Network& net, const ForwardCache& cache, const Tensor& d_output,
                        std::vector<FilterWeights>& grads) {
    net.validate();
    check_grad_shapes(net, grads, "network_backward");
    if (cache.layers.size() != net.params.size())
        throw std::invalid_argument("network_backward: cache does not match the network");
    if (!d_output.same_shape(cache.output))
        throw std::invalid_argument("network_backward: upstream gradient " + d_output.shape_str() +
                                    " does not match cached output " + cache.output.shape_str());

    const int Lambda = net.spec.group.Lambda;

    // Orientation pool backward (validate() pins it as the final layer).
    const LayerSpec& pool = net.spec.layers.back();
    const int C = d_output.extent(0);
    const int H = d_output.extent(1);
    const int W = d_output.extent(2);
    Tensor d = Tensor::zeros({C, Lambda, H, W});
    if (pool.pool_mode == PoolMode::Max) {
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const int lam = static_cast<int>(cache.pool_argmax.at(c, y, x));
                    d.at(c, lam, y, x) = d_output.at(c, y, x);
                }
    } else {
        for (int c = 0; c < C; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    const double v = d_output.at(c, y, x) / Lambda;
                    for (int lam = 0; lam < Lambda; ++lam) d.at(c, lam, y, x) = v;
                }
    }

    // Conv layers in reverse.
    int p = static_cast<int>(net.params.size()) - 1;
    for (auto it = net.spec.layers.rbegin(); it != net.spec.layers.rend(); ++it) {
        const LayerSpec& l = *it;
        if (!l.is_conv()) continue;
        const FilterWeights& w = net.params[static_cast<std::size_t>(p)];
        const LayerCache& lc = cache.layers[static_cast<std::size_t>(p)];

        if (l.relu)
            for (std::size_t i = 0; i < d.size(); ++i)
                if (!(lc.norm_out.storage()[i] > 0.0)) d.storage()[i] = 0.0;
        if (l.norm) norm_backward_inplace(d, lc.norm_out, lc.inv_std);

        Tensor d_in = conv_layer_backward(w, net.basis, Lambda, l.stride, lc.atom_maps, d,
                                          grads[static_cast<std::size_t>(p)]);
        if (l.kind == LayerKind::Lift) return d_in;

        // Reshape the flat plane gradient back to [C_in, Lambda, H, W].
        d = Tensor::from_data({w.in_ch, Lambda, d_in.extent(1), d_in.extent(2)},
                              d_in.storage());
        --p;
    }
    throw std::logic_error("network_backward: network has no lift layer");
}

PairLoss siamese_backward(const Network& net, const TrackerHead& head, const ImagePatch& exemplar,
                          const ImagePatch& search, const LabelMap& labels) {
    ForwardCache cz;
    ForwardCache cx;
    const Tensor tz = forward_train(net, exemplar, cz);
    const Tensor tx = forward_train(net, search, cx);
    const Tensor h = correlate_single(tz, tx);

    // The response is a sum over every template element; dividing by that
    // count keeps the logits O(1) at any feature width, so one learning rate
    // serves the head and the convolutions.
    const double inv = 1.0 / static_cast<double>(tz.size());
    Tensor scores = Tensor::zeros_like(h);
    for (std::size_t i = 0; i < h.size(); ++i)
        scores.storage()[i] = head.gain * inv * h.storage()[i] + head.bias;

    PairLoss out;
    out.loss = loss(scores, labels);
    const Tensor ds = loss_grad(scores, labels);

    out.grads = zero_grads(net);
    double dgain = 0.0;
    double dbias = 0.0;
    Tensor dh = Tensor::zeros_like(h);
    for (std::size_t i = 0; i < h.size(); ++i) {
        dgain += ds.storage()[i] * inv * h.storage()[i];
        dbias += ds.storage()[i];
        dh.storage()[i] = head.gain * inv * ds.storage()[i];
    }
    out.grads.head_gain = dgain;
    out.grads.head_bias = dbias;

    // Correlation backward: dTx is dh spread by the template, dTz gathers search windows.
    const int C = tz.extent(0);
    const int th_ = tz.extent(1);
    const int tw = tz.extent(2);
    const int hh = h.extent(0);
    const int hw = h.extent(1);
    Tensor dtx = Tensor::zeros_like(tx);
    Tensor dtz = Tensor::zeros_like(tz);
    for (int y = 0; y < hh; ++y)
        for (int x = 0; x < hw; ++x) {
            const double dv = dh.at(y, x);
            if (dv == 0.0) continue;
            for (int c = 0; c < C; ++c)
                for (int u = 0; u < th_; ++u)
                    for (int v = 0; v < tw; ++v) {
                        dtx.at(c, y + u, x + v) += dv * tz.at(c, u, v);
                        dtz.at(c, u, v) += dv * tx.at(c, y + u, x + v);
                    }
        }

    network_backward(net, cx, dtx, out.grads.layers);
    network_backward(net, cz, dtz, out.grads.layers);
    return out;
}

SgdState zero_sgd_state(const Network& net) {
    SgdState s;
    s.velocity.reserve(net.params.size());
    for (const FilterWeights& w : net.params)
        s.velocity.push_back(zero_filter_weights(w.out_ch, w.in_ch, w.offsets, net.basis));
    return s;
}

void sgd_step(Network& net, TrackerHead& head, const NetGrads& grads, SgdState& state,
              const TrainConfig& cfg, int step, int total_steps) {
    cfg.validate();
    check_grad_shapes(net, grads.layers, "sgd_step");
    check_grad_shapes(net, state.velocity, "sgd_step");
    const double lr = learning_rate(cfg, step, total_steps);
    const double m = cfg.momentum;
    const double wd = cfg.weight_decay;

    auto update = [&](double& p, double& v, double g) {
        v = m * v + g + wd * p;
        p -= lr * v;
    };

    for (std::size_t i = 0; i < net.params.size(); ++i) {
        FilterWeights& p = net.params[i];
        FilterWeights& v = state.velocity[i];
        const FilterWeights& g = grads.layers[i];
        for (std::size_t j = 0; j < p.re.storage().size(); ++j)
            update(p.re.storage()[j], v.re.storage()[j], g.re.storage()[j]);
        for (std::size_t j = 0; j < p.im.storage().size(); ++j)
            update(p.im.storage()[j], v.im.storage()[j], g.im.storage()[j]);
        for (std::size_t j = 0; j < p.bias.size(); ++j)
            update(p.bias[j], v.bias[j], g.bias[j]);
    }
    update(head.gain, state.v_gain, grads.head_gain);
    update(head.bias, state.v_bias, grads.head_bias);
}

TrainResult train(const Network& net, const TrackerHead& head, const PairSampler& sampler,
                  const TrainConfig& cfg, const CheckpointFn& checkpoint) {
    cfg.validate();
    net.validate();
    TrainResult res{net, head, {}};
    const int total = cfg.total_steps();
    if (total == 0) return res;
    if (!sampler) throw std::invalid_argument("train: empty pair sampler");

    Rng rng(cfg.seed);
    SgdState state = zero_sgd_state(net);
    res.trace.reserve(static_cast<std::size_t>(total));

    for (int step = 0; step < total; ++step) {
        NetGrads acc = zero_grads(res.net);
        double batch_loss = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            TrainSample sample = sampler(rng);
            PairLoss pl = siamese_backward(res.net, res.head, sample.exemplar, sample.search,
                                           sample.labels);
            batch_loss += pl.loss;
            for (std::size_t i = 0; i < acc.layers.size(); ++i)
                axpy_params(acc.layers[i], pl.grads.layers[i], 1.0);
            acc.head_gain += pl.grads.head_gain;
            acc.head_bias += pl.grads.head_bias;
        }
        const double inv_b = 1.0 / cfg.batch_size;
        batch_loss *= inv_b;
        for (FilterWeights& g : acc.layers) {
            for (double& v : g.re.storage()) v *= inv_b;
            for (double& v : g.im.storage()) v *= inv_b;
            for (double& v : g.bias) v *= inv_b;
        }
        acc.head_gain *= inv_b;
        acc.head_bias *= inv_b;

        if (!std::isfinite(batch_loss))
            throw std::runtime_error("train: loss diverged (non-finite) at step " +
                                     std::to_string(step));

        const double lr = learning_rate(cfg, step, total);
        res.trace.push_back({step, lr, batch_loss});
        sgd_step(res.net, res.head, acc, state, cfg, step, total);

        if (checkpoint && cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0)
            checkpoint(step, res.net, res.head);
    }
    return res;
}

void SamplerConfig::validate() const {
    if (exemplar_size < 1 || search_size < exemplar_size)
        throw std::invalid_argument("SamplerConfig: need search_size >= exemplar_size >= 1");
    if (response < 1 || stride < 1)
        throw std::invalid_argument("SamplerConfig: response and stride must be >= 1");
    if (context < 0.0) throw std::invalid_argument("SamplerConfig: context must be >= 0");
    if (max_gap < 0 || max_offset < 0)
        throw std::invalid_argument("SamplerConfig: max_gap and max_offset must be >= 0");
    if (!(label_radius > 0.0))
        throw std::invalid_argument("SamplerConfig: label_radius must be > 0");
    if (max_offset > (response - 1) / 2 * stride)
        throw std::invalid_argument("SamplerConfig: max_offset pushes labels off the response");
}

PairSampler make_pair_sampler(std::vector<StoredSequence> sequences, const SamplerConfig& cfg) {
    cfg.validate();
    if (sequences.empty()) throw std::invalid_argument("make_pair_sampler: no sequences");
    for (const StoredSequence& s : sequences) {
        if (s.frames.empty() || s.frames.size() != s.groundtruth.size())
            throw std::invalid_argument("make_pair_sampler: malformed sequence");
    }
    auto data = std::make_shared<const std::vector<StoredSequence>>(std::move(sequences));
    return [data, cfg](Rng& rng) -> TrainSample {
        const StoredSequence& seq =
            (*data)[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(data->size()) - 1))];
        const int last = static_cast<int>(seq.frames.size()) - 1;
        const int a = rng.uniform_int(0, last);
        const int b = rng.uniform_int(std::max(0, a - cfg.max_gap), std::min(last, a + cfg.max_gap));
        const int ox = rng.uniform_int(-cfg.max_offset, cfg.max_offset);
        const int oy = rng.uniform_int(-cfg.max_offset, cfg.max_offset);

        TrainSample s;
        s.exemplar = canonical_patch(ImagePatch(seq.frames[static_cast<std::size_t>(a)]),
                                     seq.groundtruth[static_cast<std::size_t>(a)].box, 0.0,
                                     cfg.exemplar_size, 1.0, cfg.context);
        // Cut a widened search patch with the target dead-center, then shift
        // the final crop by whole pixels so the label moves with the target.
        const int big = cfg.search_size + 2 * cfg.max_offset;
        const ImagePatch wide =
            canonical_patch(ImagePatch(seq.frames[static_cast<std::size_t>(b)]),
                            seq.groundtruth[static_cast<std::size_t>(b)].box, 0.0, big,
                            static_cast<double>(big) / cfg.exemplar_size, cfg.context);
        const double mid = 0.5 * (big - 1);
        s.search = crop_centered(wide, mid + ox, mid + oy, cfg.search_size, cfg.search_size);
        const double cell = 0.5 * (cfg.response - 1);
        s.labels = make_label_map(cfg.response, cfg.response,
                                  cell - static_cast<double>(oy) / cfg.stride,
                                  cell - static_cast<double>(ox) / cfg.stride, cfg.label_radius);
        return s;
    };
}

PairSampler make_dataset_sampler(const std::string& dataset_dir, const SamplerConfig& cfg) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dataset_dir))
        throw std::runtime_error("make_dataset_sampler: not a directory: " + dataset_dir);
    std::vector<std::string> dirs;
    for (const fs::directory_entry& e : fs::directory_iterator(dataset_dir))
        if (e.is_directory() && fs::exists(e.path() / "groundtruth.csv"))
            dirs.push_back(e.path().string());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty())
        throw std::runtime_error("make_dataset_sampler: no sequences under " + dataset_dir);
    std::vector<StoredSequence> seqs;
    seqs.reserve(dirs.size());
    for (const std::string& d : dirs) seqs.push_back(read_sequence(d));
    return make_pair_sampler(std::move(seqs), cfg);
}

std::string trace_to_csv(const std::vector<TrainStep>& trace) {
    std::string out = "step,lr,loss\n";
    char buf[128];
    for (const TrainStep& t : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", t.step, t.lr, t.loss);
        out += buf;
    }
    return out;
}

} // namespace resiam
