#include "resiam/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace resiam {

namespace {

constexpr double kPi = 3.14159265358979323846;

int round_odd(double s) {
    const int k = static_cast<int>(std::lround((s - 1.0) / 2.0));
    return std::max(3, 2 * k + 1);
}

int cyclic_distance(int a, int b, int Lambda) {
    int d = std::abs(a - b) % Lambda;
    return std::min(d, Lambda - d);
}

double peak_value(const Tensor& map) {
    double best = map.storage()[0];
    for (double v : map.storage()) best = std::max(best, v);
    return best;
}

void check_heatmap(const Tensor& map, const char* what) {
    if (map.rank() != 2 || map.is_complex())
        throw std::invalid_argument(std::string(what) + " must be a real rank-2 map, got " +
                                    map.shape_str());
}

Tensor cosine_window(int h, int w) {
    auto hann = [](int n, int i) {
        if (n <= 1) return 1.0;
        return 0.5 * (1.0 - std::cos(2.0 * kPi * i / (n - 1)));
    };
    Tensor win = Tensor::zeros({h, w});
    double total = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = hann(h, y) * hann(w, x);
            win.at(y, x) = v;
            total += v;
        }
    if (total > 0.0)
        for (double& v : win.storage()) v /= total;
    return win;
}

} // namespace

void TrackerConfig::validate() const {
    if (Lambda < 1) throw std::invalid_argument("TrackerConfig: Lambda must be >= 1");
    if (exemplar_size < 1 || exemplar_size % 2 == 0)
        throw std::invalid_argument("TrackerConfig: exemplar_size must be odd and positive");
    if (search_size <= exemplar_size || search_size % 2 == 0)
        throw std::invalid_argument("TrackerConfig: search_size must be odd and exceed exemplar_size");
    if (!(context >= 0.0)) throw std::invalid_argument("TrackerConfig: context must be >= 0");
    if (scales.empty()) throw std::invalid_argument("TrackerConfig: scale set is empty");
    for (double s : scales)
        if (!(s > 0.0)) throw std::invalid_argument("TrackerConfig: scales must be positive");
    if (!(scale_penalty > 0.0 && scale_penalty <= 1.0))
        throw std::invalid_argument("TrackerConfig: scale_penalty must be in (0, 1]");
    if (!(scale_damping >= 0.0 && scale_damping <= 1.0))
        throw std::invalid_argument("TrackerConfig: scale_damping must be in [0, 1]");
    if (!(window_weight >= 0.0 && window_weight < 1.0))
        throw std::invalid_argument("TrackerConfig: window_weight must be in [0, 1)");
    if (upsample < 1) throw std::invalid_argument("TrackerConfig: upsample must be >= 1");
    if (gamma < 0 || gamma > Lambda / 2)
        throw std::invalid_argument("TrackerConfig: gamma must be 0 (disabled) or in [1, Lambda/2]");
}

TrackState TrackState::from_box(int frame, const Box& b) {
    if (!b.valid()) throw std::invalid_argument("TrackState: degenerate box");
    TrackState st;
    st.frame = frame;
    st.cx = b.cx();
    st.cy = b.cy();
    st.w = b.w;
    st.h = b.h;
    return st;
}

double context_region(const Box& box, double context) {
    if (!box.valid()) throw std::invalid_argument("context_region: degenerate box");
    const double c = context * (box.w + box.h);
    return std::sqrt((box.w + c) * (box.h + c));
}

ImagePatch canonical_patch(const ImagePatch& frame, const Box& box, double rot_deg,
                           int out_size, double region_scale, double context) {
    if (out_size < 1) throw std::invalid_argument("canonical_patch: out_size must be >= 1");
    const double region = context_region(box, context) * region_scale;
    const int crop = round_odd(region);
    ImagePatch square;
    const double theta = rot_deg * kPi / 180.0;
    if (std::remainder(rot_deg, 360.0) == 0.0) {
        square = crop_centered(frame, box.cx(), box.cy(), crop, crop);
    } else {
        // Crop wide enough that the rotated interior fully covers the target crop.
        const int big = round_odd(crop * std::sqrt(2.0) + 4.0);
        ImagePatch src = crop_centered(frame, box.cx(), box.cy(), big, big);
        ImagePatch rot = rotate_image(src, theta);
        const double c = 0.5 * (big - 1);
        square = crop_centered(rot, c, c, crop, crop);
    }
    return resize_bilinear(square, out_size, out_size);
}

int search_crop_size(const TrackState& prev, const TrackerConfig& cfg, int scale_index) {
    if (scale_index < 0 || scale_index >= static_cast<int>(cfg.scales.size()))
        throw std::invalid_argument("search_crop_size: scale index out of range");
    const double region = context_region(prev.box(), cfg.context) *
                          (static_cast<double>(cfg.search_size) / cfg.exemplar_size) *
                          cfg.scales[static_cast<std::size_t>(scale_index)];
    return round_odd(region);
}

TemplateBank make_template_bank(const ImagePatch& frame, const Box& box,
                                const Encoder& encoder, const TrackerConfig& cfg) {
    cfg.validate();
    if (!box.valid()) throw std::invalid_argument("make_template_bank: degenerate source box");
    if (!encoder) throw std::invalid_argument("make_template_bank: empty encoder");
    TemplateBank bank;
    bank.source = box;
    bank.exemplar_size = cfg.exemplar_size;
    bank.feats.reserve(static_cast<std::size_t>(cfg.Lambda));
    for (int i = 0; i < cfg.Lambda; ++i) {
        const double deg = 360.0 * i / cfg.Lambda;
        ImagePatch z = canonical_patch(frame, box, deg, cfg.exemplar_size, 1.0, cfg.context);
        Tensor f = encoder(z);
        if (f.rank() != 3 || f.is_complex())
            throw std::invalid_argument("make_template_bank: encoder must return a real [C,H,W] stack, got " +
                                        f.shape_str());
        if (!bank.feats.empty() && !f.same_shape(bank.feats.front()))
            throw std::invalid_argument("make_template_bank: encoder output shape varies across entries");
        bank.feats.push_back(std::move(f));
    }
    return bank;
}

Tensor correlate_single(const Tensor& templ, const Tensor& feat) {
    if (templ.rank() != 3 || templ.is_complex())
        throw std::invalid_argument("correlate_single: template must be real [C,h,w], got " +
                                    templ.shape_str());
    if (feat.rank() != 3 || feat.is_complex())
        throw std::invalid_argument("correlate_single: search features must be real [C,H,W], got " +
                                    feat.shape_str());
    if (templ.extent(0) != feat.extent(0))
        throw std::invalid_argument("correlate_single: channel mismatch between template " +
                                    templ.shape_str() + " and search " + feat.shape_str());
    if (templ.extent(1) > feat.extent(1) || templ.extent(2) > feat.extent(2))
        throw std::invalid_argument("correlate_single: template " + templ.shape_str() +
                                    " exceeds search extent " + feat.shape_str());
    Tensor kernel = Tensor::from_data({1, templ.extent(0), templ.extent(1), templ.extent(2)},
                                      templ.storage());
    Tensor out = conv2d(feat, kernel);
    return Tensor::from_data({out.extent(1), out.extent(2)}, out.storage());
}

std::vector<Tensor> correlate(const TemplateBank& bank, const Tensor& feat) {
    if (bank.entries() < 1) throw std::invalid_argument("correlate: empty template bank");
    std::vector<Tensor> maps;
    maps.reserve(bank.feats.size());
    for (const Tensor& t : bank.feats) maps.push_back(correlate_single(t, feat));
    return maps;
}

std::vector<int> allowed_window(int prev_index, int gamma, int Lambda) {
    if (Lambda < 1) throw std::invalid_argument("allowed_window: Lambda must be >= 1");
    if (prev_index < 0 || prev_index >= Lambda)
        throw std::invalid_argument("allowed_window: prev_index out of range");
    if (gamma < 0 || gamma > Lambda / 2)
        throw std::invalid_argument("allowed_window: gamma must be 0 (disabled) or in [1, Lambda/2]");
    std::vector<bool> hit(static_cast<std::size_t>(Lambda), false);
    if (gamma == 0) {
        std::fill(hit.begin(), hit.end(), true);
    } else {
        for (int d = -gamma; d <= gamma; ++d) {
            const int i = ((prev_index + d) % Lambda + Lambda) % Lambda;
            hit[static_cast<std::size_t>(i)] = true;
        }
    }
    std::vector<int> out;
    for (int i = 0; i < Lambda; ++i)
        if (hit[static_cast<std::size_t>(i)]) out.push_back(i);
    return out;
}

OrientationPick global_maxpool(const std::vector<Tensor>& heatmaps,
                               const std::vector<int>& allowed, int prev_index) {
    const int Lambda = static_cast<int>(heatmaps.size());
    if (Lambda < 1) throw std::invalid_argument("global_maxpool: no heatmaps");
    if (prev_index < 0 || prev_index >= Lambda)
        throw std::invalid_argument("global_maxpool: prev_index out of range");
    if (allowed.empty()) throw std::invalid_argument("global_maxpool: empty allowed set");
    for (std::size_t m = 0; m < heatmaps.size(); ++m) {
        check_heatmap(heatmaps[m], "global_maxpool: heatmap");
        if (!heatmaps[m].same_shape(heatmaps.front()))
            throw std::invalid_argument("global_maxpool: heatmap shapes differ");
    }
    bool have = false;
    OrientationPick pick;
    for (int i : allowed) {
        if (i < 0 || i >= Lambda)
            throw std::invalid_argument("global_maxpool: allowed index out of range");
        const double peak = peak_value(heatmaps[static_cast<std::size_t>(i)]);
        if (!have) {
            pick = {i, peak};
            have = true;
            continue;
        }
        if (peak > pick.peak) {
            pick = {i, peak};
        } else if (peak == pick.peak) {
            const int di = cyclic_distance(i, prev_index, Lambda);
            const int db = cyclic_distance(pick.index, prev_index, Lambda);
            if (di < db || (di == db && i < pick.index)) pick = {i, peak};
        }
    }
    return pick;
}

double estimate_orientation(int index, int Lambda) {
    if (Lambda < 1) throw std::invalid_argument("estimate_orientation: Lambda must be >= 1");
    if (index < 0 || index >= Lambda)
        throw std::invalid_argument("estimate_orientation: index out of range");
    double deg = 360.0 * index / Lambda;
    while (deg > 180.0) deg -= 360.0;
    while (deg <= -180.0) deg += 360.0;
    return deg;
}

TrackState localize(const std::vector<Tensor>& heatmaps, const std::vector<int>& orient,
                    const TrackerConfig& cfg, const TrackState& prev, int total_stride) {
    cfg.validate();
    if (total_stride < 1) throw std::invalid_argument("localize: total_stride must be >= 1");
    if (heatmaps.size() != cfg.scales.size() || orient.size() != cfg.scales.size())
        throw std::invalid_argument("localize: need one heatmap and orientation per scale");
    if (!(prev.w > 0.0 && prev.h > 0.0)) throw std::invalid_argument("localize: degenerate previous size");
    for (const Tensor& m : heatmaps) {
        check_heatmap(m, "localize: heatmap");
        if (!m.same_shape(heatmaps.front()))
            throw std::invalid_argument("localize: heatmap shapes differ");
    }

    // Scale pick: penalized peak, identity scales exempt from the penalty.
    int best_s = 0;
    double best_q = 0.0;
    double best_peak = 0.0;
    for (std::size_t s = 0; s < heatmaps.size(); ++s) {
        const double peak = peak_value(heatmaps[s]);
        const bool identity = std::abs(cfg.scales[s] - 1.0) < 1e-12;
        const double q = peak * (identity ? 1.0 : cfg.scale_penalty);
        if (s == 0 || q > best_q) {
            best_s = static_cast<int>(s);
            best_q = q;
            best_peak = peak;
        }
    }

    const Tensor& map = heatmaps[static_cast<std::size_t>(best_s)];
    Tensor up = upsample_bicubic(map, cfg.upsample);
    const int uh = up.extent(0);
    const int uw = up.extent(1);

    // Shift-normalize so the response mixes with the window on a common scale.
    double mn = up.storage()[0];
    for (double v : up.storage()) mn = std::min(mn, v);
    double total = 0.0;
    for (double& v : up.storage()) {
        v -= mn;
        total += v;
    }
    const double n = static_cast<double>(up.size());
    if (total > 0.0)
        for (double& v : up.storage()) v /= total;
    else
        for (double& v : up.storage()) v = 1.0 / n;

    Tensor win = cosine_window(uh, uw);
    int py = 0;
    int px = 0;
    double best_v = -1.0;
    for (int y = 0; y < uh; ++y)
        for (int x = 0; x < uw; ++x) {
            const double v = (1.0 - cfg.window_weight) * up.at(y, x) +
                             cfg.window_weight * win.at(y, x);
            if (v > best_v) {
                best_v = v;
                py = y;
                px = x;
            }
        }

    const double disp_feat_y = (py - 0.5 * (uh - 1)) / cfg.upsample;
    const double disp_feat_x = (px - 0.5 * (uw - 1)) / cfg.upsample;
    const int crop = search_crop_size(prev, cfg, best_s);
    const double ratio = static_cast<double>(crop) / cfg.search_size;

    TrackState next = prev;
    next.frame = prev.frame + 1;
    next.cx = prev.cx + disp_feat_x * total_stride * ratio;
    next.cy = prev.cy + disp_feat_y * total_stride * ratio;
    const double damped = (1.0 - cfg.scale_damping) +
                          cfg.scale_damping * cfg.scales[static_cast<std::size_t>(best_s)];
    next.w = prev.w * damped;
    next.h = prev.h * damped;
    next.scale = prev.scale * damped;
    next.orientation_index = orient[static_cast<std::size_t>(best_s)];
    next.orientation_deg = estimate_orientation(next.orientation_index, cfg.Lambda);
    next.score = best_peak;
    return next;
}

std::vector<TrackState> track_sequence(const std::vector<ImagePatch>& frames, const Box& init,
                                       const Encoder& encoder, const TrackerConfig& cfg,
                                       int total_stride) {
    cfg.validate();
    if (frames.size() < 2) throw std::invalid_argument("track_sequence: need at least 2 frames");
    if (!init.valid()) throw std::invalid_argument("track_sequence: degenerate init box");
    if (total_stride < 1) throw std::invalid_argument("track_sequence: total_stride must be >= 1");

    const TemplateBank bank = make_template_bank(frames[0], init, encoder, cfg);
    std::vector<TrackState> states;
    states.reserve(frames.size());
    states.push_back(TrackState::from_box(0, init));

    const std::size_t n_scales = cfg.scales.size();
    for (std::size_t t = 1; t < frames.size(); ++t) {
        const TrackState& prev = states.back();
        const std::vector<int> allowed = allowed_window(prev.orientation_index, cfg.gamma, cfg.Lambda);
        std::vector<Tensor> sel(n_scales);
        std::vector<int> orient(n_scales);
        for (std::size_t s = 0; s < n_scales; ++s) {
            const int crop = search_crop_size(prev, cfg, static_cast<int>(s));
            ImagePatch patch = crop_centered(frames[t], prev.cx, prev.cy, crop, crop);
            ImagePatch resized = resize_bilinear(patch, cfg.search_size, cfg.search_size);
            Tensor feat = encoder(resized);
            std::vector<Tensor> maps = correlate(bank, feat);
            OrientationPick pick = global_maxpool(maps, allowed, prev.orientation_index);
            sel[s] = std::move(maps[static_cast<std::size_t>(pick.index)]);
            orient[s] = pick.index;
        }
        TrackState next = localize(sel, orient, cfg, prev, total_stride);
        next.frame = static_cast<int>(t);
        const ImagePatch& fr = frames[t];
        next.cx = std::clamp(next.cx, 0.0, static_cast<double>(fr.width() - 1));
        next.cy = std::clamp(next.cy, 0.0, static_cast<double>(fr.height() - 1));
        const double lo = 0.2;
        const double hi = 5.0;
        if (next.scale < lo || next.scale > hi) {
            const double clamped = std::clamp(next.scale, lo, hi);
            next.w *= clamped / next.scale;
            next.h *= clamped / next.scale;
            next.scale = clamped;
        }
        states.push_back(std::move(next));
    }
    return states;
}

std::vector<TrackState> track_sequence(const std::vector<ImagePatch>& frames, const Box& init,
                                       const Network& net, const TrackerConfig& cfg) {
    if (net.spec.group.Lambda != cfg.Lambda)
        throw std::invalid_argument("track_sequence: network and config disagree on Lambda");
    Encoder enc = [&net](const ImagePatch& img) { return forward(net, img); };
    return track_sequence(frames, init, enc, cfg, net.spec.total_stride());
}

std::string states_to_csv(const std::vector<TrackState>& states) {
    std::string out = "frame,x,y,w,h,orientation_deg,score\n";
    char buf[256];
    for (const TrackState& st : states) {
        const Box b = st.box();
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      st.frame, b.x, b.y, b.w, b.h, st.orientation_deg, st.score);
        out += buf;
    }
    return out;
}

} // namespace resiam
