#include "resiam/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "resiam/rng.hpp"

namespace resiam {

namespace {

namespace fs = std::filesystem;

struct Pt {
    double x, y;
};

// Max-blends a soft stroke from a to b onto a [h,w] plane.
void paint_segment(Tensor& img, Pt a, Pt b, double sigma) {
    const int h = img.extent(0);
    const int w = img.extent(1);
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double t = len2 > 0.0 ? ((x - a.x) * vx + (y - a.y) * vy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            const double dx = x - (a.x + t * vx), dy = y - (a.y + t * vy);
            const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            img.at(y, x) = std::max(img.at(y, x), v);
        }
}

void paint_polyline(Tensor& img, const std::vector<Pt>& pts, double sigma) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) paint_segment(img, pts[i], pts[i + 1], sigma);
}

std::vector<Pt> ring(double cx, double cy, double rx, double ry, int n = 12) {
    std::vector<Pt> pts;
    for (int i = 0; i <= n; ++i) {
        const double a = 2.0 * M_PI * i / n;
        pts.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
    }
    return pts;
}

double reflect(double v, double lo, double hi) {
    if (hi <= lo) return lo;
    const double span = 2.0 * (hi - lo);
    double r = std::fmod(v - lo, span);
    if (r < 0.0) r += span;
    return lo + std::min(r, span - r);
}

Box clip_box(Box b, int canvas) {
    const double lo = -0.5, hi = canvas - 0.5;
    const double x1 = std::min(b.x + b.w, hi), y1 = std::min(b.y + b.h, hi);
    b.x = std::max(b.x, lo);
    b.y = std::max(b.y, lo);
    b.w = std::max(0.0, x1 - b.x);
    b.h = std::max(0.0, y1 - b.y);
    return b;
}

// Samples the unrotated glyph with the same inverse map the library's image
// rotation uses, so painted content and annotated angles share one convention.
void paint_glyph(Tensor& frame, const Tensor& glyph, double cx, double cy, double angle_deg) {
    const int H = frame.extent(1);
    const int W = frame.extent(2);
    const int G = glyph.extent(0);
    const double gc = 0.5 * (G - 1);
    const double th = angle_deg * M_PI / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    const double reach = 0.5 * G * M_SQRT2 + 1.0;

    const int y0 = std::max(0, static_cast<int>(std::ceil(cy - reach)));
    const int y1 = std::min(H - 1, static_cast<int>(std::floor(cy + reach)));
    const int x0 = std::max(0, static_cast<int>(std::ceil(cx - reach)));
    const int x1 = std::min(W - 1, static_cast<int>(std::floor(cx + reach)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double gx = gc + dx * c - dy * s;
            const double gy = gc + dx * s + dy * c;
            const int r0 = static_cast<int>(std::floor(gy));
            const int c0 = static_cast<int>(std::floor(gx));
            const double fy = gy - r0, fx = gx - c0;
            auto tap = [&](int rr, int cc) -> double {
                if (rr < 0 || rr >= G || cc < 0 || cc >= G) return 0.0;
                return glyph.at(rr, cc);
            };
            const double v = (1 - fy) * ((1 - fx) * tap(r0, c0) + fx * tap(r0, c0 + 1)) +
                             fy * ((1 - fx) * tap(r0 + 1, c0) + fx * tap(r0 + 1, c0 + 1));
            double& dst = frame.at(0, y, x);
            dst = std::max(dst, v);
        }
}

Tensor flat_background(int canvas) {
    Tensor bg = Tensor::zeros({1, canvas, canvas});
    for (double& v : bg.storage()) v = 0.5;
    return bg;
}

Tensor directory_background(const std::string& dir, int canvas, Rng& rng) {
    std::vector<std::string> files;
    if (!fs::is_directory(dir))
        throw std::runtime_error("generate_sequence: background directory '" + dir +
                                 "' does not exist");
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".png") files.push_back(e.path().string());
    if (files.empty())
        throw std::runtime_error("generate_sequence: no .png files in '" + dir + "'");
    std::sort(files.begin(), files.end());
    const std::string pick = files[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(files.size()) - 1))];
    ImagePatch img(to_gray(read_png(pick)));
    return resize_bilinear(img, canvas, canvas).data;
}

} // namespace

Tensor digit_glyph(int digit) {
    if (digit < 0 || digit > 9)
        throw std::invalid_argument("digit_glyph: digit must be 0-9, got " +
                                    std::to_string(digit));
    Tensor g = Tensor::zeros({kGlyphSize, kGlyphSize});
    const double sg = 1.2;
    switch (digit) {
        case 0:
            paint_polyline(g, ring(14, 14, 4.5, 7.0), sg);
            break;
        case 1:
            paint_polyline(g, {{10.5, 9.5}, {14, 6.5}, {14, 21.5}}, sg);
            paint_polyline(g, {{10, 21.5}, {18, 21.5}}, sg);
            break;
        case 2:
            paint_polyline(g,
                           {{9.5, 9.5}, {12, 6.5}, {16.5, 6.5}, {18.5, 9.5}, {9.5, 21.5},
                            {18.5, 21.5}},
                           sg);
            break;
        case 3:
            paint_polyline(g, {{9.5, 6.5}, {17.5, 6.5}, {13, 13}, {18, 16}, {16, 20.5},
                               {10, 21}},
                           sg);
            break;
        case 4:
            paint_polyline(g, {{16.5, 6.5}, {8.5, 16.5}, {19.5, 16.5}}, sg);
            paint_polyline(g, {{16.5, 6.5}, {16.5, 21.5}}, sg);
            break;
        case 5:
            // the top bar is doubled: a plain S-stroke is nearly half-turn
            // symmetric, which would make the glyph's orientation ambiguous
            paint_polyline(g, {{19, 6}, {9, 6}}, sg);
            paint_polyline(g,
                           {{19, 8.5}, {9.5, 8.5}, {9.5, 13}, {14.5, 12.5}, {17.5, 15.5},
                            {15, 20}, {10, 20}},
                           sg);
            break;
        case 6:
            paint_polyline(g,
                           {{16.5, 6.5}, {11, 13}, {9.5, 17.5}, {12.5, 21.5}, {16.5, 20.5},
                            {18, 16.5}, {14, 14.5}, {10.5, 16}},
                           sg);
            break;
        case 7:
            paint_polyline(g, {{9.5, 6.5}, {18.5, 6.5}, {12, 21.5}}, sg);
            paint_polyline(g, {{12.5, 13.5}, {17, 13.5}}, sg);
            break;
        case 8:
            paint_polyline(g, ring(14, 10.5, 3.5, 3.5, 10), sg);
            paint_polyline(g, ring(14, 17.5, 4.5, 4.5, 10), sg);
            break;
        case 9:
            paint_polyline(g, ring(14, 11, 4.0, 4.0, 10), sg);
            paint_polyline(g, {{17.5, 12.5}, {15, 21.5}}, sg);
            break;
    }
    return g;
}

void SynthConfig::validate() const {
    if (frames < 1) throw std::invalid_argument("SynthConfig: frames must be >= 1");
    if (digits_min < 1 || digits_max < digits_min)
        throw std::invalid_argument("SynthConfig: need 1 <= digits_min <= digits_max");
    if (!(sigma_t >= 0.0) || !(sigma_r >= 0.0))
        throw std::invalid_argument("SynthConfig: diffusion coefficients must be >= 0");
    const int min_canvas = static_cast<int>(std::ceil(kGlyphSize * M_SQRT2)) + 2;
    if (canvas < min_canvas)
        throw std::invalid_argument("SynthConfig: canvas " + std::to_string(canvas) +
                                    " too small for a rotated glyph (need >= " +
                                    std::to_string(min_canvas) + ")");
}

Box enclosing_box(const Box& box, double angle_deg, double pivot_x, double pivot_y) {
    if (!box.valid()) throw std::invalid_argument("enclosing_box: degenerate box");
    const double th = angle_deg * M_PI / 180.0;
    const double c = std::cos(th), s = std::sin(th);
    double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
    const double xs[2] = {box.x, box.x + box.w};
    const double ys[2] = {box.y, box.y + box.h};
    bool first = true;
    for (double px : xs)
        for (double py : ys) {
            const double dx = px - pivot_x, dy = py - pivot_y;
            const double rx = pivot_x + dx * c + dy * s;
            const double ry = pivot_y - dx * s + dy * c;
            if (first) {
                min_x = max_x = rx;
                min_y = max_y = ry;
                first = false;
            } else {
                min_x = std::min(min_x, rx);
                max_x = std::max(max_x, rx);
                min_y = std::min(min_y, ry);
                max_y = std::max(max_y, ry);
            }
        }
    return Box{min_x, min_y, max_x - min_x, max_y - min_y};
}

Box enclosing_box(const Box& box, double angle_deg) {
    return enclosing_box(box, angle_deg, box.cx(), box.cy());
}

SyntheticSequence generate_sequence(const SynthConfig& cfg, std::uint64_t index) {
    cfg.validate();
    Rng rng(Rng::mix(cfg.seed, index));

    const double margin = 0.5 * kGlyphSize * M_SQRT2;
    const double lo = margin, hi = cfg.canvas - 1 - margin;

    const Tensor background = cfg.background_dir.empty()
                                  ? flat_background(cfg.canvas)
                                  : directory_background(cfg.background_dir, cfg.canvas, rng);

    const int n = rng.uniform_int(cfg.digits_min, cfg.digits_max);
    // the target glyph is drawn from the strongly rotation-asymmetric shapes
    static const int asymmetric[] = {2, 3, 4, 5, 6, 7};
    std::vector<Tensor> glyphs;
    std::vector<double> xs(n), ys(n), angles(n);
    for (int i = 0; i < n; ++i) {
        const int d = (i == 0) ? asymmetric[rng.uniform_int(0, 5)] : rng.uniform_int(0, 9);
        glyphs.push_back(digit_glyph(d));
        xs[static_cast<std::size_t>(i)] = rng.uniform(lo, hi);
        ys[static_cast<std::size_t>(i)] = rng.uniform(lo, hi);
        angles[static_cast<std::size_t>(i)] = (i == 0) ? 0.0 : rng.uniform(0.0, 360.0);
    }

    SyntheticSequence seq;
    seq.distractors.resize(static_cast<std::size_t>(n - 1));
    const Box glyph_box{-0.5 * kGlyphSize, -0.5 * kGlyphSize, kGlyphSize, kGlyphSize};
    double target_angle = 0.0;

    for (int t = 0; t < cfg.frames; ++t) {
        if (t > 0)
            for (int i = 0; i < n; ++i) {
                const std::size_t k = static_cast<std::size_t>(i);
                xs[k] = reflect(xs[k] + cfg.sigma_t * rng.gaussian(), lo, hi);
                ys[k] = reflect(ys[k] + cfg.sigma_t * rng.gaussian(), lo, hi);
                if (i == 0) target_angle += cfg.sigma_r * rng.gaussian();
            }

        Tensor frame = background;
        for (int i = 0; i < n; ++i) {
            const std::size_t k = static_cast<std::size_t>(i);
            const double a = (i == 0) ? target_angle : angles[k];
            paint_glyph(frame, glyphs[k], xs[k], ys[k], a);

            Box b = glyph_box;
            b.x += xs[k];
            b.y += ys[k];
            b = clip_box(enclosing_box(b, a), cfg.canvas);
            if (i == 0)
                seq.target.push_back({t, b, target_angle});
            else
                seq.distractors[k - 1].push_back({t, b, 0.0});
        }
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

SyntheticSequence generate_sequence(const SynthConfig& cfg) { return generate_sequence(cfg, 0); }

SyntheticSequence rotate_sequence(const SyntheticSequence& seq, double delta_deg) {
    if (seq.frames.size() != seq.target.size())
        throw std::invalid_argument("rotate_sequence: frames and annotations disagree");
    SyntheticSequence out;
    out.distractors.resize(seq.distractors.size());
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        const Tensor& f = seq.frames[t];
        const int H = f.extent(1), W = f.extent(2);
        const double cx = 0.5 * (W - 1), cy = 0.5 * (H - 1);
        const double a = delta_deg * static_cast<double>(t);

        out.frames.push_back(
            rotate_image(ImagePatch(f), a * M_PI / 180.0, Interp::Bilinear).data);

        FrameAnnotation r = seq.target[t];
        if (a != 0.0) r.box = clip_box(enclosing_box(r.box, a, cx, cy), W);
        r.angle_deg += a;
        out.target.push_back(r);
        for (std::size_t d = 0; d < seq.distractors.size(); ++d) {
            FrameAnnotation rd = seq.distractors[d][t];
            if (a != 0.0) rd.box = clip_box(enclosing_box(rd.box, a, cx, cy), W);
            rd.angle_deg += a;
            out.distractors[d].push_back(rd);
        }
    }
    return out;
}

void write_sequence(const std::string& dir, const SyntheticSequence& seq,
                    const SynthConfig& cfg) {
    if (seq.frames.empty() || seq.frames.size() != seq.target.size())
        throw std::invalid_argument("write_sequence: empty or inconsistent sequence");
    fs::create_directories(fs::path(dir) / "frames");
    char name[32];
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
        std::snprintf(name, sizeof(name), "%06zu.png", t);
        write_png((fs::path(dir) / "frames" / name).string(), seq.frames[t]);
    }
    write_text_file((fs::path(dir) / "groundtruth.csv").string(),
                    annotations_to_csv(seq.target));

    nlohmann::json meta;
    meta["frames"] = cfg.frames;
    meta["digits_min"] = cfg.digits_min;
    meta["digits_max"] = cfg.digits_max;
    meta["canvas"] = cfg.canvas;
    meta["sigma_t"] = cfg.sigma_t;
    meta["sigma_r"] = cfg.sigma_r;
    meta["background_dir"] = cfg.background_dir;
    meta["seed"] = cfg.seed;
    meta["distractors"] = seq.distractors.size();
    write_text_file((fs::path(dir) / "meta.json").string(), meta.dump(1) + "\n");
}

StoredSequence read_sequence(const std::string& dir) {
    StoredSequence out;
    out.groundtruth = annotations_from_csv(read_text_file((fs::path(dir) / "groundtruth.csv").string()));
    char name[32];
    for (std::size_t t = 0; t < out.groundtruth.size(); ++t) {
        std::snprintf(name, sizeof(name), "%06zu.png", t);
        Tensor img = read_png((fs::path(dir) / "frames" / name).string());
        out.frames.push_back(img.extent(0) == 1 ? img : to_gray(img));
    }
    return out;
}

} // namespace resiam
