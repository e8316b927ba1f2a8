#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "resiam/basis.hpp"
#include "resiam/eval.hpp"
#include "resiam/io.hpp"
#include "resiam/net.hpp"
#include "resiam/rng.hpp"
#include "resiam/synth.hpp"
#include "resiam/tracker.hpp"
#include "resiam/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace resiam;

namespace {

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    json j = json::parse(read_text_file(path));
    if (!j.is_object()) throw std::runtime_error("config must be a JSON object: " + path);
    return j;
}

template <class T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

SynthConfig synth_config(const json& root) {
    SynthConfig c;
    if (!root.contains("synth")) return c;
    const json& j = root.at("synth");
    get_if(j, "frames", c.frames);
    get_if(j, "digits_min", c.digits_min);
    get_if(j, "digits_max", c.digits_max);
    get_if(j, "canvas", c.canvas);
    get_if(j, "sigma_t", c.sigma_t);
    get_if(j, "sigma_r", c.sigma_r);
    get_if(j, "background_dir", c.background_dir);
    get_if(j, "seed", c.seed);
    return c;
}

TrainConfig train_config(const json& root) {
    TrainConfig c;
    if (!root.contains("train")) return c;
    const json& j = root.at("train");
    get_if(j, "lr_initial", c.lr_initial);
    get_if(j, "lr_final", c.lr_final);
    get_if(j, "momentum", c.momentum);
    get_if(j, "weight_decay", c.weight_decay);
    get_if(j, "batch_size", c.batch_size);
    get_if(j, "epochs", c.epochs);
    get_if(j, "steps_per_epoch", c.steps_per_epoch);
    get_if(j, "checkpoint_every", c.checkpoint_every);
    get_if(j, "seed", c.seed);
    return c;
}

SamplerConfig sampler_config(const json& root) {
    SamplerConfig c;
    if (!root.contains("sampler")) return c;
    const json& j = root.at("sampler");
    get_if(j, "exemplar_size", c.exemplar_size);
    get_if(j, "search_size", c.search_size);
    get_if(j, "response", c.response);
    get_if(j, "stride", c.stride);
    get_if(j, "context", c.context);
    get_if(j, "max_gap", c.max_gap);
    get_if(j, "max_offset", c.max_offset);
    get_if(j, "label_radius", c.label_radius);
    return c;
}

TrackerConfig tracker_config(const json& root, int Lambda) {
    TrackerConfig c;
    c.Lambda = Lambda;
    if (!root.contains("tracker")) return c;
    const json& j = root.at("tracker");
    get_if(j, "exemplar_size", c.exemplar_size);
    get_if(j, "search_size", c.search_size);
    get_if(j, "context", c.context);
    get_if(j, "scales", c.scales);
    get_if(j, "scale_penalty", c.scale_penalty);
    get_if(j, "scale_damping", c.scale_damping);
    get_if(j, "window_weight", c.window_weight);
    get_if(j, "upsample", c.upsample);
    get_if(j, "gamma", c.gamma);
    return c;
}

std::string seq_dir_name(std::uint64_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "seq%06llu", static_cast<unsigned long long>(index));
    return buf;
}

std::vector<ImagePatch> to_patches(const std::vector<Tensor>& frames) {
    std::vector<ImagePatch> out;
    out.reserve(frames.size());
    for (const Tensor& f : frames) out.emplace_back(f);
    return out;
}

// ---- gen ----

int run_gen(const std::string& out_dir, const std::string& config, int count,
            std::uint64_t start, double rotate_deg, std::uint64_t seed, bool seed_set) {
    SynthConfig cfg = synth_config(load_config(config));
    if (seed_set) cfg.seed = seed;
    cfg.validate();
    for (int i = 0; i < count; ++i) {
        const std::uint64_t index = start + static_cast<std::uint64_t>(i);
        SyntheticSequence seq = generate_sequence(cfg, index);
        if (rotate_deg != 0.0) seq = rotate_sequence(seq, rotate_deg);
        write_sequence((fs::path(out_dir) / seq_dir_name(index)).string(), seq, cfg);
    }
    std::cout << "wrote " << count << " sequence(s) to " << out_dir << "\n";
    return 0;
}

// ---- train ----

int run_train(const std::string& dataset, const std::string& out_path, const std::string& config,
              const std::string& trace_path, const std::string& checkpoint_dir, int Lambda,
              std::uint64_t seed, bool seed_set) {
    const json root = load_config(config);
    TrainConfig tcfg = train_config(root);
    if (seed_set) tcfg.seed = seed;
    get_if(root, "lambda", Lambda);

    const SamplerConfig scfg = sampler_config(root);
    const PairSampler sampler = make_dataset_sampler(dataset, scfg);
    const Network net = desk_network(Lambda, tcfg.seed);

    CheckpointFn checkpoint;
    if (!checkpoint_dir.empty()) {
        fs::create_directories(checkpoint_dir);
        checkpoint = [&](int step, const Network& n, const TrackerHead& h) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "step_%06d.json", step);
            save_network((fs::path(checkpoint_dir) / buf).string(), n, h);
        };
    }

    const TrainResult result = train(net, TrackerHead{}, sampler, tcfg, checkpoint);
    save_network(out_path, result.net, result.head);
    if (!trace_path.empty()) write_text_file(trace_path, trace_to_csv(result.trace));
    if (!result.trace.empty())
        std::cout << "loss " << result.trace.front().loss << " -> " << result.trace.back().loss
                  << " over " << result.trace.size() << " steps\n";
    std::cout << "saved weights to " << out_path << "\n";
    return 0;
}

// ---- track ----

int run_track(const std::string& weights, const std::string& sequence, const std::string& out_path,
              const std::string& config, int gamma) {
    const auto [net, head] = load_network(weights);
    (void)head;  // the affine head is monotonic; argmax tracking ignores it
    const StoredSequence seq = read_sequence(sequence);
    if (seq.frames.empty()) throw std::runtime_error("track: empty sequence " + sequence);

    TrackerConfig cfg = tracker_config(load_config(config), net.spec.group.Lambda);
    if (gamma >= 0) cfg.gamma = gamma;
    cfg.validate();

    const std::vector<TrackState> states =
        track_sequence(to_patches(seq.frames), seq.groundtruth.front().box, net, cfg);
    write_text_file(out_path, states_to_csv(states));
    std::cout << "tracked " << states.size() << " frame(s) -> " << out_path << "\n";
    return 0;
}

// ---- eval ----

int run_eval(const std::vector<std::string>& results, const std::vector<std::string>& truths,
             const std::string& out_path, const std::string& curves_dir, double delta_deg,
             double alpha) {
    if (results.size() != truths.size())
        throw std::runtime_error("eval: --results and --truth counts differ");

    std::vector<EvalCurves> curves;
    double sr_sum = 0.0;
    std::size_t total_frames = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const std::vector<ResultRow> rows = results_from_csv(read_text_file(results[i]));
        std::string truth_path = truths[i];
        if (fs::is_directory(truth_path)) truth_path = (fs::path(truth_path) / "groundtruth.csv").string();
        const std::vector<FrameAnnotation> gt = annotations_from_csv(read_text_file(truth_path));

        std::vector<Box> pred_boxes, true_boxes;
        std::vector<double> pred_deg, true_deg;
        for (const ResultRow& r : rows) {
            pred_boxes.push_back(r.box);
            pred_deg.push_back(r.orientation_deg);
        }
        for (const FrameAnnotation& a : gt) {
            true_boxes.push_back(a.box);
            true_deg.push_back(a.angle_deg);
        }
        curves.push_back(ope_curves(pred_boxes, true_boxes));
        sr_sum += orientation_sr(pred_deg, true_deg, delta_deg, frame_ious(pred_boxes, true_boxes),
                                 alpha);
        total_frames += rows.size();
    }

    const EvalCurves avg = average_curves(curves);
    const double sr = sr_sum / static_cast<double>(results.size());

    json m;
    m["sequences"] = results.size();
    m["frames"] = total_frames;
    m["auc"] = avg.auc;
    m["precision_at_20"] = avg.precision_at_20;
    m["orientation"] = {{"delta_deg", delta_deg},
                        {"alpha", alpha},
                        {"sr", sr},
                        {"random_baseline", random_baseline(delta_deg * M_PI / 180.0)}};
    write_text_file(out_path, m.dump(1) + "\n");

    if (!curves_dir.empty()) {
        fs::create_directories(curves_dir);
        write_text_file((fs::path(curves_dir) / "success.csv").string(), success_curve_csv(avg));
        write_text_file((fs::path(curves_dir) / "precision.csv").string(),
                        precision_curve_csv(avg));
    }
    std::cout << "auc " << avg.auc << "  precision@20 " << avg.precision_at_20 << "  sr(" << delta_deg
              << " deg, alpha " << alpha << ") " << sr << "\n";
    return 0;
}

// ---- check ----

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::runtime_error("check: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.raw()[i] - b.raw()[i]));
    return m;
}

bool report(const char* name, bool ok, double value, const char* detail) {
    std::printf("%-14s %s  (%s %.3g)\n", name, ok ? "PASS" : "FAIL", detail, value);
    return ok;
}

bool check_equivariance(Rng& rng, int trials) {
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const Network net = desk_network(4, rng.next_u64());
        Tensor img = Tensor::zeros({1, 27, 27});
        for (double& v : img.storage()) v = 0.5 + 0.2 * rng.gaussian();
        const Tensor base = forward(net, ImagePatch(img));
        for (int q = 1; q <= 3; ++q) {
            const Tensor out = forward(net, ImagePatch(rotate90(img, q)));
            worst = std::max(worst, max_abs_diff(out, rotate90(base, q)));
        }
    }
    return report("equivariance", worst < 1e-5, worst, "max err");
}

bool check_steerability(Rng& rng) {
    const SteerableBasis basis = default_basis(9, 8);
    const FilterWeights w = random_filter_weights(rng, 2, 1, 1, basis);
    double worst = 0.0;
    const Tensor zero = steer(w, basis, 0.0);
    for (int q = 1; q <= 3; ++q)
        worst = std::max(worst, max_abs_diff(steer(w, basis, q * M_PI / 2.0), rotate90(zero, q)));
    return report("steerability", worst < 1e-10, worst, "max err");
}

bool check_gradients(Rng& rng, int trials) {
    NetworkSpec spec;
    spec.group = GroupSpec::cyclic(4);
    spec.layers = {LayerSpec::lift(1, 2, 3, 1, true, true), LayerSpec::group(2, 2, 3, 1, true, true),
                   LayerSpec::pool_orientation(PoolMode::Max)};
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        Network net;
        net.basis = default_basis(3, 4);
        net.spec = spec;
        for (const LayerSpec& l : spec.layers)
            if (l.kind != LayerKind::PoolOrientation)
                net.params.push_back(random_filter_weights(
                    rng, l.out_ch, l.in_ch, l.kind == LayerKind::Lift ? 1 : 4, net.basis));
        Tensor img = Tensor::zeros({1, 8, 8});
        for (double& v : img.storage()) v = 0.5 + 0.2 * rng.gaussian();

        ForwardCache cache;
        const Tensor out = forward_train(net, ImagePatch(img), cache);
        Tensor mask = Tensor::zeros_like(out);
        for (double& v : mask.storage()) v = rng.gaussian();
        std::vector<FilterWeights> grads;
        for (const FilterWeights& p : net.params)
            grads.push_back(zero_filter_weights(p.out_ch, p.in_ch, p.offsets, net.basis));
        network_backward(net, cache, mask, grads);

        const auto objective = [&]() {
            const Tensor o = forward(net, ImagePatch(img));
            double s = 0.0;
            for (std::size_t i = 0; i < o.size(); ++i) s += o.raw()[i] * mask.raw()[i];
            return s;
        };
        const int A = net.basis.atom_count();
        for (std::size_t li = 0; li < net.params.size(); ++li) {
            FilterWeights& p = net.params[li];
            const FilterWeights& g = grads[li];
            const auto probe = [&](double* slot, double analytic) {
                double last_rel = 0.0;
                for (double eps = 1e-4; eps > 1e-7; eps /= 8.0) {
                    const double keep = *slot;
                    *slot = keep + eps;
                    const double hi = objective();
                    *slot = keep - eps;
                    const double lo = objective();
                    *slot = keep;
                    const double fd = (hi - lo) / (2.0 * eps);
                    // Negligible slots carry no signal; their rel error is noise.
                    if (std::max(std::abs(analytic), std::abs(fd)) < 1e-10) return;
                    const double rel =
                        std::abs(analytic - fd) / std::max(std::abs(analytic), std::abs(fd));
                    if (rel < 1e-3) {
                        worst = std::max(worst, rel);
                        return;
                    }
                    last_rel = rel;  // kinks get re-probed at a smaller step
                }
                worst = std::max(worst, last_rel);
            };
            for (std::size_t i = 0; i < p.re.size(); ++i)
                probe(&p.re.storage()[i], g.re.raw()[i]);
            for (std::size_t i = 0; i < p.im.size(); ++i)
                if (net.basis.atom(static_cast<int>(i) % A).k != 0)
                    probe(&p.im.storage()[i], g.im.raw()[i]);
            for (std::size_t i = 0; i < p.bias.size(); ++i) probe(&p.bias[i], g.bias[i]);
        }
    }
    return report("gradients", worst < 1e-3, worst, "max rel err");
}

int run_check(std::uint64_t seed, int trials) {
    Rng rng(seed);
    bool ok = true;
    ok &= check_equivariance(rng, trials);
    ok &= check_steerability(rng);
    ok &= check_gradients(rng, std::max(1, trials / 2));
    return ok ? 0 : 1;
}

// ---- overlay ----

void draw_line(Tensor& rgb, double x0, double y0, double x1, double y1, double r, double g,
               double b) {
    const int H = rgb.extent(1), W = rgb.extent(2);
    const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (int i = 0; i <= steps; ++i) {
        const double t = steps ? static_cast<double>(i) / steps : 0.0;
        const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
        const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
        if (x < 0 || x >= W || y < 0 || y >= H) continue;
        rgb.at(0, y, x) = r;
        rgb.at(1, y, x) = g;
        rgb.at(2, y, x) = b;
    }
}

void draw_box(Tensor& rgb, const Box& box, double r, double g, double b) {
    draw_line(rgb, box.x, box.y, box.x + box.w, box.y, r, g, b);
    draw_line(rgb, box.x, box.y + box.h, box.x + box.w, box.y + box.h, r, g, b);
    draw_line(rgb, box.x, box.y, box.x, box.y + box.h, r, g, b);
    draw_line(rgb, box.x + box.w, box.y, box.x + box.w, box.y + box.h, r, g, b);
}

void draw_arrow(Tensor& rgb, double cx, double cy, double deg, double len, double r, double g,
                double b) {
    const double th = deg * M_PI / 180.0;
    // Counter-clockwise angle in image coordinates: y axis points down.
    const double tx = cx + len * std::cos(th), ty = cy - len * std::sin(th);
    draw_line(rgb, cx, cy, tx, ty, r, g, b);
    for (double side : {150.0, -150.0}) {
        const double ha = (deg + side) * M_PI / 180.0;
        draw_line(rgb, tx, ty, tx + 0.3 * len * std::cos(ha), ty - 0.3 * len * std::sin(ha), r, g,
                  b);
    }
}

int run_overlay(const std::string& sequence, const std::string& results_path,
                const std::string& out_dir) {
    const StoredSequence seq = read_sequence(sequence);
    const std::vector<ResultRow> rows = results_from_csv(read_text_file(results_path));
    if (rows.size() != seq.frames.size())
        throw std::runtime_error("overlay: result rows and frame count differ");
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Tensor& gray = seq.frames[i];
        const int H = gray.extent(1), W = gray.extent(2);
        Tensor rgb = Tensor::zeros({3, H, W});
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) rgb.at(c, y, x) = gray.at(0, y, x);
        const Box& b = rows[i].box;
        draw_box(rgb, b, 1.0, 0.1, 0.1);
        draw_arrow(rgb, b.cx(), b.cy(), rows[i].orientation_deg, 0.5 * std::min(b.w, b.h), 1.0,
                   0.9, 0.1);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%06zu.png", i);
        write_png((fs::path(out_dir) / buf).string(), rgb);
    }
    std::cout << "wrote " << rows.size() << " overlay frame(s) to " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rotation-equivariant Siamese tracker"};
    app.require_subcommand(1);

    std::string config, out_dir, dataset, weights, sequence, results_one, out_path, trace_path;
    std::string checkpoint_dir, curves_dir;
    std::vector<std::string> results, truths;
    std::uint64_t seed = 0, start = 0;
    int count = 8, Lambda = 4, gamma = -1, trials = 5;
    double rotate_deg = 0.0, delta_deg = 45.0, alpha = 0.5;

    CLI::App* gen = app.add_subcommand("gen", "generate synthetic sequences");
    gen->add_option("--out", out_dir, "output dataset directory")->required();
    gen->add_option("--config", config, "JSON config file");
    gen->add_option("--count", count, "number of sequences");
    gen->add_option("--start-index", start, "index of the first sequence");
    gen->add_option("--rotate", rotate_deg, "extra whole-frame rotation, deg/frame");
    CLI::Option* gen_seed = gen->add_option("--seed", seed, "master seed");

    CLI::App* tr = app.add_subcommand("train", "train a tracker on a dataset");
    tr->add_option("--dataset", dataset, "dataset directory")->required();
    tr->add_option("--out", out_path, "output weights JSON")->required();
    tr->add_option("--config", config, "JSON config file");
    tr->add_option("--trace", trace_path, "loss trace CSV");
    tr->add_option("--checkpoint-dir", checkpoint_dir, "periodic checkpoint directory");
    tr->add_option("--lambda", Lambda, "rotation group order");
    CLI::Option* tr_seed = tr->add_option("--seed", seed, "training seed");

    CLI::App* tk = app.add_subcommand("track", "run the tracker over a sequence");
    tk->add_option("--weights", weights, "weights JSON")->required();
    tk->add_option("--sequence", sequence, "sequence directory")->required();
    tk->add_option("--out", out_path, "output results CSV")->required();
    tk->add_option("--config", config, "JSON config file");
    tk->add_option("--gamma", gamma, "orientation window half-width (-1 keeps config)");

    CLI::App* ev = app.add_subcommand("eval", "score results against ground truth");
    ev->add_option("--results", results, "results CSV (repeatable)")->required();
    ev->add_option("--truth", truths, "ground-truth CSV or sequence dir (repeatable)")->required();
    ev->add_option("--out", out_path, "metrics JSON")->required();
    ev->add_option("--curves-dir", curves_dir, "directory for curve CSVs");
    ev->add_option("--delta-deg", delta_deg, "orientation tolerance, deg");
    ev->add_option("--alpha", alpha, "IoU gate for orientation SR");

    CLI::App* ck = app.add_subcommand("check", "run equivariance/steerability/gradient checks");
    ck->add_option("--trials", trials, "check repetitions");
    ck->add_option("--seed", seed, "check seed");

    CLI::App* ov = app.add_subcommand("overlay", "render boxes and orientation arrows");
    ov->add_option("--sequence", sequence, "sequence directory")->required();
    ov->add_option("--results", results_one, "results CSV")->required();
    ov->add_option("--out", out_dir, "output frame directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return run_gen(out_dir, config, count, start, rotate_deg, seed, gen_seed->count() > 0);
        if (tr->parsed())
            return run_train(dataset, out_path, config, trace_path, checkpoint_dir, Lambda, seed,
                             tr_seed->count() > 0);
        if (tk->parsed()) return run_track(weights, sequence, out_path, config, gamma);
        if (ev->parsed()) return run_eval(results, truths, out_path, curves_dir, delta_deg, alpha);
        if (ck->parsed()) return run_check(seed ? seed : 7, trials);
        if (ov->parsed()) return run_overlay(sequence, results_one, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
