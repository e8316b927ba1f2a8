#include "resiam/eval.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace resiam {

namespace {

constexpr int kSuccessSamples = 101;   // overlap thresholds i/100, i = 0..100
constexpr int kPrecisionSamples = 51;  // center-error thresholds j px, j = 0..50

std::string curve_csv(const char* name, const std::vector<double>& values, double denom) {
    std::string out = std::string("threshold,") + name + "\n";
    char buf[64];
    for (std::size_t i = 0; i < values.size(); ++i) {
        // i/denom reproduces the thresholds the curves were sampled at.
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", static_cast<double>(i) / denom,
                      values[i]);
        out += buf;
    }
    return out;
}

} // namespace

double wrap_angle_deg(double deg) {
    double r = std::remainder(deg, 360.0);
    if (r <= -180.0) r += 360.0;
    return r;
}

std::vector<double> frame_ious(const std::vector<Box>& results, const std::vector<Box>& truth) {
    if (results.size() != truth.size())
        throw std::invalid_argument("frame_ious: " + std::to_string(results.size()) +
                                    " results vs " + std::to_string(truth.size()) +
                                    " ground-truth frames");
    std::vector<double> out;
    out.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) out.push_back(iou(results[i], truth[i]));
    return out;
}

EvalCurves ope_curves(const std::vector<Box>& results, const std::vector<Box>& truth) {
    if (results.empty()) throw std::invalid_argument("ope_curves: empty input");
    const std::vector<double> ious = frame_ious(results, truth);
    const double n = static_cast<double>(results.size());

    EvalCurves c;
    c.success.resize(kSuccessSamples);
    for (int i = 0; i < kSuccessSamples; ++i) {
        const double tau = i / 100.0;
        int hits = 0;
        for (double v : ious) hits += (v > tau) ? 1 : 0;
        c.success[static_cast<std::size_t>(i)] = hits / n;
    }

    c.precision.resize(kPrecisionSamples);
    for (int j = 0; j < kPrecisionSamples; ++j) {
        int hits = 0;
        for (std::size_t i = 0; i < results.size(); ++i) {
            const double err = std::hypot(results[i].cx() - truth[i].cx(),
                                          results[i].cy() - truth[i].cy());
            hits += (err <= static_cast<double>(j)) ? 1 : 0;
        }
        c.precision[static_cast<std::size_t>(j)] = hits / n;
    }

    double sum = 0.0;
    for (double v : c.success) sum += v;
    c.auc = sum / kSuccessSamples;
    c.precision_at_20 = c.precision[20];
    return c;
}

EvalCurves average_curves(const std::vector<EvalCurves>& per_sequence) {
    if (per_sequence.empty()) throw std::invalid_argument("average_curves: no sequences");
    EvalCurves avg;
    avg.success.assign(kSuccessSamples, 0.0);
    avg.precision.assign(kPrecisionSamples, 0.0);
    for (const EvalCurves& c : per_sequence) {
        if (c.success.size() != kSuccessSamples || c.precision.size() != kPrecisionSamples)
            throw std::invalid_argument("average_curves: malformed curve");
        for (int i = 0; i < kSuccessSamples; ++i)
            avg.success[static_cast<std::size_t>(i)] += c.success[static_cast<std::size_t>(i)];
        for (int j = 0; j < kPrecisionSamples; ++j)
            avg.precision[static_cast<std::size_t>(j)] +=
                c.precision[static_cast<std::size_t>(j)];
        avg.auc += c.auc;
        avg.precision_at_20 += c.precision_at_20;
    }
    const double n = static_cast<double>(per_sequence.size());
    for (double& v : avg.success) v /= n;
    for (double& v : avg.precision) v /= n;
    avg.auc /= n;
    avg.precision_at_20 /= n;
    return avg;
}

double orientation_sr(const std::vector<double>& pred_deg, const std::vector<double>& truth_deg,
                      double delta_deg, const std::vector<double>& ious, double alpha) {
    if (pred_deg.empty()) throw std::invalid_argument("orientation_sr: empty input");
    if (pred_deg.size() != truth_deg.size() || pred_deg.size() != ious.size())
        throw std::invalid_argument("orientation_sr: array lengths disagree");
    if (!(delta_deg > 0.0)) throw std::invalid_argument("orientation_sr: delta must be > 0");
    int hits = 0;
    for (std::size_t i = 0; i < pred_deg.size(); ++i) {
        const double err = std::abs(wrap_angle_deg(pred_deg[i] - truth_deg[i]));
        if (err <= delta_deg && ious[i] > alpha) ++hits;
    }
    return hits / static_cast<double>(pred_deg.size());
}

double random_baseline(double delta_rad) {
    if (!(delta_rad > 0.0) || !(delta_rad <= M_PI))
        throw std::invalid_argument("random_baseline: delta must lie in (0, pi]");
    return delta_rad / M_PI;
}

std::string success_curve_csv(const EvalCurves& curves) {
    return curve_csv("success", curves.success, 100.0);
}

std::string precision_curve_csv(const EvalCurves& curves) {
    return curve_csv("precision", curves.precision, 1.0);
}

} // namespace resiam
