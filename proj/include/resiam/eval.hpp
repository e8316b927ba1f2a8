#ifndef RESIAM_EVAL_HPP
#define RESIAM_EVAL_HPP

#include <string>
#include <vector>

#include "resiam/box.hpp"

namespace resiam {

/// One-pass-evaluation curves for a single sequence (or an average of
/// sequences): success over 101 overlap thresholds in [0,1] and precision
/// over 51 center-error thresholds in [0,50] px.
struct EvalCurves {
    std::vector<double> success;     // success[i] = fraction with IoU > i/100
    std::vector<double> precision;   // precision[j] = fraction with center error <= j
    double auc = 0.0;                // mean of the success samples
    double precision_at_20 = 0.0;
};

std::vector<double> frame_ious(const std::vector<Box>& results, const std::vector<Box>& truth);

EvalCurves ope_curves(const std::vector<Box>& results, const std::vector<Box>& truth);

/// OTB-style aggregation: the element-wise mean of per-sequence curves.
EvalCurves average_curves(const std::vector<EvalCurves>& per_sequence);

/// Fraction of frames whose wrapped angle error is within +-delta_deg AND
/// whose IoU exceeds alpha. delta_deg = 180 makes the angle gate vacuous.
double orientation_sr(const std::vector<double>& pred_deg, const std::vector<double>& truth_deg,
                      double delta_deg, const std::vector<double>& ious, double alpha);

/// Expected SR of a uniformly random orientation guess: delta / pi,
/// delta in radians, (0, pi].
double random_baseline(double delta_rad);

/// Signed wrap of an angle difference into (-180, 180].
double wrap_angle_deg(double deg);

std::string success_curve_csv(const EvalCurves& curves);
std::string precision_curve_csv(const EvalCurves& curves);

} // namespace resiam

#endif
