#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "resiam/box.hpp"
#include "resiam/eval.hpp"
#include "resiam/rng.hpp"

using namespace resiam;

namespace {

std::vector<Box> jittered(const std::vector<Box>& truth, Rng& rng, double max_shift) {
    std::vector<Box> out;
    for (const Box& b : truth) {
        Box j = b;
        j.x += rng.uniform(-max_shift, max_shift);
        j.y += rng.uniform(-max_shift, max_shift);
        j.w *= 1.0 + rng.uniform(-0.2, 0.2);
        j.h *= 1.0 + rng.uniform(-0.2, 0.2);
        out.push_back(j);
    }
    return out;
}

} // namespace

TEST_CASE("iou handles identity, overlap, and degenerate boxes") {
    const Box a{10.0, 20.0, 8.0, 6.0};
    CHECK(iou(a, a) == 1.0);

    // Half-offset 2x2 squares: intersection 2, union 6 -> exactly 1/3.
    CHECK(iou(Box{0, 0, 2, 2}, Box{1, 0, 2, 2}) == 1.0 / 3.0);

    CHECK(iou(Box{0, 0, 2, 2}, Box{5, 5, 2, 2}) == 0.0);   // disjoint
    CHECK(iou(Box{0, 0, 2, 2}, Box{2, 0, 2, 2}) == 0.0);   // touching edge
    CHECK(iou(Box{0, 0, 0, 2}, Box{0, 0, 2, 2}) == 0.0);   // zero width
    CHECK(iou(Box{0, 0, -1, 2}, Box{0, 0, 2, 2}) == 0.0);  // negative extent
    CHECK(iou(Box{0, 0, 0, 0}, Box{0, 0, 0, 0}) == 0.0);   // both empty

    // Self-IoU stays in range even when edge arithmetic rounds.
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        const Box r{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0.1, 40),
                    rng.uniform(0.1, 40)};
        const double v = iou(r, r);
        CHECK(v <= 1.0);
        CHECK(v > 1.0 - 1e-12);
    }
}

TEST_CASE("frame_ious maps pairs and validates lengths") {
    const std::vector<Box> t{{0, 0, 2, 2}, {4, 4, 2, 2}};
    const std::vector<Box> r{{0, 0, 2, 2}, {5, 4, 2, 2}};
    const std::vector<double> v = frame_ious(r, t);
    REQUIRE(v.size() == 2);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 1.0 / 3.0);

    CHECK_THROWS_AS(frame_ious(r, std::vector<Box>{t[0]}), std::invalid_argument);
}

TEST_CASE("perfect tracking yields unit curves") {
    std::vector<Box> truth;
    Rng rng(11);
    for (int i = 0; i < 20; ++i)
        truth.push_back({rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(5, 30),
                         rng.uniform(5, 30)});
    const EvalCurves c = ope_curves(truth, truth);
    REQUIRE(c.success.size() == 101);
    REQUIRE(c.precision.size() == 51);
    for (int i = 0; i < 100; ++i) CHECK(c.success[static_cast<std::size_t>(i)] == 1.0);
    CHECK(c.success[100] == 0.0);  // IoU is never strictly > 1
    for (double v : c.precision) CHECK(v == 1.0);
    CHECK(c.auc == 100.0 / 101.0);
    CHECK(c.precision_at_20 == 1.0);
}

TEST_CASE("fully lost tracking yields zero curves") {
    std::vector<Box> truth, results;
    for (int i = 0; i < 10; ++i) {
        truth.push_back({0, 0, 4, 4});
        results.push_back({500, 500, 4, 4});  // disjoint and > 50 px away
    }
    const EvalCurves c = ope_curves(results, truth);
    for (double v : c.success) CHECK(v == 0.0);
    for (double v : c.precision) CHECK(v == 0.0);
    CHECK(c.auc == 0.0);
    CHECK(c.precision_at_20 == 0.0);
}

TEST_CASE("two-frame toy has exact curve values") {
    // Frame 0: exact hit (IoU 1, center error 0).
    // Frame 1: IoU exactly 1/3, center error exactly 1 px.
    const std::vector<Box> truth{{0, 0, 2, 2}, {0, 0, 2, 2}};
    const std::vector<Box> results{{0, 0, 2, 2}, {1, 0, 2, 2}};
    const EvalCurves c = ope_curves(results, truth);

    CHECK(c.success[0] == 1.0);
    CHECK(c.success[30] == 1.0);   // 1/3 > 0.30
    CHECK(c.success[33] == 1.0);   // 1/3 > 0.33
    CHECK(c.success[34] == 0.5);   // 1/3 < 0.34
    CHECK(c.success[50] == 0.5);
    CHECK(c.success[99] == 0.5);   // 1.0 > 0.99
    CHECK(c.success[100] == 0.0);

    CHECK(c.precision[0] == 0.5);  // only the exact hit has error <= 0
    CHECK(c.precision[1] == 1.0);  // 1 px error admitted at threshold 1
    CHECK(c.precision[50] == 1.0);
    CHECK(c.precision_at_20 == 1.0);
}

TEST_CASE("curves are monotone, bounded, and consistent with their scalars") {
    Rng rng(99);
    std::vector<Box> truth;
    for (int i = 0; i < 50; ++i)
        truth.push_back({rng.uniform(0, 200), rng.uniform(0, 200), rng.uniform(8, 40),
                         rng.uniform(8, 40)});
    const std::vector<Box> results = jittered(truth, rng, 30.0);
    const EvalCurves c = ope_curves(results, truth);

    for (std::size_t i = 0; i + 1 < c.success.size(); ++i)
        CHECK(c.success[i] >= c.success[i + 1]);
    for (std::size_t j = 0; j + 1 < c.precision.size(); ++j)
        CHECK(c.precision[j] <= c.precision[j + 1]);
    for (double v : c.success) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    for (double v : c.precision) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    double mean = 0.0;
    for (double v : c.success) mean += v;
    mean /= static_cast<double>(c.success.size());
    CHECK(c.auc == mean);
    CHECK(c.precision_at_20 == c.precision[20]);
}

TEST_CASE("ope_curves rejects bad input") {
    const std::vector<Box> one{{0, 0, 2, 2}};
    CHECK_THROWS_AS(ope_curves({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(ope_curves(one, std::vector<Box>{}), std::invalid_argument);
    CHECK_THROWS_AS(ope_curves(one, std::vector<Box>{one[0], one[0]}), std::invalid_argument);
}

TEST_CASE("average_curves is the element-wise mean") {
    const std::vector<Box> truth{{0, 0, 2, 2}, {0, 0, 2, 2}};
    const EvalCurves a = ope_curves(truth, truth);                       // perfect
    const EvalCurves b = ope_curves({{1, 0, 2, 2}, {5, 5, 2, 2}}, truth); // 1/3 and 0

    const EvalCurves avg = average_curves({a, b});
    REQUIRE(avg.success.size() == 101);
    REQUIRE(avg.precision.size() == 51);
    for (std::size_t i = 0; i < avg.success.size(); ++i)
        CHECK(avg.success[i] == 0.5 * (a.success[i] + b.success[i]));
    for (std::size_t j = 0; j < avg.precision.size(); ++j)
        CHECK(avg.precision[j] == 0.5 * (a.precision[j] + b.precision[j]));
    CHECK(avg.auc == 0.5 * (a.auc + b.auc));
    CHECK(avg.precision_at_20 == 0.5 * (a.precision_at_20 + b.precision_at_20));

    // Averaging a curve with itself is the identity.
    const EvalCurves same = average_curves({a, a, a});
    for (std::size_t i = 0; i < same.success.size(); ++i)
        CHECK(same.success[i] == a.success[i]);

    CHECK_THROWS_AS(average_curves({}), std::invalid_argument);
    EvalCurves bad = a;
    bad.success.pop_back();
    CHECK_THROWS_AS(average_curves({bad}), std::invalid_argument);
}

TEST_CASE("wrap_angle_deg lands in (-180, 180]") {
    CHECK(wrap_angle_deg(0.0) == 0.0);
    CHECK(wrap_angle_deg(90.0) == 90.0);
    CHECK(wrap_angle_deg(180.0) == 180.0);
    CHECK(wrap_angle_deg(-180.0) == 180.0);
    CHECK(wrap_angle_deg(190.0) == -170.0);
    CHECK(wrap_angle_deg(-190.0) == 170.0);
    CHECK(wrap_angle_deg(360.0) == 0.0);
    CHECK(wrap_angle_deg(540.0) == 180.0);
    CHECK(wrap_angle_deg(359.0 - 1.0) == -2.0);
    CHECK(wrap_angle_deg(-2.0 - 359.0) == -1.0);
    for (double d : {-1234.5, -77.0, 13.25, 800.0, 7200.5}) {
        const double w = wrap_angle_deg(d);
        CHECK(w > -180.0);
        CHECK(w <= 180.0);
        // Same angle modulo full turns.
        CHECK(std::abs(std::remainder(w - d, 360.0)) < 1e-9);
    }
}

TEST_CASE("orientation_sr gates on wrapped angle error and overlap") {
    const std::vector<double> truth{0.0, 45.0, 90.0, 350.0};
    const std::vector<double> good_iou{0.9, 0.9, 0.9, 0.9};

    CHECK(orientation_sr(truth, truth, 1e-9, good_iou, 0.5) == 1.0);

    // Frame-by-frame: hit, angle miss, overlap miss, wrap-around hit
    // (truth 350 vs pred -6: raw diff -356 wraps to +4).
    const std::vector<double> pred{2.0, 80.0, 90.0, -6.0};
    const std::vector<double> mixed_iou{0.9, 0.9, 0.1, 0.9};
    CHECK(orientation_sr(pred, truth, 5.0, mixed_iou, 0.5) == 0.5);

    // delta = 180 makes the angle gate vacuous: SR equals the overlap hit rate.
    const std::vector<double> far{170.0, -170.0, 10.0, 200.0};
    CHECK(orientation_sr(far, truth, 180.0, mixed_iou, 0.5) == 0.75);

    CHECK_THROWS_AS(orientation_sr({}, {}, 5.0, {}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(orientation_sr(pred, {0.0}, 5.0, mixed_iou, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(orientation_sr(pred, truth, 5.0, {0.9}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(orientation_sr(pred, truth, 0.0, mixed_iou, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(orientation_sr(pred, truth, -3.0, mixed_iou, 0.5), std::invalid_argument);
}

TEST_CASE("random orientation baseline is delta over pi") {
    CHECK(random_baseline(M_PI / 4.0) == 0.25);
    CHECK(random_baseline(M_PI / 8.0) == 0.125);
    CHECK(random_baseline(M_PI / 16.0) == 0.0625);
    CHECK(random_baseline(M_PI) == 1.0);
    CHECK_THROWS_AS(random_baseline(0.0), std::invalid_argument);
    CHECK_THROWS_AS(random_baseline(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(random_baseline(M_PI + 0.01), std::invalid_argument);
}

TEST_CASE("curve CSV serialization") {
    const std::vector<Box> truth{{0, 0, 2, 2}, {0, 0, 2, 2}};
    const EvalCurves c = ope_curves({{0, 0, 2, 2}, {1, 0, 2, 2}}, truth);

    const std::string s = success_curve_csv(c);
    const std::string p = precision_curve_csv(c);

    std::istringstream ss(s);
    std::string line;
    REQUIRE(std::getline(ss, line));
    CHECK(line == "threshold,success");
    int rows = 0;
    while (std::getline(ss, line)) {
        double thr = 0.0, val = 0.0;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf", &thr, &val) == 2);
        CHECK(thr == rows / 100.0);
        CHECK(val == c.success[static_cast<std::size_t>(rows)]);
        ++rows;
    }
    CHECK(rows == 101);

    std::istringstream ps(p);
    REQUIRE(std::getline(ps, line));
    CHECK(line == "threshold,precision");
    rows = 0;
    while (std::getline(ps, line)) {
        double thr = 0.0, val = 0.0;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf", &thr, &val) == 2);
        CHECK(thr == static_cast<double>(rows));
        CHECK(val == c.precision[static_cast<std::size_t>(rows)]);
        ++rows;
    }
    CHECK(rows == 51);
}
