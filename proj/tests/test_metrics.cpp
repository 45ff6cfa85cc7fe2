#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "ball3d/errors.hpp"
#include "ball3d/metrics.hpp"
#include "test_support.hpp"

using namespace ball3d;

namespace {

std::vector<Vec3> random_points(Rng& rng, int n) {
    std::vector<Vec3> out;
    for (int i = 0; i < n; ++i) out.emplace_back(uniform(rng, -3, 3), uniform(rng, 0, 2), uniform(rng, 0, 5));
    return out;
}

}  // namespace

TEST(Rmse, Examples) {
    const std::vector<Vec3> gt{{0, 0, 0}, {1, 1, 1}};
    EXPECT_EQ(rmse(gt, gt), 0.0);
    const std::vector<Vec3> one_gt{{0, 0, 0}};
    const std::vector<Vec3> one_pred{{3, 4, 0}};
    EXPECT_DOUBLE_EQ(rmse(one_pred, one_gt), 5.0);
    EXPECT_DOUBLE_EQ(rmse(one_pred, one_gt, ErrorAxes::HeightOnly), 4.0);
    EXPECT_THROW(rmse(one_pred, gt), LengthMismatch);
}

TEST(Rmse, BruteForceAndTranslationInvariance) {
    Rng rng = make_stream(1, "rmse");
    const auto a = random_points(rng, 40);
    const auto b = random_points(rng, 40);
    double sq = 0.0;
    double sq_y = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (int k = 0; k < 3; ++k) sq += (a[i][k] - b[i][k]) * (a[i][k] - b[i][k]);
        sq_y += (a[i].y() - b[i].y()) * (a[i].y() - b[i].y());
    }
    EXPECT_NEAR(rmse(a, b), std::sqrt(sq / 40.0), 1e-12);
    EXPECT_NEAR(rmse(a, b, ErrorAxes::HeightOnly), std::sqrt(sq_y / 40.0), 1e-12);
    auto as = a;
    auto bs = b;
    const Vec3 shift(10.0, -3.0, 7.0);
    for (auto& p : as) p += shift;
    for (auto& p : bs) p += shift;
    EXPECT_NEAR(rmse(as, bs), rmse(a, b), 1e-12);
    EXPECT_NEAR(nrmse(as, bs), nrmse(a, b), 1e-12);
}

TEST(Nrmse, RangeAndDegenerate) {
    std::vector<Vec3> gt{{0, 0, 0}, {10, 1, 2}};
    std::vector<Vec3> pred{{0.1, 0, 0}, {10.1, 1, 2}};
    EXPECT_NEAR(nrmse(pred, gt), 0.1 / 10.0, 1e-12);
    EXPECT_DOUBLE_EQ(max_axis_range(gt), 10.0);
    const std::vector<Vec3> still(4, Vec3(1, 2, 3));
    EXPECT_THROW(nrmse(still, still), DegenerateRange);
}

TEST(NrmseVariants, PercentOfDenominator) {
    const auto v = nrmse_variants(0.0133, {{"area_length", 10.92}, {"self", 0.0133}});
    EXPECT_NEAR(v.at("area_length"), 0.12, 0.005);
    EXPECT_DOUBLE_EQ(v.at("self"), 100.0);
}

TEST(NrmseVariants, CameraDistanceByHand) {
    const CameraModel cam = CameraModel::look_at({0, 3, -4}, {0, 0, 0}, 1000, {100, 100});
    const std::vector<Vec3> pts{{0, 3, 0}, {0, 0, -4}};
    EXPECT_NEAR(mean_camera_distance(cam, pts), (4.0 + 3.0) / 2.0, 1e-12);
}

TEST(Landings, DetectLocalMinimaWithSuppression) {
    std::vector<Vec3> pred;
    const std::vector<double> ys{0.0, 0.3, 0.1, 0.02, 0.1, 0.3, 0.04, 0.03, 0.2, 0.5, 0.4, 0.0};
    for (std::size_t t = 0; t < ys.size(); ++t) pred.emplace_back(static_cast<double>(t), ys[t], 0.0);
    const auto found = detect_landings(pred, 0.05, 3);
    ASSERT_EQ(found.size(), 2u);
    EXPECT_EQ(found[0].frame, 3);
    EXPECT_EQ(found[1].frame, 7);
    EXPECT_DOUBLE_EQ(found[0].ground.x(), 3.0);
    // Endpoints are never landings, and nearby minima keep only the lowest.
    const auto wide = detect_landings(pred, 0.05, 5);
    ASSERT_EQ(wide.size(), 1u);
    EXPECT_EQ(wide[0].frame, 3);
}

TEST(Landings, IdenticalEventsArePerfect) {
    const std::vector<LandingEvent> events{{5, {1.0, 2.0}}, {20, {4.0, -1.0}}};
    const LandingCounts c = match_landings(events, events, 0.5, 3);
    const LandingReport r = landing_report(c, 0.5, 3);
    EXPECT_DOUBLE_EQ(r.t_acc, 100.0);
    EXPECT_DOUBLE_EQ(r.t_f1, 1.0);
    ASSERT_TRUE(r.le.has_value());
    EXPECT_DOUBLE_EQ(*r.le, 0.0);
}

TEST(Landings, NoPredictionsAndNoTruth) {
    const std::vector<LandingEvent> gt{{5, {1.0, 2.0}}};
    const LandingReport r = landing_report(match_landings({}, gt, 0.5, 3), 0.5, 3);
    EXPECT_EQ(r.t_acc, 0.0);
    EXPECT_EQ(r.t_f1, 0.0);
    EXPECT_FALSE(r.le.has_value());
    EXPECT_THROW(landing_report(match_landings(gt, {}, 0.5, 3), 0.5, 3), NoGroundTruthEvents);
}

TEST(Landings, GreedyMatchingWindowAndRadius) {
    const std::vector<LandingEvent> gt{{10, {0.0, 0.0}}, {30, {5.0, 0.0}}};
    const std::vector<LandingEvent> pred{{11, {0.3, 0.4}}, {12, {0.0, 0.0}}, {40, {5.0, 0.0}}, {29, {6.0, 0.0}}};
    const LandingCounts c = match_landings(pred, gt, 0.5, 3);
    EXPECT_EQ(c.gt, 2);
    EXPECT_EQ(c.predicted, 4);
    EXPECT_EQ(c.matched, 2);
    EXPECT_EQ(c.correct, 1);  // frame offset wins over distance: 11 pairs with 10, 29 with 30 (1 m off)
    EXPECT_NEAR(c.distance_sum, 0.5 + 1.0, 1e-12);
    const LandingReport r = landing_report(c, 0.5, 3);
    EXPECT_DOUBLE_EQ(r.t_acc, 50.0);
    EXPECT_DOUBLE_EQ(r.precision, 0.5);
    EXPECT_DOUBLE_EQ(r.recall, 1.0);
    EXPECT_NEAR(r.t_f1, 2 * r.precision * r.recall / (r.precision + r.recall), 1e-15);
    EXPECT_NEAR(*r.le, 0.75, 1e-12);
}

TEST(Landings, GroundTruthFromInteriorBounces) {
    const Sequence seq = test::rendered(Family::TennisRally, 4);
    const auto gt = ground_truth_landings(seq);
    int interior = 0;
    for (const auto& e : seq.events)
        interior += e.kind == EventKind::Bounce && e.frame > 0 && e.frame < static_cast<int>(seq.size()) - 1;
    EXPECT_EQ(static_cast<int>(gt.size()), interior);
    EXPECT_GT(interior, 0);
}

TEST(Evaluate, PerfectPredictionsAndPooledRange) {
    std::vector<Sequence> seqs{test::rendered(Family::TennisRally, 1), test::rendered(Family::TennisRally, 2)};
    std::vector<std::vector<Vec3>> preds;
    std::vector<Vec3> pooled;
    for (const auto& s : seqs) {
        preds.push_back(s.ground_truth());
        const auto gt = s.ground_truth();
        pooled.insert(pooled.end(), gt.begin(), gt.end());
    }
    EvalOptions options;
    options.landing = true;
    options.denominators["area_length"] = Court::kLength;
    const MetricReport r = evaluate(preds, seqs, options);
    EXPECT_EQ(r.rmse_distance, 0.0);
    EXPECT_EQ(r.nrmse_range, 0.0);
    EXPECT_DOUBLE_EQ(r.range, max_axis_range(pooled));
    EXPECT_EQ(r.nrmse_by.at("area_length"), 0.0);
    ASSERT_TRUE(r.landing.has_value());
    EXPECT_EQ(r.sequence_count, 2u);
    EXPECT_EQ(r.sample_count, pooled.size());
    const auto j = r.to_json();
    EXPECT_TRUE(j.contains("nrmse_range"));
    EXPECT_THROW(evaluate({preds[0]}, seqs), LengthMismatch);
}

TEST(Evaluate, CsvTable) {
    const Sequence s = test::rendered(Family::SingleLaunch, 1);
    const MetricReport r = evaluate({s.ground_truth()}, {s});
    const auto path = test::temp_path("table.csv");
    write_report_csv(path.string(), {{"a", r}, {"b", r}});
    std::ifstream in(path);
    std::string line;
    int rows = 0;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("label,rmse_distance,rmse_height,nrmse_range", 0), 0u);
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 2);
}
