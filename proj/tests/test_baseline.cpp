#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ball3d/baseline.hpp"
#include "ball3d/dataset.hpp"
#include "ball3d/errors.hpp"
#include "ball3d/metrics.hpp"
#include "test_support.hpp"

using namespace ball3d;

namespace {

struct Observed {
    std::vector<Pixel> pixels;
    std::vector<double> times;
};

Observed observe(const std::function<Vec3(double)>& path, const CameraModel& cam, int frames, double fps,
                 double start = 0.0) {
    Observed o;
    for (int i = 0; i < frames; ++i) {
        const double t = start + i / fps;
        o.times.push_back(t);
        o.pixels.push_back(project(path(t), cam));
    }
    return o;
}

}  // namespace

TEST(FitSegment, InverseCrimeFreeFlight) {
    const CameraModel cam = default_camera(Family::SingleLaunch);
    const Vec3 x0(1.2, 0.4, 1.0);
    const Vec3 v0(1.5, 2.0, 0.8);
    const double g = 9.81;
    const auto path = [&](double t) { return Vec3(x0 + v0 * t - Vec3(0, 0.5 * g * t * t, 0)); };
    const Observed o = observe(path, cam, 20, 50.0);
    SegmentSpan span;
    span.first = 0;
    span.last = 19;
    const ProjectileSegment seg = fit_segment(o.pixels, o.times, cam, span);
    EXPECT_TRUE(seg.converged);
    EXPECT_LT((seg.x0 - x0).norm(), 1e-6);
    EXPECT_LT((seg.v0 - v0).norm(), 1e-6);
    EXPECT_LT(seg.residual_rms_px, 1e-6);
}

TEST(FitSegment, InverseCrimeWithContacts) {
    const CameraModel cam = default_camera(Family::SingleLaunch);
    const double g = 9.81;
    const Vec3 v0(1.0, 2.5, 1.3);
    const Vec3 x0(0.5, 0.0, 0.7);
    const double t_land = 2.0 * v0.y() / g;
    const auto path = [&](double t) { return Vec3(x0 + v0 * t - Vec3(0, 0.5 * g * t * t, 0)); };
    const int frames = static_cast<int>(std::floor(t_land * 50.0)) + 1;
    const Observed o = observe(path, cam, frames, 50.0);
    SegmentSpan span;
    span.first = 0;
    span.last = frames - 1;
    span.contact_start = 0.0;
    span.contact_end = t_land;
    const ProjectileSegment seg = fit_segment(o.pixels, o.times, cam, span);
    EXPECT_LT((seg.x0 - x0).norm(), 1e-6);
    EXPECT_LT((seg.v0 - v0).norm(), 1e-6);
    EXPECT_NEAR(seg.position(t_land).y(), 0.0, 1e-6);
}

TEST(FitSegment, InverseCrimeRolling) {
    const CameraModel cam = default_camera(Family::SingleLaunch);
    const Vec3 x0(1.0, 0.0, 1.5);
    const Vec3 v0(1.2, 0.0, 0.6);
    const Vec3 a0(-0.9, 0.0, -0.45);
    const auto path = [&](double t) { return Vec3(x0 + v0 * t + 0.5 * a0 * t * t); };
    const Observed o = observe(path, cam, 25, 50.0, 0.3);
    SegmentSpan span;
    span.kind = MotionKind::Rolling;
    span.last = 24;
    const ProjectileSegment seg = fit_segment(o.pixels, o.times, cam, span);
    for (std::size_t i = 0; i < o.times.size(); ++i) EXPECT_LT((seg.position(o.times[i]) - path(o.times[i])).norm(), 1e-6);
    EXPECT_LT((seg.a0 - a0).norm(), 1e-6);
}

TEST(FitSegment, RepeatedObservationIsSingular) {
    const CameraModel cam = default_camera(Family::SingleLaunch);
    const std::vector<Pixel> pixels(5, project({1.0, 0.3, 1.0}, cam));
    const std::vector<double> times(5, 0.1);
    SegmentSpan span;
    span.last = 4;
    EXPECT_THROW(fit_segment(pixels, times, cam, span), SingularNormalEquations);
}

TEST(FitSegment, NoisyFitBeatsTruthOnItsObjective) {
    const CameraModel cam = default_camera(Family::SingleLaunch);
    const Vec3 x0(1.2, 0.4, 1.0);
    const Vec3 v0(1.5, 2.0, 0.8);
    const auto path = [&](double t) { return Vec3(x0 + v0 * t - Vec3(0, 4.905 * t * t, 0)); };
    Observed o = observe(path, cam, 25, 50.0);
    Rng rng = make_stream(1, "fit-noise");
    double truth_sq = 0.0;
    for (std::size_t i = 0; i < o.pixels.size(); ++i) {
        o.pixels[i].u += uniform(rng, -10, 10);
        o.pixels[i].v += uniform(rng, -10, 10);
        const Pixel p = project(path(o.times[i]), cam);
        truth_sq += std::pow(p.u - o.pixels[i].u, 2) + std::pow(p.v - o.pixels[i].v, 2);
    }
    SegmentSpan span;
    span.last = 24;
    const ProjectileSegment seg = fit_segment(o.pixels, o.times, cam, span);
    EXPECT_LE(seg.residual_rms_px, std::sqrt(truth_sq / 25.0) + 1e-9);
}

TEST(Segmentation, CleanProjectileIsOneSegment) {
    const CameraModel cam = default_camera(Family::SingleLaunch);
    const auto path = [](double t) { return Vec3(1.0 + 1.5 * t, 2.5 * t - 4.905 * t * t, 1.0 + 0.5 * t); };
    Sequence seq;
    seq.fps = 50.0;
    for (int i = 0; i <= 25; ++i) {
        TrackSample s;
        s.frame_index = i;
        s.gt_point = path(i / 50.0);
        seq.samples.push_back(s);
    }
    seq = render_track(seq, cam);
    EXPECT_EQ(segment_track(seq, cam, SegmentMode::Heuristic).size(), 1u);
}

TEST(Segmentation, GroundTruthOneArcPerBounceInterval) {
    const CameraModel cam = default_camera(Family::SingleLaunch);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Sequence seq = test::rendered(Family::SingleLaunch, seed);
        int bounces = 0;
        bool settles = false;
        for (const auto& e : seq.events) {
            bounces += e.kind == EventKind::Bounce;
            settles = settles || e.kind == EventKind::Settle;
        }
        const auto spans = segment_track(seq, cam, SegmentMode::GroundTruthFlags);
        int arcs = 0;
        int rolls = 0;
        for (const auto& s : spans) {
            arcs += s.kind == MotionKind::Projectile;
            rolls += s.kind == MotionKind::Rolling;
            EXPECT_LE(s.first, s.last);
        }
        EXPECT_EQ(arcs, bounces + (settles ? 1 : 0)) << "seed " << seed;
        EXPECT_EQ(spans.front().first, 0);
        EXPECT_EQ(spans.back().last, static_cast<int>(seq.size()) - 1);
        (void)rolls;
    }
}

TEST(Segmentation, HeuristicFindsTrueBounces) {
    const CameraModel cam = default_camera(Family::SingleLaunch);
    SimConfig config = default_sim_config(Family::SingleLaunch);
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        config.seed = seed;
        const SimTrace trace = simulate_family(config);
        const Sequence seq = render_track(trace.sequence, cam);
        const auto spans = segment_track(seq, cam, SegmentMode::Heuristic);
        for (const auto& b : trace.bounces) {
            // Hops shorter than a few frames cannot be separated from noise-free rolling.
            if (b.settled || std::abs(b.vy_before) < 0.6) continue;
            const int frame = static_cast<int>(std::lround(b.time * seq.fps));
            bool found = false;
            for (const auto& s : spans) found = found || std::abs(s.first - frame) <= 2 || std::abs(s.last - frame) <= 2;
            EXPECT_TRUE(found) << "seed " << seed << " bounce frame " << frame;
            ++checked;
        }
    }
    EXPECT_GT(checked, 20);
}

TEST(Segmentation, ShortTracks) {
    const CameraModel cam = default_camera(Family::SingleLaunch);
    Sequence seq = test::rendered(Family::SingleLaunch, 1);
    seq.samples.resize(3);
    EXPECT_THROW(segment_track(seq, cam, SegmentMode::Heuristic), SequenceTooShort);
    EXPECT_THROW(segment_track(Sequence{}, cam, SegmentMode::Heuristic), NoSegments);
}

TEST(BaselinePredict, NoiseFreeWithinOneCentimetre) {
    const CameraModel cam = default_camera(Family::SingleLaunch);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Sequence seq = test::rendered(Family::SingleLaunch, seed);
        const auto gt = seq.ground_truth();
        const FitResult fit = baseline_predict(seq, cam, SegmentMode::GroundTruthFlags);
        ASSERT_EQ(fit.points.size(), gt.size());
        for (std::size_t t = 0; t < gt.size(); ++t) EXPECT_LT((fit.points[t] - gt[t]).norm(), 0.01) << "seed " << seed;
        EXPECT_LT(fit.reprojection_rmse_px, 0.5);
    }
}

TEST(BaselinePredict, FallbackStillReturnsPoints) {
    const CameraModel cam = default_camera(Family::SingleLaunch);
    Sequence seq = test::rendered(Family::SingleLaunch, 3);
    // A static ball: nothing to segment, and no motion to fit.
    for (auto& s : seq.samples) s.pixel = seq.samples[0].pixel;
    const FitResult fit = baseline_predict(seq, cam, SegmentMode::Heuristic);
    EXPECT_EQ(fit.points.size(), seq.size());
    for (const auto& p : fit.points) EXPECT_TRUE(p.allFinite());
}

TEST(BaselinePredict, ErrorGrowsWithNoise) {
    const CameraModel cam = default_camera(Family::SingleLaunch);
    std::vector<Sequence> seqs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) seqs.push_back(test::rendered(Family::SingleLaunch, 50 + seed));
    double previous = -1.0;
    for (double k : {0.0, 10.0, 25.0}) {
        std::vector<std::vector<Vec3>> preds;
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            Rng rng = make_stream(3, "sweep", i);
            const Sequence noisy = k > 0 ? add_pixel_noise(seqs[i], cam, PixelNoise::uniform(k), rng) : seqs[i];
            preds.push_back(baseline_predict(noisy, cam, SegmentMode::Heuristic).points);
        }
        const double err = evaluate(preds, seqs).nrmse_range;
        EXPECT_GT(err, previous) << "noise " << k;
        if (k == 0.0) EXPECT_LE(err, 0.15);
        previous = err;
    }
}
