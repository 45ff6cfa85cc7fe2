#include <cmath>

#include <gtest/gtest.h>

#include "ball3d/errors.hpp"
#include "ball3d/gap_filler.hpp"
#include "test_support.hpp"

using namespace ball3d;

namespace {

/// Straight track with constant pixel velocity.
Sequence constant_velocity(double u0, double v0, double du, double dv, int n) {
    Sequence s;
    for (int t = 0; t < n; ++t) {
        TrackSample sample;
        sample.frame_index = t;
        sample.pixel = Pixel{u0 + du * t, v0 + dv * t};
        s.samples.push_back(sample);
    }
    return s;
}

std::vector<Sequence> constant_velocity_set(std::uint64_t seed, int count, int length) {
    Rng rng = make_stream(seed, "cv");
    std::vector<Sequence> out;
    for (int i = 0; i < count; ++i) {
        out.push_back(constant_velocity(uniform(rng, 100, 900), uniform(rng, 100, 600), uniform(rng, -8, 8),
                                        uniform(rng, -8, 8), length));
    }
    return out;
}

const GapFillerWeights& trained_constant_velocity_model() {
    static const GapFillerWeights w = [] {
        GapFillerConfig config;
        config.epochs = 40;
        config.batch_size = 8;
        config.lr = 3e-3;
        config.seed = 5;
        return train_gap_filler(constant_velocity_set(1, 120, 16), config);
    }();
    return w;
}

}  // namespace

TEST(GapFiller, LayerShapes) {
    const GapFillerWeights w = GapFillerWeights::create();
    const std::vector<nn::Index> head{64, 64, 32, 16, 8, 4, 2};
    for (const auto* prefix : {"gap_fwd", "gap_bwd"}) {
        for (int k = 0; k < 4; ++k) {
            EXPECT_GE(w.params.find(std::string(prefix) + ".lstm" + std::to_string(k) + ".w_hh"), 0) << prefix << k;
        }
        EXPECT_LT(w.params.find(std::string(prefix) + ".lstm4.w_hh"), 0);
        for (std::size_t k = 0; k + 1 < head.size(); ++k) {
            const int id = w.params.find(std::string(prefix) + ".head.fc" + std::to_string(k) + ".weight");
            ASSERT_GE(id, 0);
            EXPECT_EQ(w.params.value(id).rows(), head[k + 1]);
            EXPECT_EQ(w.params.value(id).cols(), head[k]);
        }
    }
}

TEST(GapFiller, CompleteTrackIsUnchanged) {
    const GapFillerWeights w = GapFillerWeights::create();
    const Sequence s = test::rendered(Family::SingleLaunch, 3);
    const Sequence filled = fill_missing(s, w);
    ASSERT_EQ(filled.size(), s.size());
    for (std::size_t t = 0; t < s.size(); ++t) {
        EXPECT_EQ(filled.samples[t].pixel->u, s.samples[t].pixel->u);
        EXPECT_EQ(filled.samples[t].pixel->v, s.samples[t].pixel->v);
    }
}

TEST(GapFiller, MissingEndpointsAreUnbounded) {
    const GapFillerWeights w = GapFillerWeights::create();
    Sequence s = constant_velocity(0, 0, 1, 1, 10);
    s.samples.front().pixel.reset();
    EXPECT_THROW(fill_missing(s, w), UnboundedGap);
    s = constant_velocity(0, 0, 1, 1, 10);
    s.samples.back().pixel.reset();
    EXPECT_THROW(fill_missing(s, w), UnboundedGap);
}

TEST(GapFiller, KnownPixelsKeptAndGapsFilled) {
    GapFillerWeights w = GapFillerWeights::create();
    Rng rng = make_stream(2, "gap-init");
    nn::initialize_uniform(w.params, rng);
    Sequence s = test::rendered(Family::SingleLaunch, 4);
    const Sequence original = s;
    for (std::size_t t : {3u, 4u, 5u, 10u}) {
        s.samples[t].pixel.reset();
        s.samples[t].plane_points.reset();
    }
    const Sequence filled = fill_missing(s, w);
    ASSERT_TRUE(filled.has_complete_pixels());
    for (std::size_t t = 0; t < s.size(); ++t) {
        if (s.samples[t].pixel) {
            EXPECT_EQ(filled.samples[t].pixel->u, original.samples[t].pixel->u);
            EXPECT_EQ(filled.samples[t].pixel->v, original.samples[t].pixel->v);
        } else {
            EXPECT_TRUE(std::isfinite(filled.samples[t].pixel->u));
            EXPECT_FALSE(filled.samples[t].plane_points.has_value());
        }
    }
}

TEST(GapFiller, RejectsUnusableTrainingData) {
    GapFillerConfig config;
    config.epochs = 1;
    EXPECT_THROW(train_gap_filler({}, config), InvalidArgument);
    Sequence holes = constant_velocity(0, 0, 1, 1, 8);
    holes.samples[3].pixel.reset();
    EXPECT_THROW(train_gap_filler({holes}, config), InvalidArgument);
    EXPECT_THROW(train_gap_filler({constant_velocity(0, 0, 1, 1, 2)}, config), SequenceTooShort);
    config.epochs = 0;
    EXPECT_THROW(train_gap_filler({constant_velocity(0, 0, 1, 1, 8)}, config), InvalidArgument);
}

TEST(GapFiller, LossTrendsDownward) {
    GapFillerConfig config;
    config.epochs = 10;
    config.batch_size = 4;
    config.lr = 3e-3;
    config.seed = 9;
    std::vector<double> losses;
    train_gap_filler(constant_velocity_set(7, 12, 12), config, &losses);
    ASSERT_EQ(losses.size(), 10u);
    auto window_mean = [&](std::size_t begin) { return (losses[begin] + losses[begin + 1] + losses[begin + 2]) / 3.0; };
    EXPECT_LT(window_mean(7), window_mean(0));
}

TEST(GapFiller, LearnsConstantVelocity) {
    const GapFillerWeights& w = trained_constant_velocity_model();
    const auto test_set = constant_velocity_set(99, 8, 16);
    double error_sum = 0.0;
    double speed_sum = 0.0;
    int count = 0;
    for (const Sequence& s : test_set) {
        const auto pixels = s.pixels();
        const auto pred = predict_next_deltas(w, pixels);
        ASSERT_EQ(pred.size(), pixels.size() - 1);
        for (std::size_t k = 1; k < pred.size(); ++k) {
            const Eigen::Vector2d truth(pixels[k + 1].u - pixels[k].u, pixels[k + 1].v - pixels[k].v);
            error_sum += (pred[k] - truth).norm();
            speed_sum += truth.norm();
            ++count;
        }
    }
    // A model that ignored its history would be off by the mean speed.
    EXPECT_LT(error_sum / count, 1.0);
    EXPECT_LT(error_sum, 0.25 * speed_sum);
}

TEST(GapFiller, SingleMissingPointMatchesLinearInterpolation) {
    const GapFillerWeights& w = trained_constant_velocity_model();
    for (const Sequence& original : constant_velocity_set(98, 6, 16)) {
        for (const std::size_t t : {4u, 9u, 13u}) {
            Sequence s = original;
            s.samples[t].pixel.reset();
            const Sequence filled = fill_missing(s, w);
            const Pixel& a = *original.samples[t - 1].pixel;
            const Pixel& b = *original.samples[t + 1].pixel;
            EXPECT_NEAR(filled.samples[t].pixel->u, 0.5 * (a.u + b.u), 1.5);
            EXPECT_NEAR(filled.samples[t].pixel->v, 0.5 * (a.v + b.v), 1.5);
        }
    }
}

TEST(GapFiller, CheckpointRoundTrip) {
    GapFillerWeights w = GapFillerWeights::create(64, 0.2);
    Rng rng = make_stream(4, "gap-init");
    nn::initialize_uniform(w.params, rng);
    const auto path = test::temp_path("gap.ckpt");
    save_gap_filler(path, w);
    const GapFillerWeights r = load_gap_filler(path);
    EXPECT_EQ(r.delta_scale, 0.2);
    for (int id = 0; id < w.params.size(); ++id) EXPECT_EQ(r.params.value(id), w.params.value(id));
    EXPECT_THROW(load_gap_filler(test::temp_path("missing.ckpt")), CheckpointError);
}
