#include "ball3d/gap_filler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ball3d/errors.hpp"
#include "ball3d/nn/adam.hpp"
#include "ball3d/nn/checkpoint.hpp"

namespace ball3d {

using nn::Graph;
using nn::Index;
using nn::Matrix;
using nn::Var;

GapFillerWeights GapFillerWeights::create(Index hidden, double delta_scale) {
    GapFillerWeights w;
    w.delta_scale = delta_scale;
    const std::vector<Index> head = {hidden, 64, 32, 16, 8, 4, 2};
    w.forward_stack = nn::UniLstmStack::create(w.params, "gap_fwd", 2, 4, hidden, nn::Residual::Dense);
    w.forward_head = nn::MlpHead::create(w.params, "gap_fwd.head", head, nn::OutputActivation::Linear);
    w.backward_stack = nn::UniLstmStack::create(w.params, "gap_bwd", 2, 4, hidden, nn::Residual::Dense);
    w.backward_head = nn::MlpHead::create(w.params, "gap_bwd.head", head, nn::OutputActivation::Linear);
    return w;
}

namespace {

/// Scaled deltas (2 x N-1) of a complete track, optionally in reversed time.
Matrix scaled_deltas(const std::vector<Pixel>& pixels, double scale, bool reversed) {
    const auto n = static_cast<Index>(pixels.size());
    Matrix d(2, n - 1);
    for (Index k = 0; k + 1 < n; ++k) {
        const Pixel& a = pixels[static_cast<std::size_t>(reversed ? n - 1 - k : k)];
        const Pixel& b = pixels[static_cast<std::size_t>(reversed ? n - 2 - k : k + 1)];
        d(0, k) = (b.u - a.u) * scale;
        d(1, k) = (b.v - a.v) * scale;
    }
    return d;
}

/// Teacher-forced loss of one direction: inputs [0, d_0 .. d_{n-3}] predict [d_0 .. d_{n-2}].
Var direction_loss(Graph& g, const GapFillerWeights& w, const nn::UniLstmStack& stack, const nn::MlpHead& head,
                   const Matrix& deltas) {
    Matrix inputs = Matrix::Zero(2, deltas.cols());
    inputs.rightCols(deltas.cols() - 1) = deltas.leftCols(deltas.cols() - 1);
    const Var pred = head.run(g, w.params, stack.run(g, w.params, g.constant(std::move(inputs))));
    return nn::mean_squared_distance(pred, deltas);
}

Var sequence_loss(Graph& g, const GapFillerWeights& w, const std::vector<Pixel>& pixels) {
    const Var f = direction_loss(g, w, w.forward_stack, w.forward_head, scaled_deltas(pixels, w.delta_scale, false));
    const Var b = direction_loss(g, w, w.backward_stack, w.backward_head, scaled_deltas(pixels, w.delta_scale, true));
    return nn::add(f, b);
}

/// Autoregressive roll-out over a track with holes. Known pixels are copied; missing ones are
/// the previous estimate plus the predicted delta.
std::vector<Eigen::Vector2d> roll_out(const GapFillerWeights& w, const nn::UniLstmStack& stack,
                                      const nn::MlpHead& head, const std::vector<std::optional<Pixel>>& track) {
    const std::size_t n = track.size();
    std::vector<Eigen::Vector2d> out(n);
    out[0] = {track[0]->u, track[0]->v};
    Graph g;
    nn::StackState state = stack.initial_state(g);
    Eigen::Vector2d input = Eigen::Vector2d::Zero();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const Var pred = head.run(g, w.params, stack.step(g, w.params, g.constant(Matrix(input)), state));
        if (track[k + 1]) {
            out[k + 1] = {track[k + 1]->u, track[k + 1]->v};
        } else {
            out[k + 1] = out[k] + Eigen::Vector2d(pred.value()(0, 0), pred.value()(1, 0)) / w.delta_scale;
        }
        input = (out[k + 1] - out[k]) * w.delta_scale;
    }
    return out;
}

}  // namespace

GapFillerWeights train_gap_filler(const std::vector<Sequence>& sequences, const GapFillerConfig& config,
                                  std::vector<double>* epoch_losses) {
    if (sequences.empty()) throw InvalidArgument("gap filler needs training sequences");
    if (config.epochs < 1 || config.batch_size < 1) throw InvalidArgument("epochs and batch size must be positive");
    std::vector<std::vector<Pixel>> tracks;
    for (const Sequence& s : sequences) {
        if (!s.has_complete_pixels()) throw InvalidArgument("gap filler training needs complete pixel tracks");
        if (s.size() >= 3) tracks.push_back(s.pixels());
    }
    if (tracks.empty()) throw SequenceTooShort("gap filler training needs tracks of at least three frames");

    GapFillerWeights w = GapFillerWeights::create(64, config.delta_scale);
    Rng init = make_stream(config.seed, "gap-init");
    nn::initialize_uniform(w.params, init);
    nn::AdamState adam(w.params, config.lr);
    nn::GradientStore grads(w.params);

    std::vector<std::size_t> order(tracks.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng shuffle = make_stream(config.seed, "gap-shuffle", static_cast<std::uint64_t>(epoch));
        std::shuffle(order.begin(), order.end(), shuffle);
        double total = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
            grads.set_zero();
            for (std::size_t i = begin; i < end; ++i) {
                Graph g;
                const Var loss = sequence_loss(g, w, tracks[order[i]]);
                if (!std::isfinite(loss.scalar())) {
                    throw DivergedTraining("gap filler loss became non-finite at epoch " + std::to_string(epoch));
                }
                total += loss.scalar();
                g.backward(loss, grads);
            }
            grads.scale(1.0 / static_cast<double>(end - begin));
            nn::adam_step(adam, w.params, grads);
        }
        if (epoch_losses != nullptr) epoch_losses->push_back(total / static_cast<double>(tracks.size()));
    }
    return w;
}

double gap_filler_loss(const GapFillerWeights& w, const std::vector<Sequence>& sequences) {
    double total = 0.0;
    std::size_t count = 0;
    for (const Sequence& s : sequences) {
        if (s.size() < 3) continue;
        Graph g;
        total += sequence_loss(g, w, s.pixels()).scalar();
        ++count;
    }
    return count > 0 ? total / static_cast<double>(count) : 0.0;
}

std::vector<Eigen::Vector2d> predict_next_deltas(const GapFillerWeights& w, const std::vector<Pixel>& pixels) {
    if (pixels.size() < 2) throw SequenceTooShort("delta prediction needs two frames");
    const Matrix deltas = scaled_deltas(pixels, w.delta_scale, false);
    Matrix inputs = Matrix::Zero(2, deltas.cols());
    inputs.rightCols(deltas.cols() - 1) = deltas.leftCols(deltas.cols() - 1);
    Graph g;
    const Var pred = w.forward_head.run(g, w.params, w.forward_stack.run(g, w.params, g.constant(std::move(inputs))));
    std::vector<Eigen::Vector2d> out(static_cast<std::size_t>(pred.cols()));
    for (Index k = 0; k < pred.cols(); ++k) out[static_cast<std::size_t>(k)] = pred.value().col(k) / w.delta_scale;
    return out;
}

Sequence fill_missing(const Sequence& seq, const GapFillerWeights& w) {
    const std::size_t n = seq.size();
    if (n == 0) return seq;
    if (!seq.samples.front().pixel || !seq.samples.back().pixel) {
        throw UnboundedGap("the first and last pixels must be present to fill gaps");
    }
    if (seq.has_complete_pixels()) return seq;

    std::vector<std::optional<Pixel>> track(n);
    for (std::size_t t = 0; t < n; ++t) track[t] = seq.samples[t].pixel;
    std::vector<std::optional<Pixel>> reversed(track.rbegin(), track.rend());
    const auto fwd = roll_out(w, w.forward_stack, w.forward_head, track);
    auto bwd = roll_out(w, w.backward_stack, w.backward_head, reversed);
    std::reverse(bwd.begin(), bwd.end());

    Sequence out = seq;
    std::size_t t = 1;
    while (t < n) {
        if (track[t]) {
            ++t;
            continue;
        }
        const std::size_t before = t - 1;
        std::size_t after = t;
        while (!track[after]) ++after;
        for (std::size_t k = t; k < after; ++k) {
            const double ramp = static_cast<double>(k - before) / static_cast<double>(after - before);
            const Eigen::Vector2d p = (1.0 - ramp) * fwd[k] + ramp * bwd[k];
            out.samples[k].pixel = Pixel{p.x(), p.y()};
            out.samples[k].plane_points.reset();
        }
        t = after;
    }
    return out;
}

void save_gap_filler(const std::filesystem::path& path, const GapFillerWeights& w) {
    nn::save_checkpoint(path, w.params, {{"kind", "gap_filler"}, {"delta_scale", w.delta_scale}});
}

GapFillerWeights load_gap_filler(const std::filesystem::path& path) {
    const nlohmann::json header = nn::read_checkpoint_header(path);
    const auto& meta = header.at("metadata");
    if (meta.value("kind", std::string()) != "gap_filler") {
        throw CheckpointError(path.string() + " does not hold gap filler weights");
    }
    GapFillerWeights w = GapFillerWeights::create(64, meta.at("delta_scale").get<double>());
    nn::load_checkpoint(path, w.params);
    return w;
}

}  // namespace ball3d
