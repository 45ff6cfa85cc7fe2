#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ball3d/nn/layers.hpp"
#include "ball3d/sequence.hpp"

namespace ball3d {

/// Forward and backward autoregressive pixel-delta models: four unidirectional LSTM layers
/// (hidden 64, dense shortcuts) and a 64-64-32-16-8-4-2 head each.
struct GapFillerWeights {
    nn::ParameterSet params;
    nn::UniLstmStack forward_stack;
    nn::MlpHead forward_head;
    nn::UniLstmStack backward_stack;
    nn::MlpHead backward_head;
    double delta_scale = 0.1;  ///< pixel deltas are multiplied by this before entering the model

    static GapFillerWeights create(nn::Index hidden = 64, double delta_scale = 0.1);
};

struct GapFillerConfig {
    int epochs = 50;
    int batch_size = 16;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    double delta_scale = 0.1;
};

/// Teacher-forced next-delta training of both directions on complete pixel tracks.
/// Throws DivergedTraining on a non-finite loss.
GapFillerWeights train_gap_filler(const std::vector<Sequence>& sequences, const GapFillerConfig& config,
                                  std::vector<double>* epoch_losses = nullptr);

/// Mean teacher-forced squared error (scaled units) of both directions over `sequences`.
double gap_filler_loss(const GapFillerWeights& w, const std::vector<Sequence>& sequences);

/// One-step predictions of the forward model: element k is the predicted delta from frame k
/// to k+1 given the true deltas before it (element 0 sees a zero history).
std::vector<Eigen::Vector2d> predict_next_deltas(const GapFillerWeights& w, const std::vector<Pixel>& pixels);

/// Fills interior missing pixels. Known pixels are kept; inside each gap the forward and
/// backward roll-outs are blended with a ramp running from the last known frame before the gap
/// (forward only) to the first known frame after it (backward only). Plane points of filled
/// frames are cleared and must be recomputed by the caller. Throws UnboundedGap when the first
/// or last pixel is missing.
Sequence fill_missing(const Sequence& seq, const GapFillerWeights& w);

void save_gap_filler(const std::filesystem::path& path, const GapFillerWeights& w);
GapFillerWeights load_gap_filler(const std::filesystem::path& path);

}  // namespace ball3d
