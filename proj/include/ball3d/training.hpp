#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ball3d/geometry.hpp"
#include "ball3d/nn/adam.hpp"
#include "ball3d/pipeline.hpp"
#include "ball3d/sequence.hpp"

namespace ball3d {

struct TrainConfig {
    LossWeights lambda;
    std::optional<double> gamma;  ///< nullopt resolves to 1 - positive EoT fraction of the train split
    double lr = 1e-3;
    int epochs = 200;
    int batch_size = 256;  ///< sequences whose gradients are averaged per optimizer step
    double noise_sigma = 2.0;  ///< Gaussian pixel augmentation, redrawn every epoch
    std::uint64_t seed = 0;
    int threads = 1;
    bool teacher_forced_eot = false;  ///< feed ground-truth EoT flags to the height accumulators

    /// Throws InvalidArgument for negative weights, epochs < 1, batch < 1 or gamma outside (0, 1).
    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochLog {
    int epoch = 0;
    double loss_eot = 0.0;
    double loss_3d = 0.0;
    double loss_below = 0.0;
    double total = 0.0;
    double val_loss_3d = 0.0;
};

/// Optional file outputs and resume source of a training run.
struct TrainIo {
    std::filesystem::path best_checkpoint;  ///< written whenever validation L_3D improves
    std::filesystem::path last_checkpoint;  ///< written after every epoch with optimizer state
    std::filesystem::path log_csv;          ///< epoch,loss_eot,loss_3d,loss_below,total,val_loss_3d
    std::filesystem::path resume_from;      ///< a last_checkpoint of an earlier run
    std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
    PipelineWeights best;
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double gamma = 0.5;
};

/// 1 - (positive EoT steps / all steps) over `sequences`.
double auto_gamma(const std::vector<Sequence>& sequences);

/// Joint training of all five sub-networks. Sequences need pixels, ground truth and EoT flags.
/// The best-validation weights are returned (train loss L_3D stands in when `val` is empty).
/// Throws DivergedTraining when any loss or gradient becomes non-finite.
TrainResult train(const std::vector<Sequence>& train_set, const std::vector<Sequence>& val_set,
                  const CameraModel& cam, const TrainConfig& config, const ArchitectureConfig& arch,
                  const TrainIo& io = {});

/// Mean L_3D of the predictions over `sequences` (clean pixels).
double mean_reconstruction_loss(const PipelineWeights& w, const std::vector<Sequence>& sequences,
                                const CameraModel& cam, int threads = 1);

/// Checkpoint helpers: architecture and caller metadata travel in the header.
void save_pipeline(const std::filesystem::path& path, const PipelineWeights& w,
                   const nlohmann::json& metadata = nlohmann::json::object(),
                   const nn::AdamState* adam = nullptr);
PipelineWeights load_pipeline(const std::filesystem::path& path, nlohmann::json* metadata = nullptr,
                              nn::AdamState* adam = nullptr);

/// Number of worker threads: `requested` when positive, else BALL3D_THREADS, else 1.
int resolve_threads(int requested);

/// Runs body(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace ball3d

namespace ball3d {

struct GradCheckEntry {
    std::string parameter;
    std::string subnetwork;
    nn::Index index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double relative_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_relative_error = 0.0;
};

/// Compares reverse-mode gradients of the total loss on one track with central differences
/// for `samples` scalars drawn round-robin from the five sub-networks. The relative error is
/// |a - n| / max(|a|, |n|, 1e-6). Weights are restored afterwards.
GradCheckReport gradient_check(PipelineWeights& w, const Sequence& seq, const CameraModel& cam, double gamma,
                               const LossWeights& lambda, int samples, Rng& rng, double step = 1e-5);

}  // namespace ball3d
