#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "ball3d/geometry.hpp"
#include "ball3d/nn/layers.hpp"
#include "ball3d/rng.hpp"
#include "ball3d/sequence.hpp"

namespace ball3d {

/// Sizes and input/output scalings of the five sub-networks.
///
/// The scalings only bring plane-point features and height steps to unit order; they are
/// fixed constants, not learned, and are stored with every checkpoint.
struct ArchitectureConfig {
    nn::Index hidden = 64;
    double delta_input_scale = 10.0;    ///< multiplies dP before the EoT and fwd/bwd networks
    double position_input_scale = 1.0;  ///< multiplies P and xyz before the height/refine networks
    double height_step_scale = 0.1;     ///< fwd/bwd head output (unitless) to metres per step
    double refine_output_scale = 0.1;   ///< refine head output to metres

    nlohmann::json to_json() const;
    static ArchitectureConfig from_json(const nlohmann::json& j);
};

/// Default feature scalings for a dataset family name ("single", "multi", "tennis").
ArchitectureConfig default_architecture(const std::string& family);

struct PipelineWeights {
    ArchitectureConfig arch;
    nn::ParameterSet params;
    nn::BiLstmStack eot_stack;
    nn::MlpHead eot_head;
    nn::UniLstmStack fwd_stack;
    nn::MlpHead fwd_head;
    nn::UniLstmStack bwd_stack;
    nn::MlpHead bwd_head;
    nn::BiLstmStack height_stack;
    nn::MlpHead height_head;
    nn::BiLstmStack refine_stack;
    nn::MlpHead refine_head;

    /// All-zero weights with the layer layout of `arch`.
    static PipelineWeights create(const ArchitectureConfig& arch = {});
    void initialize(Rng& rng) { nn::initialize_uniform(params, rng); }

    /// Sub-network ("eot", "fwd", "bwd", "height", "refine") owning parameter `id`.
    std::string subnetwork_of(int id) const;
};

inline constexpr const char* kSubnetworks[] = {"eot", "fwd", "bwd", "height", "refine"};

/// Per-frame network inputs derived from a pixel track.
struct PipelineInputs {
    std::vector<Ray> rays;
    std::vector<PlanePoints> plane_points;

    std::size_t size() const { return rays.size(); }
    static PipelineInputs from_pixels(std::span<const Pixel> pixels, const CameraModel& cam);
};

/// Graph nodes of one forward pass; every node has N columns.
struct PipelineNodes {
    nn::Var eot;        ///< 1 x N
    nn::Var h_forward;  ///< 1 x N
    nn::Var h_backward;
    nn::Var h;
    nn::Var h_refined;
    nn::Var lifted;  ///< 3 x N, projection-consistent points
    nn::Var final_points;  ///< 3 x N
};

struct ForwardOptions {
    /// When set, these flags replace the predicted EoT probabilities fed to the fwd/bwd networks.
    const std::vector<int>* teacher_eot = nullptr;
};

/// Records the whole estimator on `g`. Throws SequenceTooShort for N < 2.
PipelineNodes pipeline_forward(nn::Graph& g, const PipelineWeights& w, const PipelineInputs& in,
                               const ForwardOptions& options = {});

struct PredictedTrajectory {
    std::vector<double> eot;
    std::vector<double> h_forward;
    std::vector<double> h_backward;
    std::vector<double> h;
    std::vector<double> h_refined;
    std::vector<Vec3> lifted;
    std::vector<Vec3> final_points;

    std::size_t size() const { return eot.size(); }
};

PredictedTrajectory to_trajectory(const PipelineNodes& nodes);

/// Back-projection, plane points, EoT, heights, lifting and refinement for one track.
/// Requires complete pixels.
PredictedTrajectory predict(const PipelineWeights& w, const Sequence& seq, const CameraModel& cam);
PredictedTrajectory predict(const PipelineWeights& w, const PipelineInputs& in);

// ---- losses -------------------------------------------------------------------------

struct LossWeights {
    double eot = 10.0;
    double reconstruction = 1.0;
    double below_ground = 10.0;
};

struct LossNodes {
    nn::Var eot;
    nn::Var reconstruction;
    nn::Var below_ground;
    nn::Var total;
};

/// Weighted EoT cross-entropy, mean squared 3D error and below-ground penalty of one track.
LossNodes pipeline_losses(const PipelineNodes& nodes, const std::vector<int>& eot_gt,
                          const std::vector<Vec3>& gt, double gamma, const LossWeights& lambda);

/// Scalar reference versions of the three losses (used by tests and reports).
double loss_eot(std::span<const double> eot, std::span<const int> gt, double gamma, double clamp = 1e-7);
double loss_3d(std::span<const Vec3> pred, std::span<const Vec3> gt);
double loss_below_ground(std::span<const Vec3> pred);
double loss_total(double eot, double reconstruction, double below_ground, const LossWeights& lambda = {});

}  // namespace ball3d
