#include "ball3d/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "ball3d/errors.hpp"

namespace ball3d {

using nn::Graph;
using nn::Index;
using nn::Matrix;
using nn::Var;

nlohmann::json ArchitectureConfig::to_json() const {
    return {{"hidden", hidden},
            {"delta_input_scale", delta_input_scale},
            {"position_input_scale", position_input_scale},
            {"height_step_scale", height_step_scale},
            {"refine_output_scale", refine_output_scale}};
}

ArchitectureConfig ArchitectureConfig::from_json(const nlohmann::json& j) {
    ArchitectureConfig a;
    a.hidden = j.at("hidden").get<Index>();
    a.delta_input_scale = j.at("delta_input_scale").get<double>();
    a.position_input_scale = j.at("position_input_scale").get<double>();
    a.height_step_scale = j.at("height_step_scale").get<double>();
    a.refine_output_scale = j.at("refine_output_scale").get<double>();
    return a;
}

ArchitectureConfig default_architecture(const std::string& family) {
    ArchitectureConfig a;
    if (family == "tennis") {
        // Court-scale plane points move metres per frame and span tens of metres.
        a.delta_input_scale = 1.0;
        a.position_input_scale = 0.1;
    } else if (family == "multi") {
        a.delta_input_scale = 5.0;
        a.position_input_scale = 0.2;
    }
    return a;
}

PipelineWeights PipelineWeights::create(const ArchitectureConfig& arch) {
    using nn::MlpHead;
    using nn::OutputActivation;
    PipelineWeights w;
    w.arch = arch;
    const Index h = arch.hidden;
    auto& p = w.params;
    w.eot_stack = nn::BiLstmStack::create(p, "eot", 4, h);
    w.eot_head = MlpHead::create(p, "eot.head", {2 * h, 32, 32, 32, 1}, OutputActivation::Sigmoid);
    w.fwd_stack = nn::UniLstmStack::create(p, "fwd", 6, 3, h, nn::Residual::None);
    w.fwd_head = MlpHead::create(p, "fwd.head", {h, 32, 32, 32, 1}, OutputActivation::Linear);
    w.bwd_stack = nn::UniLstmStack::create(p, "bwd", 6, 3, h, nn::Residual::None);
    w.bwd_head = MlpHead::create(p, "bwd.head", {h, 32, 32, 32, 1}, OutputActivation::Linear);
    w.height_stack = nn::BiLstmStack::create(p, "height", 5, h);
    w.height_head = MlpHead::create(p, "height.head", {2 * h, 32, 32, 32, 1}, OutputActivation::Linear);
    w.refine_stack = nn::BiLstmStack::create(p, "refine", 7, h);
    w.refine_head = MlpHead::create(p, "refine.head", {2 * h, 32, 32, 32, 3}, OutputActivation::Linear);
    return w;
}

std::string PipelineWeights::subnetwork_of(int id) const {
    const std::string& name = params[id].name;
    return name.substr(0, name.find('.'));
}

PipelineInputs PipelineInputs::from_pixels(std::span<const Pixel> pixels, const CameraModel& cam) {
    PipelineInputs in;
    in.rays.reserve(pixels.size());
    in.plane_points.reserve(pixels.size());
    for (const Pixel& px : pixels) {
        in.rays.push_back(back_project(px, cam));
        in.plane_points.push_back(ray_to_plane_points(in.rays.back()));
    }
    return in;
}

namespace {

Matrix plane_point_matrix(const std::vector<PlanePoints>& pts) {
    Matrix m(4, static_cast<Index>(pts.size()));
    for (std::size_t t = 0; t < pts.size(); ++t) m.col(static_cast<Index>(t)) = pts[t].as_vector();
    return m;
}

/// Autoregressive height accumulator. Interval k lies between frames k and k+1 and carries
/// dP_k and eot_k. The forward pass walks k = 0..N-2 starting from h_0 = 0; the backward pass
/// walks k = N-2..0 starting from h_{N-1} = 0 and sees the reversed-time difference -dP_k.
std::vector<Var> accumulate_heights(Graph& g, const PipelineWeights& w, const nn::UniLstmStack& stack,
                                    const nn::MlpHead& head, const Matrix& scaled_deltas, Var eot,
                                    bool backward) {
    const Index intervals = scaled_deltas.cols();
    const Index n = intervals + 1;
    std::vector<Var> heights(static_cast<std::size_t>(n));
    Var h = g.constant(Matrix::Zero(1, 1));
    heights[static_cast<std::size_t>(backward ? n - 1 : 0)] = h;
    nn::StackState state = stack.initial_state(g);
    for (Index step = 0; step < intervals; ++step) {
        const Index k = backward ? intervals - 1 - step : step;
        const Matrix dp = backward ? Matrix(-scaled_deltas.col(k)) : Matrix(scaled_deltas.col(k));
        const Var parts[] = {g.constant(dp), nn::slice_cols(eot, k, 1), h};
        const Var out = head.run(g, w.params, stack.step(g, w.params, nn::concat_rows(parts), state));
        h = nn::add(h, nn::scale(out, w.arch.height_step_scale));
        heights[static_cast<std::size_t>(backward ? k : k + 1)] = h;
    }
    return heights;
}

}  // namespace

PipelineNodes pipeline_forward(Graph& g, const PipelineWeights& w, const PipelineInputs& in,
                               const ForwardOptions& options) {
    const Index n = static_cast<Index>(in.size());
    if (n < 2) throw SequenceTooShort("the estimator needs at least two frames");
    if (in.plane_points.size() != in.rays.size()) throw LengthMismatch("rays and plane points differ in length");
    const ArchitectureConfig& arch = w.arch;

    const Matrix P = plane_point_matrix(in.plane_points);
    const Matrix deltas = (P.rightCols(n - 1) - P.leftCols(n - 1)) * arch.delta_input_scale;

    PipelineNodes out;
    // EoT: one probability per interval, the last one replicated onto the final frame.
    const Var eot_steps = w.eot_head.run(g, w.params, w.eot_stack.run(g, w.params, g.constant(deltas)));
    const Var eot_parts[] = {eot_steps, nn::slice_cols(eot_steps, n - 2, 1)};
    out.eot = nn::concat_cols(eot_parts);

    Var eot_fed = out.eot;
    if (options.teacher_eot != nullptr) {
        if (static_cast<Index>(options.teacher_eot->size()) != n) throw LengthMismatch("teacher EoT length differs");
        Matrix flags(1, n);
        for (Index t = 0; t < n; ++t) flags(0, t) = (*options.teacher_eot)[static_cast<std::size_t>(t)];
        eot_fed = g.constant(flags);
    }

    const auto hf = accumulate_heights(g, w, w.fwd_stack, w.fwd_head, deltas, eot_fed, false);
    const auto hb = accumulate_heights(g, w, w.bwd_stack, w.bwd_head, deltas, eot_fed, true);
    out.h_forward = nn::concat_cols(hf);
    out.h_backward = nn::concat_cols(hb);

    // Ramp fusion with w_t = t / (N - 1) for zero-based t.
    Matrix ramp(1, n);
    for (Index t = 0; t < n; ++t) ramp(0, t) = static_cast<double>(t) / static_cast<double>(n - 1);
    const Matrix zero = Matrix::Zero(1, n);
    out.h = nn::add(nn::affine(out.h_forward, Matrix::Ones(1, n) - ramp, zero),
                    nn::affine(out.h_backward, ramp, zero));

    const Var scaled_P = g.constant(P * arch.position_input_scale);
    const Var height_in[] = {out.h, scaled_P};
    out.h_refined = w.height_head.run(g, w.params, w.height_stack.run(g, w.params, nn::concat_rows(height_in)));

    // Lifting is affine in the height: point = (c - d c_y / d_y) + (d / d_y) h, with y = h exactly.
    Matrix slope(3, n);
    Matrix base(3, n);
    for (Index t = 0; t < n; ++t) {
        const Ray& r = in.rays[static_cast<std::size_t>(t)];
        if (std::abs(r.direction.y()) <= kParallelEpsilon) {
            throw RayParallelToPlane("ray of frame " + std::to_string(t) + " is parallel to the ground");
        }
        const Vec3 sl = r.direction / r.direction.y();
        const Vec3 b = r.origin - sl * r.origin.y();
        slope.col(t) << sl.x(), 1.0, sl.z();
        base.col(t) << b.x(), 0.0, b.z();
    }
    const Var h3 = nn::matmul(g.constant(Matrix::Ones(3, 1)), out.h_refined);
    out.lifted = nn::affine(h3, slope, base);

    const Var refine_in[] = {nn::scale(out.lifted, arch.position_input_scale), scaled_P};
    const Var delta = w.refine_head.run(g, w.params, w.refine_stack.run(g, w.params, nn::concat_rows(refine_in)));
    out.final_points = nn::add(out.lifted, nn::scale(delta, arch.refine_output_scale));
    return out;
}

PredictedTrajectory to_trajectory(const PipelineNodes& nodes) {
    auto row = [](const Var& v) {
        const Matrix& m = v.value();
        return std::vector<double>(m.data(), m.data() + m.size());
    };
    auto points = [](const Var& v) {
        const Matrix& m = v.value();
        std::vector<Vec3> out(static_cast<std::size_t>(m.cols()));
        for (Index t = 0; t < m.cols(); ++t) out[static_cast<std::size_t>(t)] = m.col(t);
        return out;
    };
    PredictedTrajectory p;
    p.eot = row(nodes.eot);
    p.h_forward = row(nodes.h_forward);
    p.h_backward = row(nodes.h_backward);
    p.h = row(nodes.h);
    p.h_refined = row(nodes.h_refined);
    p.lifted = points(nodes.lifted);
    p.final_points = points(nodes.final_points);
    return p;
}

PredictedTrajectory predict(const PipelineWeights& w, const PipelineInputs& in) {
    Graph g;
    return to_trajectory(pipeline_forward(g, w, in));
}

PredictedTrajectory predict(const PipelineWeights& w, const Sequence& seq, const CameraModel& cam) {
    if (!seq.has_complete_pixels()) throw InvalidArgument("predict needs a complete pixel track; fill gaps first");
    const auto pixels = seq.pixels();
    return predict(w, PipelineInputs::from_pixels(pixels, cam));
}

// ---- losses -------------------------------------------------------------------------

LossNodes pipeline_losses(const PipelineNodes& nodes, const std::vector<int>& eot_gt,
                          const std::vector<Vec3>& gt, double gamma, const LossWeights& lambda) {
    const Index n = nodes.eot.cols();
    if (static_cast<Index>(eot_gt.size()) != n || static_cast<Index>(gt.size()) != n) {
        throw LengthMismatch("targets and predictions differ in length");
    }
    Matrix flags(1, n);
    Matrix target(3, n);
    for (Index t = 0; t < n; ++t) {
        flags(0, t) = eot_gt[static_cast<std::size_t>(t)];
        target.col(t) = gt[static_cast<std::size_t>(t)];
    }
    LossNodes l;
    l.eot = nn::weighted_bce(nodes.eot, flags, gamma);
    l.reconstruction = nn::mean_squared_distance(nodes.final_points, target);
    l.below_ground = nn::below_ground(nn::slice_rows(nodes.final_points, 1, 1));
    l.total = nn::add(nn::add(nn::scale(l.eot, lambda.eot), nn::scale(l.reconstruction, lambda.reconstruction)),
                      nn::scale(l.below_ground, lambda.below_ground));
    return l;
}

double loss_eot(std::span<const double> eot, std::span<const int> gt, double gamma, double clamp) {
    if (eot.size() != gt.size()) throw LengthMismatch("loss_eot: lengths differ");
    if (eot.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t t = 0; t < eot.size(); ++t) {
        const double p = std::clamp(eot[t], clamp, 1.0 - clamp);
        total += gamma * gt[t] * std::log(p) + (1.0 - gamma) * (1 - gt[t]) * std::log(1.0 - p);
    }
    return -total / static_cast<double>(eot.size());
}

double loss_3d(std::span<const Vec3> pred, std::span<const Vec3> gt) {
    if (pred.size() != gt.size()) throw LengthMismatch("loss_3d: lengths differ");
    if (pred.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t t = 0; t < pred.size(); ++t) total += (gt[t] - pred[t]).squaredNorm();
    return total / static_cast<double>(pred.size());
}

double loss_below_ground(std::span<const Vec3> pred) {
    double total = 0.0;
    int count = 0;
    for (const Vec3& p : pred) {
        if (p.y() < 0.0) {
            total += p.y() * p.y();
            ++count;
        }
    }
    return count > 0 ? total / count : 0.0;
}

double loss_total(double eot, double reconstruction, double below_ground, const LossWeights& lambda) {
    return lambda.eot * eot + lambda.reconstruction * reconstruction + lambda.below_ground * below_ground;
}

}  // namespace ball3d
