#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ball3d/geometry.hpp"
#include "ball3d/sequence.hpp"

namespace ball3d {

enum class SegmentMode { GroundTruthFlags, Heuristic };
enum class MotionKind { Projectile, Rolling };

/// Frames [first, last] (inclusive) explained by one motion model. Contact times, in seconds
/// since the first sample, mark instants where the ball touches the ground.
struct SegmentSpan {
    int first = 0;
    int last = 0;
    MotionKind kind = MotionKind::Projectile;
    std::optional<double> contact_start;
    std::optional<double> contact_end;
};

struct BaselineConfig {
    double gravity = 9.81;
    double contact_weight = 1e3;  ///< mu, px^2 per m^2 of endpoint height
    int max_iterations = 200;
    double step_tolerance = 1e-10;
    double initial_damping = 1e-3;
    double scene_height_guess = 1.0;  ///< initial height for segments that do not start on the ground
    int min_segment_frames = 3;
    double bounce_threshold = 0.5;  ///< heuristic: normalised second difference above this * g dt^2
    double flat_threshold = 0.25;   ///< heuristic: mean normalised curvature above -this * g dt^2 is rolling
};

/// Throws SequenceTooShort below four frames. Heuristic mode falls back to a single
/// segment when it detects nothing (NoSegments is reserved for empty tracks).
std::vector<SegmentSpan> segment_track(const Sequence& seq, const CameraModel& cam, SegmentMode mode,
                                       const BaselineConfig& config = {});

/// Ballistic arc x(t) = x0 + v0 (t - t0) - g/2 (t - t0)^2 e_y, or a ground-plane
/// constant-acceleration track (y = 0) for rolling segments.
struct ProjectileSegment {
    SegmentSpan span;
    double t0 = 0.0;
    Vec3 x0 = Vec3::Zero();
    Vec3 v0 = Vec3::Zero();
    Vec3 a0 = Vec3::Zero();  ///< rolling acceleration (x, 0, z); zero for projectiles
    double gravity = 9.81;
    double residual_rms_px = 0.0;
    int iterations = 0;
    bool converged = false;

    Vec3 position(double t) const;
};

/// Levenberg-Marquardt fit of one segment to `pixels` observed at `times` (seconds).
/// Throws SingularNormalEquations when the observations cannot determine the parameters.
ProjectileSegment fit_segment(std::span<const Pixel> pixels, std::span<const double> times, const CameraModel& cam,
                              const SegmentSpan& span, const BaselineConfig& config = {});

struct FitResult {
    std::vector<ProjectileSegment> segments;
    std::vector<Vec3> points;
    double reprojection_rmse_px = 0.0;
    int iterations = 0;
};

/// Segments the track, fits every segment and evaluates the models per frame; frames shared by
/// two segments take the mean of both models.
FitResult baseline_predict(const Sequence& seq, const CameraModel& cam, SegmentMode mode,
                           const BaselineConfig& config = {});

}  // namespace ball3d
