#pragma once

#include <cstdint>
#include <string>

#include "ball3d/geometry.hpp"
#include "ball3d/rng.hpp"
#include "ball3d/sequence.hpp"

namespace ball3d {

enum class Family { SingleLaunch, MultiLaunch, TennisRally };

const char* to_string(Family family);
Family family_from_string(const std::string& name);

/// Constants of the bouncing-ball model. Gravity acts along -y.
struct PhysicsParams {
    double gravity = 9.81;
    double restitution = 0.7;
    double bounce_tangential_retain = 0.8;  ///< fraction of horizontal speed kept at a bounce
    double rolling_decel = 1.5;             ///< m/s^2 while rolling on the ground
    double stop_speed = 0.1;                ///< below this the ball settles / stops
    double dt = 1.0 / 50.0;
    int max_steps = 20000;                  ///< per launch; exceeding it raises NonTerminating

    void validate() const;
};

struct LaunchSpec {
    double speed = 1.0;
    double elevation = 0.0;  ///< radians above the ground plane
    double azimuth = 0.0;    ///< radians from +x towards +z
    Vec3 origin = Vec3::Zero();

    Vec3 velocity() const;
    void validate() const;
};

/// Per-family generation parameters.
struct SimConfig {
    Family family = Family::SingleLaunch;
    double fps = 50.0;
    int num_launches = 1;  ///< launches (multi) or strokes (tennis)
    int max_launches = 0;  ///< when > num_launches the count is drawn uniformly in [num, max]
    double x_extent = 4.5;
    double z_extent = 4.5;
    double min_speed = 1.0;  ///< launch speed range, m/s (impulse / mass)
    double max_speed = 4.0;
    double min_elevation = 0.0;  ///< radians
    double max_elevation = 1.5707963267948966;
    double restitution_min = 0.6;
    double restitution_max = 0.85;
    double max_apex = 0.0;  ///< when > 0, launches whose apex exceeds it are resampled
    std::uint64_t seed = 0;

    void validate() const;
};

SimConfig default_sim_config(Family family);
PhysicsParams default_physics(double fps);

/// Ground contacts found while integrating, exposed for oracle tests.
struct BounceRecord {
    double time = 0.0;
    double vy_before = 0.0;  ///< signed vertical velocity at impact (<= 0)
    double vy_after = 0.0;   ///< vertical velocity leaving the ground (0 when the ball settles)
    Vec3 position = Vec3::Zero();
    bool settled = false;
};

struct SimTrace {
    Sequence sequence;
    std::vector<BounceRecord> bounces;
    std::vector<Vec3> velocities;  ///< velocity at each sample
    PhysicsParams physics;
};

SimTrace simulate_single_launch_trace(const LaunchSpec& spec, const PhysicsParams& phys);
Sequence simulate_single_launch(const LaunchSpec& spec, const PhysicsParams& phys);

/// Random single launch from the origin into the first quadrant.
SimTrace simulate_random_single_launch(const SimConfig& config, Rng& rng);

SimTrace simulate_multi_launch_trace(const SimConfig& config, const PhysicsParams& phys);
Sequence simulate_multi_launch(const SimConfig& config, const PhysicsParams& phys);

/// Court geometry used by the rally generator (metres).
struct Court {
    static constexpr double kLength = 23.77;
    static constexpr double kWidth = 10.97;
    static constexpr double kNetHeight = 0.914;
};

/// Launch speed that carries a ball from height `launch_height` to the ground at horizontal
/// range `range` with elevation `elevation`; throws TargetUnreachable when none exists.
double ballistic_speed_for_range(double range, double elevation, double launch_height,
                                 double gravity);

SimTrace simulate_tennis_rally_trace(const SimConfig& config, const PhysicsParams& phys);
Sequence simulate_tennis_rally(const SimConfig& config, const PhysicsParams& phys);

/// Draws the per-sequence physics (restitution) and dispatches on the family.
SimTrace simulate_family(const SimConfig& config);

/// Fills pixels and plane points by projecting ground truth through `cam`.
Sequence render_track(const Sequence& seq, const CameraModel& cam);

/// Reference camera used for each synthetic family.
CameraModel default_camera(Family family);

}  // namespace ball3d
