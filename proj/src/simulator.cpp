#include "ball3d/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ball3d/errors.hpp"

namespace ball3d {
namespace {

enum class Phase { Flight, Rolling, Rest };

struct BallState {
    Vec3 pos = Vec3::Zero();
    Vec3 vel = Vec3::Zero();
    Phase phase = Phase::Flight;
};

double horizontal_speed(const Vec3& v) { return std::hypot(v.x(), v.z()); }

int frame_of(double time, double dt) { return static_cast<int>(std::lround(time / dt)); }

/// Closed-form constant-acceleration motion with exact ground-contact subdivision.
class Integrator {
public:
    Integrator(const PhysicsParams& phys, std::vector<BounceRecord>& bounces,
               std::vector<TrackEvent>& events)
        : phys_(phys), bounces_(bounces), events_(events) {}

    /// Advances `s` by `tau` seconds; `t0` is the absolute time at entry.
    void advance(BallState& s, double tau, double t0) const {
        double elapsed = 0.0;
        for (int guard = 0; tau - elapsed > 0.0 && guard < 10000; ++guard) {
            const double remaining = tau - elapsed;
            if (s.phase == Phase::Rest) {
                return;
            }
            if (s.phase == Phase::Rolling) {
                roll(s, remaining);
                return;
            }
            const double g = phys_.gravity;
            const double y = std::max(s.pos.y(), 0.0);
            const double vy = s.vel.y();
            const double contact = (vy + std::sqrt(vy * vy + 2.0 * g * y)) / g;
            if (contact > remaining) {
                fly(s, remaining);
                return;
            }
            fly(s, contact);
            s.pos.y() = 0.0;
            elapsed += contact;
            bounce(s, t0 + elapsed);
        }
    }

private:
    void fly(BallState& s, double t) const {
        const double g = phys_.gravity;
        s.pos.x() += s.vel.x() * t;
        s.pos.z() += s.vel.z() * t;
        s.pos.y() += s.vel.y() * t - 0.5 * g * t * t;
        s.vel.y() -= g * t;
    }

    void roll(BallState& s, double t) const {
        const double speed = horizontal_speed(s.vel);
        if (speed <= 0.0) {
            s.vel.setZero();
            s.phase = Phase::Rest;
            return;
        }
        const double ux = s.vel.x() / speed;
        const double uz = s.vel.z() / speed;
        const double a = phys_.rolling_decel;
        const double t_stop = speed / a;
        const double run = std::min(t, t_stop);
        const double dist = speed * run - 0.5 * a * run * run;
        s.pos.x() += ux * dist;
        s.pos.z() += uz * dist;
        s.pos.y() = 0.0;
        if (t >= t_stop) {
            s.vel.setZero();
            s.phase = Phase::Rest;
        } else {
            const double v = speed - a * t;
            s.vel = Vec3(ux * v, 0.0, uz * v);
        }
    }

    void bounce(BallState& s, double time) const {
        BounceRecord rec;
        rec.time = time;
        rec.vy_before = s.vel.y();
        rec.position = s.pos;
        const double up = phys_.restitution * -s.vel.y();
        s.vel.x() *= phys_.bounce_tangential_retain;
        s.vel.z() *= phys_.bounce_tangential_retain;
        if (up < phys_.stop_speed) {
            s.vel.y() = 0.0;
            s.phase = Phase::Rolling;
            rec.vy_after = 0.0;
            rec.settled = true;
        } else {
            s.vel.y() = up;
            rec.vy_after = up;
        }
        bounces_.push_back(rec);
        events_.push_back({rec.settled ? EventKind::Settle : EventKind::Bounce, time,
                           frame_of(time, phys_.dt), rec.position});
    }

    const PhysicsParams& phys_;
    std::vector<BounceRecord>& bounces_;
    std::vector<TrackEvent>& events_;
};

/// Collects samples every dt while the integrator advances the state.
class Recorder {
public:
    explicit Recorder(const PhysicsParams& phys) : phys_(phys) {
        trace_.physics = phys;
        trace_.sequence.fps = 1.0 / phys.dt;
    }

    double now() const { return phys_.dt * static_cast<double>(samples() - 1); }
    std::size_t samples() const { return trace_.sequence.samples.size(); }

    void record(const BallState& s) {
        TrackSample sample;
        sample.frame_index = static_cast<int>(samples());
        sample.gt_point = s.pos;
        trace_.sequence.samples.push_back(sample);
        trace_.velocities.push_back(s.vel);
    }

    void mark_eot() { trace_.sequence.samples.back().eot = 1; }

    void event(EventKind kind, const Vec3& pos) {
        trace_.sequence.events.push_back({kind, now(), static_cast<int>(samples() - 1), pos});
    }

    /// Steps until the ball rests; the final sample is at rest on the ground.
    void run_until_rest(BallState& s) {
        const Integrator integrator(phys_, trace_.bounces, trace_.sequence.events);
        for (int step = 0;; ++step) {
            if (step >= phys_.max_steps) {
                throw NonTerminating("ball did not stop within " +
                                     std::to_string(phys_.max_steps) + " steps");
            }
            integrator.advance(s, phys_.dt, now());
            if (s.phase == Phase::Rolling && horizontal_speed(s.vel) < phys_.stop_speed) {
                s.vel.setZero();
                s.phase = Phase::Rest;
            }
            record(s);
            if (s.phase == Phase::Rest) {
                return;
            }
        }
    }

    SimTrace& trace() { return trace_; }
    const PhysicsParams& physics() const { return phys_; }

private:
    const PhysicsParams& phys_;
    SimTrace trace_;
};

BallState launch_state(const Vec3& origin, const Vec3& velocity) {
    BallState s;
    s.pos = origin;
    s.vel = velocity;
    s.phase = velocity.y() > 0.0 || origin.y() > 0.0 ? Phase::Flight : Phase::Rolling;
    if (s.phase == Phase::Rolling) {
        s.vel.y() = 0.0;
    }
    return s;
}

double apex_height(const Vec3& velocity, double gravity) {
    const double vy = std::max(velocity.y(), 0.0);
    return vy * vy / (2.0 * gravity);
}

}  // namespace

const char* to_string(Family family) {
    switch (family) {
        case Family::SingleLaunch: return "single";
        case Family::MultiLaunch: return "multi";
        case Family::TennisRally: return "tennis";
    }
    return "?";
}

Family family_from_string(const std::string& name) {
    if (name == "single") return Family::SingleLaunch;
    if (name == "multi") return Family::MultiLaunch;
    if (name == "tennis") return Family::TennisRally;
    throw InvalidArgument("unknown family '" + name + "' (expected single|multi|tennis)");
}

void PhysicsParams::validate() const {
    if (!(gravity > 0.0)) throw InvalidArgument("gravity must be positive");
    if (!(restitution > 0.0 && restitution <= 1.0)) throw InvalidArgument("restitution must be in (0,1]");
    if (!(bounce_tangential_retain > 0.0 && bounce_tangential_retain <= 1.0)) {
        throw InvalidArgument("bounce_tangential_retain must be in (0,1]");
    }
    if (!(rolling_decel > 0.0)) throw InvalidArgument("rolling_decel must be positive");
    if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
    if (!(stop_speed > 0.0)) throw InvalidArgument("stop_speed must be positive");
    if (max_steps < 1) throw InvalidArgument("max_steps must be positive");
}

Vec3 LaunchSpec::velocity() const {
    const double horizontal = speed * std::cos(elevation);
    return {horizontal * std::cos(azimuth), speed * std::sin(elevation),
            horizontal * std::sin(azimuth)};
}

void LaunchSpec::validate() const {
    if (!(speed > 0.0)) throw InvalidArgument("launch speed must be positive");
    if (elevation < 0.0 || elevation > std::numbers::pi / 2 + 1e-12) {
        throw InvalidArgument("launch elevation must be in [0, pi/2]");
    }
    if (origin.y() != 0.0) throw InvalidArgument("launch origin must lie on the ground");
}

void SimConfig::validate() const {
    if (!(fps > 0.0)) throw InvalidArgument("fps must be positive");
    if (num_launches < 1) throw InvalidArgument("num_launches must be >= 1");
    if (!(x_extent > 0.0 && z_extent > 0.0)) throw InvalidArgument("world extents must be positive");
    if (!(min_speed > 0.0 && max_speed >= min_speed)) throw InvalidArgument("bad speed range");
    if (min_elevation > max_elevation) throw InvalidArgument("bad elevation range");
    if (!(restitution_min > 0.0 && restitution_max <= 1.0 && restitution_min <= restitution_max)) {
        throw InvalidArgument("bad restitution range");
    }
}

PhysicsParams default_physics(double fps) {
    PhysicsParams p;
    p.dt = 1.0 / fps;
    return p;
}

SimConfig default_sim_config(Family family) {
    constexpr double deg = std::numbers::pi / 180.0;
    SimConfig c;
    c.family = family;
    switch (family) {
        case Family::SingleLaunch:
            c.fps = 50.0;
            c.x_extent = 4.5;
            c.z_extent = 4.5;
            c.min_speed = 2.5;
            c.max_speed = 4.5;
            c.min_elevation = 15.0 * deg;
            c.max_elevation = 40.0 * deg;
            c.max_apex = 0.77;
            break;
        case Family::MultiLaunch:
            c.fps = 50.0;
            c.num_launches = 2;
            c.x_extent = 11.0;
            c.z_extent = 11.0;
            c.min_speed = 1.5;
            c.max_speed = 5.0;
            c.min_elevation = 30.0 * deg;
            c.max_elevation = 75.0 * deg;
            c.max_apex = 1.58;
            break;
        case Family::TennisRally:
            c.fps = 30.0;
            c.num_launches = 3;
            c.x_extent = Court::kWidth;
            c.z_extent = Court::kLength;
            c.min_speed = 5.0;
            c.max_speed = 40.0;
            c.min_elevation = 10.0 * deg;
            c.max_elevation = 20.0 * deg;
            break;
    }
    return c;
}

SimTrace simulate_single_launch_trace(const LaunchSpec& spec, const PhysicsParams& phys) {
    spec.validate();
    phys.validate();
    Recorder rec(phys);
    BallState s = launch_state(spec.origin, spec.velocity());
    rec.record(s);
    rec.event(s.phase == Phase::Flight ? EventKind::Launch : EventKind::RollLaunch, s.pos);
    rec.run_until_rest(s);
    rec.mark_eot();
    rec.event(EventKind::Stop, s.pos);
    return std::move(rec.trace());
}

Sequence simulate_single_launch(const LaunchSpec& spec, const PhysicsParams& phys) {
    return simulate_single_launch_trace(spec, phys).sequence;
}

SimTrace simulate_random_single_launch(const SimConfig& config, Rng& rng) {
    PhysicsParams phys = default_physics(config.fps);
    phys.restitution = uniform(rng, config.restitution_min, config.restitution_max);
    LaunchSpec spec;
    for (int attempt = 0;; ++attempt) {
        spec.speed = uniform(rng, config.min_speed, config.max_speed);
        spec.elevation = uniform(rng, config.min_elevation, config.max_elevation);
        spec.azimuth = uniform(rng, 0.0, std::numbers::pi / 2);
        if (config.max_apex <= 0.0 || apex_height(spec.velocity(), phys.gravity) <= config.max_apex) {
            break;
        }
        if (attempt > 10000) throw InvalidArgument("launch ranges never satisfy max_apex");
    }
    return simulate_single_launch_trace(spec, phys);
}

SimTrace simulate_multi_launch_trace(const SimConfig& config, const PhysicsParams& phys) {
    config.validate();
    phys.validate();
    Rng rng = make_stream(config.seed, "multi-launch");
    int launches = config.num_launches;
    if (config.max_launches > config.num_launches) {
        launches = std::uniform_int_distribution<int>(config.num_launches, config.max_launches)(rng);
    }

    const double half_x = config.x_extent / 2.0;
    auto random_point = [&] {
        return Vec3(uniform(rng, -half_x, half_x), 0.0, uniform(rng, 0.0, config.z_extent));
    };

    Recorder rec(phys);
    BallState s;
    s.pos = random_point();
    s.phase = Phase::Rest;
    rec.record(s);
    for (int k = 0; k < launches; ++k) {
        if (k > 0) {
            rec.mark_eot();  // the step right before the next force
        }
        const Vec3 target = random_point();
        const double azimuth = std::atan2(target.z() - s.pos.z(), target.x() - s.pos.x());
        const bool projectile = std::bernoulli_distribution(0.5)(rng);
        LaunchSpec spec;
        spec.azimuth = azimuth;
        spec.origin = s.pos;
        for (int attempt = 0;; ++attempt) {
            spec.speed = uniform(rng, config.min_speed, config.max_speed);
            spec.elevation = projectile ? uniform(rng, config.min_elevation, config.max_elevation) : 0.0;
            if (config.max_apex <= 0.0 || apex_height(spec.velocity(), phys.gravity) <= config.max_apex) {
                break;
            }
            if (attempt > 10000) throw InvalidArgument("launch ranges never satisfy max_apex");
        }
        s = launch_state(s.pos, spec.velocity());
        rec.event(projectile ? EventKind::Launch : EventKind::RollLaunch, s.pos);
        rec.run_until_rest(s);
    }
    rec.mark_eot();
    rec.event(EventKind::Stop, s.pos);
    return std::move(rec.trace());
}

Sequence simulate_multi_launch(const SimConfig& config, const PhysicsParams& phys) {
    return simulate_multi_launch_trace(config, phys).sequence;
}

double ballistic_speed_for_range(double range, double elevation, double launch_height,
                                 double gravity) {
    const double c = std::cos(elevation);
    const double denom = 2.0 * c * c * (launch_height + range * std::tan(elevation));
    if (!(range > 0.0) || !(denom > 0.0) || !(c > 0.0)) {
        throw TargetUnreachable("no ballistic solution for the requested range");
    }
    return std::sqrt(gravity * range * range / denom);
}

namespace {

struct Stroke {
    Vec3 velocity;
    Vec3 target;
    double flight_time = 0.0;
};

/// Samples a stroke from `from` that lands in the half opposite to `from` and clears the net.
Stroke sample_stroke(const Vec3& from, const SimConfig& config, const PhysicsParams& phys,
                     Rng& rng) {
    const double side = from.z() < 0.0 ? 1.0 : -1.0;  // landing half
    const double half_len = Court::kLength / 2.0;
    const double half_width = Court::kWidth / 2.0;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const Vec3 target(uniform(rng, -half_width + 0.3, half_width - 0.3), 0.0,
                          side * uniform(rng, 2.0, half_len - 0.3));
        const double elevation = uniform(rng, config.min_elevation, config.max_elevation);
        const Eigen::Vector2d flat(target.x() - from.x(), target.z() - from.z());
        const double range = flat.norm();
        double speed = 0.0;
        try {
            speed = ballistic_speed_for_range(range, elevation, from.y(), phys.gravity);
        } catch (const TargetUnreachable&) {
            continue;
        }
        const Eigen::Vector2d dir = flat / range;
        const double vh = speed * std::cos(elevation);
        const double vy = speed * std::sin(elevation);
        // Height where the path crosses the net plane z = 0.
        const double t_net = -from.z() / (vh * dir.y());
        if (!(t_net > 0.0)) continue;
        const double y_net = from.y() + vy * t_net - 0.5 * phys.gravity * t_net * t_net;
        if (y_net <= Court::kNetHeight) continue;
        Stroke stroke;
        stroke.velocity = Vec3(vh * dir.x(), vy, vh * dir.y());
        stroke.target = target;
        stroke.flight_time = range / vh;
        return stroke;
    }
    throw TargetUnreachable("no stroke clearing the net after 1000 attempts");
}

}  // namespace

SimTrace simulate_tennis_rally_trace(const SimConfig& config, const PhysicsParams& phys) {
    config.validate();
    phys.validate();
    Rng rng = make_stream(config.seed, "tennis-rally");
    int strokes = config.num_launches;
    if (config.max_launches > config.num_launches) {
        strokes = std::uniform_int_distribution<int>(config.num_launches, config.max_launches)(rng);
    }

    Recorder rec(phys);
    const Integrator integrator(phys, rec.trace().bounces, rec.trace().sequence.events);
    BallState s;
    s.pos = Vec3(uniform(rng, -3.0, 3.0), 0.0, -uniform(rng, Court::kLength / 2.0 - 1.0,
                                                       Court::kLength / 2.0 + 1.0));
    s.phase = Phase::Rest;
    rec.record(s);

    for (int k = 0; k < strokes; ++k) {
        const bool last = k + 1 == strokes;
        if (k > 0) {
            rec.mark_eot();  // the step right before the hit
        }
        Stroke stroke = sample_stroke(s.pos, config, phys, rng);
        if (last) {
            // Retime the final stroke so its landing coincides with a sample and the
            // sequence ends on the ground.
            const double steps = std::max(2.0, std::round(stroke.flight_time / phys.dt));
            const double t = steps * phys.dt;
            const Eigen::Vector2d flat(stroke.target.x() - s.pos.x(), stroke.target.z() - s.pos.z());
            stroke.velocity = Vec3(flat.x() / t, (0.5 * phys.gravity * t * t - s.pos.y()) / t,
                                   flat.y() / t);
            stroke.flight_time = t;
        }
        s.vel = stroke.velocity;
        s.phase = Phase::Flight;
        rec.event(k == 0 ? EventKind::Launch : EventKind::Hit, s.pos);

        if (last) {
            const int steps = static_cast<int>(std::lround(stroke.flight_time / phys.dt));
            const Vec3 origin = s.pos;
            const Vec3 v0 = s.vel;
            for (int i = 1; i <= steps; ++i) {
                // Closed form from the hit avoids spurious contacts from rounding near landing.
                const double t = phys.dt * i;
                s.pos = origin + v0 * t;
                s.pos.y() = origin.y() + v0.y() * t - 0.5 * phys.gravity * t * t;
                s.vel = Vec3(v0.x(), v0.y() - phys.gravity * t, v0.z());
                if (i == steps) {
                    s.pos.y() = 0.0;
                }
                rec.record(s);
            }
            rec.trace().bounces.push_back({rec.now(), s.vel.y(), 0.0, s.pos, true});
            rec.event(EventKind::Bounce, s.pos);
            break;
        }

        // Fly through the landing, then meet the receiver 5-7 m beyond it.
        const double offset = uniform(rng, 5.0, 7.0);
        std::optional<Vec3> landing;
        for (int step = 0;; ++step) {
            if (step >= phys.max_steps) throw NonTerminating("rally stroke never reached receiver");
            const std::size_t before = rec.trace().bounces.size();
            integrator.advance(s, phys.dt, rec.now());
            if (!landing && rec.trace().bounces.size() > before) {
                landing = rec.trace().bounces[before].position;
            }
            if (s.phase == Phase::Rolling && horizontal_speed(s.vel) < phys.stop_speed) {
                s.vel.setZero();
                s.phase = Phase::Rest;
            }
            rec.record(s);
            if (landing) {
                const double run = std::hypot(s.pos.x() - landing->x(), s.pos.z() - landing->z());
                if (run >= offset || s.phase == Phase::Rest) break;
            }
        }
    }
    rec.mark_eot();
    rec.event(EventKind::Stop, s.pos);
    return std::move(rec.trace());
}

Sequence simulate_tennis_rally(const SimConfig& config, const PhysicsParams& phys) {
    return simulate_tennis_rally_trace(config, phys).sequence;
}

SimTrace simulate_family(const SimConfig& config) {
    config.validate();
    Rng rng = make_stream(config.seed, "physics");
    PhysicsParams phys = default_physics(config.fps);
    phys.restitution = uniform(rng, config.restitution_min, config.restitution_max);
    switch (config.family) {
        case Family::SingleLaunch: {
            Rng launch = make_stream(config.seed, "single-launch");
            return simulate_random_single_launch(config, launch);
        }
        case Family::MultiLaunch:
            return simulate_multi_launch_trace(config, phys);
        case Family::TennisRally:
            return simulate_tennis_rally_trace(config, phys);
    }
    throw InvalidArgument("unknown family");
}

Sequence render_track(const Sequence& seq, const CameraModel& cam) {
    cam.validate();
    Sequence out = seq;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        TrackSample& s = out.samples[i];
        if (!s.gt_point) {
            continue;
        }
        try {
            const Pixel px = project(*s.gt_point, cam);
            s.pixel = px;
            s.plane_points = ray_to_plane_points(back_project(px, cam));
        } catch (const BehindCamera&) {
            throw BehindCamera("sample " + std::to_string(i) + " projects behind the camera");
        }
    }
    return out;
}

CameraModel default_camera(Family family) {
    switch (family) {
        case Family::SingleLaunch:
            return CameraModel::look_at({2.25, 3.2, -3.2}, {2.25, 0.3, 2.2}, 1250.0, {1664.0, 1088.0});
        case Family::MultiLaunch:
            return CameraModel::look_at({0.0, 4.5, -5.5}, {0.0, 0.3, 5.5}, 1100.0, {1920.0, 1080.0});
        case Family::TennisRally:
            return CameraModel::look_at({0.0, 9.0, -31.5}, {0.0, 0.0, 1.0}, 1700.0, {1280.0, 720.0});
    }
    throw InvalidArgument("unknown family");
}

}  // namespace ball3d
