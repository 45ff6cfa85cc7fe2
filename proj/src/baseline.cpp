#include "ball3d/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "ball3d/errors.hpp"

namespace ball3d {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Residual vector and Jacobian at theta; returns false when theta is infeasible
/// (a point behind the camera).
using Evaluate = std::function<bool(const VectorXd& theta, VectorXd& r, MatrixXd& J)>;

struct LmOutcome {
    VectorXd theta;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
};

LmOutcome levenberg_marquardt(VectorXd theta, const Evaluate& eval, const BaselineConfig& config) {
    VectorXd r;
    MatrixXd J;
    if (!eval(theta, r, J)) throw BehindCamera("initial guess projects behind the camera");

    MatrixXd A = J.transpose() * J;
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(A, Eigen::EigenvaluesOnly);
    const double max_ev = eig.eigenvalues().maxCoeff();
    if (!(max_ev > 0.0) || eig.eigenvalues().minCoeff() < 1e-12 * max_ev) {
        throw SingularNormalEquations("observations do not determine the segment parameters");
    }

    LmOutcome out;
    out.cost = r.squaredNorm();
    double lambda = config.initial_damping;
    VectorXd r_try;
    MatrixXd J_try;
    for (out.iterations = 0; out.iterations < config.max_iterations; ++out.iterations) {
        A = J.transpose() * J;
        const VectorXd g = J.transpose() * r;
        MatrixXd damped = A;
        damped.diagonal() += lambda * A.diagonal();
        const VectorXd step = damped.ldlt().solve(-g);
        if (!step.allFinite()) break;
        const VectorXd candidate = theta + step;
        if (eval(candidate, r_try, J_try) && r_try.squaredNorm() < out.cost) {
            theta = candidate;
            r.swap(r_try);
            J.swap(J_try);
            out.cost = r.squaredNorm();
            lambda = std::max(lambda / 10.0, 1e-15);
        } else {
            lambda *= 10.0;
        }
        if (step.norm() < config.step_tolerance) {
            out.converged = true;
            break;
        }
        if (lambda > 1e16) {
            // No descent direction left: theta is a minimiser to working precision.
            out.converged = true;
            break;
        }
    }
    out.theta = theta;
    return out;
}

/// Pixel of `X` and d(pixel)/dX; false when X is not in front of the camera.
bool project_with_jacobian(const CameraModel& cam, const Vec3& X, Eigen::Vector2d& px,
                           Eigen::Matrix<double, 2, 3>& dpx) {
    const Eigen::Matrix3d R = cam.rotation();
    const Vec3 pc = R * X + cam.translation();
    if (pc.z() <= 0.0) return false;
    const double f = cam.focal_px;
    const double iz = 1.0 / pc.z();
    px << f * pc.x() * iz + cam.principal_point.x(), f * pc.y() * iz + cam.principal_point.y();
    Eigen::Matrix<double, 2, 3> dp;
    dp << f * iz, 0.0, -f * pc.x() * iz * iz, 0.0, f * iz, -f * pc.y() * iz * iz;
    dpx = dp * R;
    return true;
}

Vec3 ground_point(const Pixel& px, const CameraModel& cam) { return height_to_point(back_project(px, cam), 0.0); }

}  // namespace

Vec3 ProjectileSegment::position(double t) const {
    const double tau = t - t0;
    if (span.kind == MotionKind::Rolling) {
        Vec3 p = x0 + v0 * tau + 0.5 * a0 * tau * tau;
        p.y() = 0.0;
        return p;
    }
    return x0 + v0 * tau - Vec3(0.0, 0.5 * gravity * tau * tau, 0.0);
}

ProjectileSegment fit_segment(std::span<const Pixel> pixels, std::span<const double> times, const CameraModel& cam,
                              const SegmentSpan& span, const BaselineConfig& config) {
    if (pixels.size() != times.size()) throw LengthMismatch("fit_segment: pixels and times differ in length");
    if (pixels.empty()) throw SingularNormalEquations("fit_segment: no observations");
    const auto m = static_cast<Eigen::Index>(pixels.size());

    ProjectileSegment seg;
    seg.span = span;
    seg.gravity = config.gravity;
    const bool rolling = span.kind == MotionKind::Rolling;
    seg.t0 = rolling ? times.front() : span.contact_start.value_or(times.front());

    const double sqrt_mu = std::sqrt(config.contact_weight);
    std::vector<double> contacts;
    if (!rolling) {
        if (span.contact_start) contacts.push_back(*span.contact_start);
        if (span.contact_end) contacts.push_back(*span.contact_end);
    }
    const auto rows = 2 * m + static_cast<Eigen::Index>(contacts.size());
    const double g = config.gravity;
    const double t0 = seg.t0;

    // Rolling: theta = (x0, z0, vx, vz, ax, az); projectile: theta = (x0, v0).
    auto point_of = [&](const VectorXd& th, double tau) -> Vec3 {
        if (rolling) {
            return {th[0] + th[2] * tau + 0.5 * th[4] * tau * tau, 0.0, th[1] + th[3] * tau + 0.5 * th[5] * tau * tau};
        }
        return {th[0] + th[3] * tau, th[1] + th[4] * tau - 0.5 * g * tau * tau, th[2] + th[5] * tau};
    };
    const Evaluate eval = [&](const VectorXd& th, VectorXd& r, MatrixXd& J) {
        r.resize(rows);
        J.setZero(rows, 6);
        Eigen::Vector2d px;
        Eigen::Matrix<double, 2, 3> dpx;
        for (Eigen::Index i = 0; i < m; ++i) {
            const double tau = times[static_cast<std::size_t>(i)] - t0;
            if (!project_with_jacobian(cam, point_of(th, tau), px, dpx)) return false;
            const Pixel& obs = pixels[static_cast<std::size_t>(i)];
            r.segment<2>(2 * i) = px - Eigen::Vector2d(obs.u, obs.v);
            Eigen::Matrix<double, 3, 6> dX = Eigen::Matrix<double, 3, 6>::Zero();
            if (rolling) {
                dX(0, 0) = 1.0;
                dX(0, 2) = tau;
                dX(0, 4) = 0.5 * tau * tau;
                dX(2, 1) = 1.0;
                dX(2, 3) = tau;
                dX(2, 5) = 0.5 * tau * tau;
            } else {
                dX.leftCols<3>().setIdentity();
                dX.rightCols<3>() = tau * Eigen::Matrix3d::Identity();
            }
            J.middleRows<2>(2 * i) = dpx * dX;
        }
        for (std::size_t k = 0; k < contacts.size(); ++k) {
            const double tau = contacts[k] - t0;
            const auto row = 2 * m + static_cast<Eigen::Index>(k);
            r[row] = sqrt_mu * (th[1] + th[4] * tau - 0.5 * g * tau * tau);
            J(row, 1) = sqrt_mu;
            J(row, 4) = sqrt_mu * tau;
        }
        return true;
    };

    // Endpoint-based initial guess: heights from the contact information, horizontal motion
    // from the ground-plane points of the first and last observation.
    VectorXd theta(6);
    const double t_end = rolling ? times.back() : span.contact_end.value_or(times.back());
    const double duration = std::max(t_end - t0, 1e-6);
    if (rolling) {
        const Vec3 a = ground_point(pixels.front(), cam);
        const Vec3 b = ground_point(pixels.back(), cam);
        const Vec3 v = (b - a) / std::max(times.back() - times.front(), 1e-6);
        theta << a.x(), a.z(), v.x(), v.z(), 0.0, 0.0;
    } else {
        const double guess = 0.5 * config.scene_height_guess;
        const Vec3 a = height_to_point(back_project(pixels.front(), cam), span.contact_start ? 0.0 : guess);
        const Vec3 b = height_to_point(back_project(pixels.back(), cam), span.contact_end ? 0.0 : guess);
        Vec3 v = (b - a) / duration;
        v.y() += 0.5 * g * duration;
        theta << a, v;
    }

    const LmOutcome lm = levenberg_marquardt(theta, eval, config);
    seg.iterations = lm.iterations;
    seg.converged = lm.converged;
    if (rolling) {
        seg.x0 = {lm.theta[0], 0.0, lm.theta[1]};
        seg.v0 = {lm.theta[2], 0.0, lm.theta[3]};
        seg.a0 = {lm.theta[4], 0.0, lm.theta[5]};
    } else {
        seg.x0 = lm.theta.head<3>();
        seg.v0 = lm.theta.tail<3>();
    }
    VectorXd r;
    MatrixXd J;
    eval(lm.theta, r, J);
    seg.residual_rms_px = std::sqrt(r.head(2 * m).squaredNorm() / static_cast<double>(m));
    return seg;
}

namespace {

std::vector<SegmentSpan> segments_from_events(const Sequence& seq) {
    struct Mark {
        double time;
        EventKind kind;
    };
    std::vector<Mark> marks;
    for (const TrackEvent& e : seq.events) marks.push_back({e.time, e.kind});
    std::stable_sort(marks.begin(), marks.end(), [](const Mark& a, const Mark& b) { return a.time < b.time; });

    const int n = static_cast<int>(seq.size());
    const double fps = seq.fps;
    const double t_last = (n - 1) / fps;
    std::vector<SegmentSpan> spans;
    for (std::size_t i = 0; i < marks.size(); ++i) {
        const Mark& start = marks[i];
        if (start.kind == EventKind::Stop) continue;
        const double t_end = i + 1 < marks.size() ? marks[i + 1].time : t_last;
        const EventKind end_kind = i + 1 < marks.size() ? marks[i + 1].kind : EventKind::Stop;
        if (t_end <= start.time) continue;
        SegmentSpan s;
        s.first = std::max(0, static_cast<int>(std::ceil(start.time * fps - 1e-6)));
        s.last = std::min(n - 1, static_cast<int>(std::floor(t_end * fps + 1e-6)));
        if (s.last < s.first) continue;
        const bool rolling = start.kind == EventKind::Settle || start.kind == EventKind::RollLaunch;
        s.kind = rolling ? MotionKind::Rolling : MotionKind::Projectile;
        if (!rolling) {
            // Launches start from rest on the ground; hits happen in the air.
            if (start.kind != EventKind::Hit) s.contact_start = start.time;
            if (end_kind == EventKind::Bounce || end_kind == EventKind::Settle) s.contact_end = t_end;
        }
        spans.push_back(s);
    }
    return spans;
}

std::vector<SegmentSpan> segments_from_curvature(const Sequence& seq, const CameraModel& cam,
                                                 const BaselineConfig& config) {
    const int n = static_cast<int>(seq.size());
    const double dt = 1.0 / seq.fps;
    const double unit = config.gravity * dt * dt;
    const auto pixels = seq.pixels();

    // Height proxy of the vertical-plane point rescaled to the ball's depth (ball assumed near
    // the ground), and its normalised second difference.
    std::vector<double> height(static_cast<std::size_t>(n));
    std::vector<double> scale(static_cast<std::size_t>(n));
    std::vector<double> vy(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
        const Ray ray = back_project(pixels[static_cast<std::size_t>(t)], cam);
        const PlanePoints p = ray_to_plane_points(ray);
        const double s_g = -ray.origin.y() / ray.direction.y();
        const double s_v = -ray.origin.z() / ray.direction.z();
        const auto k = static_cast<std::size_t>(t);
        scale[k] = std::abs(s_v / s_g);
        vy[k] = p.vy;
        height[k] = ray.origin.y() + (p.vy - ray.origin.y()) / scale[k];
    }
    std::vector<double> curvature(static_cast<std::size_t>(n), 0.0);
    for (int t = 1; t + 1 < n; ++t) {
        const auto k = static_cast<std::size_t>(t);
        curvature[k] = (vy[k + 1] - 2.0 * vy[k] + vy[k - 1]) / scale[k] / unit;
    }

    std::vector<int> bounces;
    for (int t = 1; t + 1 < n;) {
        if (curvature[static_cast<std::size_t>(t)] <= config.bounce_threshold) {
            ++t;
            continue;
        }
        int end = t;
        while (end + 1 < n - 1 && curvature[static_cast<std::size_t>(end + 1)] > config.bounce_threshold) ++end;
        int best = t;
        for (int k = t; k <= end; ++k) {
            if (height[static_cast<std::size_t>(k)] < height[static_cast<std::size_t>(best)]) best = k;
        }
        bounces.push_back(best);
        t = end + 1;
    }

    std::vector<int> bounds = {0};
    const int min_gap = std::max(1, config.min_segment_frames - 1);
    for (const int b : bounces) {
        if (b - bounds.back() >= min_gap && (n - 1) - b >= min_gap) bounds.push_back(b);
    }
    bounds.push_back(n - 1);

    std::vector<SegmentSpan> spans;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        SegmentSpan s;
        s.first = bounds[i];
        s.last = bounds[i + 1];
        int lo = s.first + 1;
        int hi = s.last - 1;
        if (hi - lo >= 2) {
            ++lo;
            --hi;
        }
        double mean = 0.0;
        int count = 0;
        for (int t = lo; t <= hi; ++t, ++count) mean += curvature[static_cast<std::size_t>(t)];
        mean = count > 0 ? mean / count : -1.0;
        s.kind = mean > -config.flat_threshold ? MotionKind::Rolling : MotionKind::Projectile;
        if (s.kind == MotionKind::Projectile) {
            s.contact_start = s.first * dt;
            s.contact_end = s.last * dt;
        }
        spans.push_back(s);
    }
    return spans;
}

}  // namespace

std::vector<SegmentSpan> segment_track(const Sequence& seq, const CameraModel& cam, SegmentMode mode,
                                       const BaselineConfig& config) {
    if (seq.size() == 0) throw NoSegments("empty track");
    if (seq.size() < 4) throw SequenceTooShort("segmentation needs at least four frames");
    std::vector<SegmentSpan> spans;
    if (mode == SegmentMode::GroundTruthFlags) {
        spans = segments_from_events(seq);
    } else {
        if (!seq.has_complete_pixels()) throw InvalidArgument("heuristic segmentation needs a complete pixel track");
        spans = segments_from_curvature(seq, cam, config);
    }
    if (spans.empty()) {
        SegmentSpan whole;
        whole.first = 0;
        whole.last = static_cast<int>(seq.size()) - 1;
        spans.push_back(whole);
    }
    return spans;
}

FitResult baseline_predict(const Sequence& seq, const CameraModel& cam, SegmentMode mode,
                           const BaselineConfig& config) {
    if (!seq.has_complete_pixels()) throw InvalidArgument("baseline needs a complete pixel track");
    const auto pixels = seq.pixels();
    const std::size_t n = pixels.size();
    std::vector<double> times(n);
    for (std::size_t t = 0; t < n; ++t) times[t] = static_cast<double>(t) / seq.fps;

    FitResult out;
    std::vector<Vec3> sum(n, Vec3::Zero());
    std::vector<int> count(n, 0);
    const auto spans = segment_track(seq, cam, mode, config);
    for (std::size_t k = 0; k < spans.size(); ++k) {
        const SegmentSpan& span = spans[k];
        const auto first = static_cast<std::size_t>(span.first);
        const auto len = static_cast<std::size_t>(span.last - span.first + 1);
        try {
            ProjectileSegment seg = fit_segment(std::span(pixels).subspan(first, len),
                                                std::span<const double>(times).subspan(first, len), cam, span, config);
            for (std::size_t t = first; t < first + len; ++t) {
                sum[t] += seg.position(times[t]);
                ++count[t];
            }
            out.iterations += seg.iterations;
            out.segments.push_back(seg);
        } catch (const SingularNormalEquations&) {
            // Too few frames for a model: fall back to the ground-plane points.
            for (std::size_t t = first; t < first + len; ++t) {
                sum[t] += ground_point(pixels[t], cam);
                ++count[t];
            }
        } catch (const Error& e) {
            throw Error("segment " + std::to_string(k) + " [" + std::to_string(span.first) + ", " +
                        std::to_string(span.last) + "]: " + e.what());
        }
    }
    out.points.resize(n);
    double sq = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        out.points[t] = count[t] > 0 ? Vec3(sum[t] / count[t]) : ground_point(pixels[t], cam);
        try {
            const Pixel p = project(out.points[t], cam);
            sq += (p.u - pixels[t].u) * (p.u - pixels[t].u) + (p.v - pixels[t].v) * (p.v - pixels[t].v);
        } catch (const BehindCamera&) {
            sq += std::numeric_limits<double>::infinity();
        }
    }
    out.reprojection_rmse_px = std::sqrt(sq / static_cast<double>(n));
    return out;
}

}  // namespace ball3d
