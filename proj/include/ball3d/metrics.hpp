#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "ball3d/geometry.hpp"
#include "ball3d/sequence.hpp"

namespace ball3d {

enum class ErrorAxes { Distance, HeightOnly };

/// sqrt(mean ||pred - gt||^2) over xyz, or over y alone. Throws LengthMismatch.
double rmse(std::span<const Vec3> pred, std::span<const Vec3> gt, ErrorAxes axes = ErrorAxes::Distance);

/// Largest per-axis extent (max - min) of the points.
double max_axis_range(std::span<const Vec3> points);

/// rmse_distance / max_axis_range(gt). Throws DegenerateRange below 1e-9.
double nrmse(std::span<const Vec3> pred, std::span<const Vec3> gt);

/// RMSE * 100 / denominator (metres) for every named denominator.
std::map<std::string, double> nrmse_variants(double rmse_m, const std::map<std::string, double>& denominators);

/// Mean distance between the camera centre and the points.
double mean_camera_distance(const CameraModel& cam, std::span<const Vec3> points);

struct LandingEvent {
    int frame = 0;
    Eigen::Vector2d ground = Eigen::Vector2d::Zero();  ///< (x, z)
};

/// Interior local minima of predicted height below `height_threshold`; among minima closer
/// than `suppression_frames` only the lowest survives.
std::vector<LandingEvent> detect_landings(std::span<const Vec3> pred, double height_threshold = 0.05,
                                          int suppression_frames = 3);

/// Ground-truth bounce events strictly inside the sequence.
std::vector<LandingEvent> ground_truth_landings(const Sequence& seq);

struct LandingCounts {
    int gt = 0;
    int predicted = 0;
    int matched = 0;
    int correct = 0;
    double distance_sum = 0.0;

    LandingCounts& operator+=(const LandingCounts& o);
};

/// Greedy one-to-one matching (closest frame offset first, then ground distance) within
/// +-window_frames; a match is correct when the ground distance is at most radius_m.
LandingCounts match_landings(const std::vector<LandingEvent>& pred, const std::vector<LandingEvent>& gt,
                             double radius_m, int window_frames);

struct LandingReport {
    double t_acc = 0.0;  ///< percent of GT events matched within radius
    double t_f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::optional<double> le;  ///< mean ground distance of matched pairs
    LandingCounts counts;
    double radius_m = 0.5;
    int window_frames = 3;
};

/// Throws NoGroundTruthEvents when counts.gt == 0.
LandingReport landing_report(const LandingCounts& counts, double radius_m, int window_frames);

struct EvalOptions {
    std::map<std::string, double> denominators;  ///< extra NRMSE variants, metres
    bool landing = false;
    double radius_m = 0.5;
    int window_frames = 3;
    double landing_height = 0.05;
};

struct MetricReport {
    double rmse_distance = 0.0;
    double rmse_height = 0.0;
    double nrmse_range = 0.0;
    double range = 0.0;
    std::map<std::string, double> nrmse_by;
    std::optional<LandingReport> landing;
    std::size_t sample_count = 0;
    std::size_t sequence_count = 0;

    nlohmann::json to_json() const;
};

/// Pools every frame of every sequence; the NRMSE range spans the whole evaluation set.
MetricReport evaluate(const std::vector<std::vector<Vec3>>& predictions, const std::vector<Sequence>& truth,
                      const EvalOptions& options = {});

/// Writes a table with one row per labelled report.
void write_report_csv(const std::string& path, const std::vector<std::pair<std::string, MetricReport>>& rows);

}  // namespace ball3d
