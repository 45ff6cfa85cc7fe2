#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ball3d/geometry.hpp"
#include "ball3d/pipeline.hpp"

namespace ball3d {

/// Per-frame output of an estimator as stored on disk. Intermediates are only present for
/// the learned pipeline.
struct PredictionRecord {
    std::string method;  ///< "pipeline", "baseline", ...
    std::vector<Vec3> points;
    std::optional<PredictedTrajectory> intermediates;
};

PredictionRecord to_record(const PredictedTrajectory& p);

/// JSONL: a file header, then per sequence a header line and one line per frame.
void save_predictions(const std::string& path, const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> load_predictions(const std::string& path);

}  // namespace ball3d
