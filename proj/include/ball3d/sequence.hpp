#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ball3d/geometry.hpp"

namespace ball3d {

/// Physical events recorded by the simulator, used for segmentation and landing metrics.
enum class EventKind { Launch, RollLaunch, Bounce, Settle, Hit, Stop };

const char* to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& name);

struct TrackEvent {
    EventKind kind = EventKind::Bounce;
    double time = 0.0;   ///< seconds since the first sample
    int frame = 0;       ///< sample index nearest to `time`
    Vec3 position = Vec3::Zero();
};

struct TrackSample {
    int frame_index = 0;
    std::optional<Pixel> pixel;
    std::optional<PlanePoints> plane_points;
    std::optional<Vec3> gt_point;
    int eot = 0;
};

/// Time-ordered 2D track with optional 3D ground truth.
struct Sequence {
    std::vector<TrackSample> samples;
    double fps = 50.0;
    std::string camera_id;
    std::vector<TrackEvent> events;

    std::size_t size() const { return samples.size(); }
    bool has_ground_truth() const;
    bool has_complete_pixels() const;

    std::vector<Pixel> pixels() const;          ///< requires complete pixels
    std::vector<PlanePoints> plane_points() const;  ///< requires complete plane points
    std::vector<Vec3> ground_truth() const;     ///< requires complete ground truth
    std::vector<int> eot_flags() const;

    /// Throws InvalidArgument when frame indices are not increasing or the length is below two.
    void validate() const;
};

}  // namespace ball3d
