#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ball3d/geometry.hpp"
#include "ball3d/rng.hpp"
#include "ball3d/sequence.hpp"
#include "ball3d/simulator.hpp"

namespace ball3d {

inline constexpr int kSchemaVersion = 1;

/// Free-form provenance stored in the file header.
struct DatasetInfo {
    std::string family;
    std::uint64_t seed = 0;
    std::string split;
};

struct DatasetSplit {
    std::vector<Sequence> train;
    std::vector<Sequence> val;
    std::vector<Sequence> test;
    SimConfig config;
    CameraModel camera;
};

struct SplitCounts {
    int train = 0;
    int val = 0;
    int test = 0;
};

/// Simulates and renders every split; sequence i of split s draws from its own seed stream.
DatasetSplit generate_split(const SimConfig& config, const SplitCounts& counts,
                            const CameraModel& camera, const std::string& camera_id);

/// Seed of sequence `index` in split `split` ("train", "val", "test").
std::uint64_t sequence_seed(std::uint64_t base, const std::string& split, std::size_t index);

// JSONL: one file header line, then per sequence a header line followed by one line per sample.
void save_jsonl(const std::vector<Sequence>& sequences, const std::string& path,
                const DatasetInfo& info = {});
std::vector<Sequence> load_jsonl(const std::string& path, DatasetInfo* info = nullptr);

std::string to_jsonl(const std::vector<Sequence>& sequences, const DatasetInfo& info = {});
std::vector<Sequence> from_jsonl(const std::string& text, DatasetInfo* info = nullptr);

struct PixelNoise {
    enum class Kind { GaussianStd, UniformBound };
    Kind kind = Kind::GaussianStd;
    double magnitude = 0.0;  ///< sigma (Gaussian) or bound k (uniform on [-k, k])

    static PixelNoise gaussian(double sigma) { return {Kind::GaussianStd, sigma}; }
    static PixelNoise uniform(double bound) { return {Kind::UniformBound, bound}; }
};

/// Perturbs every pixel and recomputes plane points through `cam`; ground truth and flags are kept.
Sequence add_pixel_noise(const Sequence& seq, const CameraModel& cam, const PixelNoise& noise,
                         Rng& rng);

/// Recomputes plane points from pixels (used after any pixel edit).
void refresh_plane_points(Sequence& seq, const CameraModel& cam);

}  // namespace ball3d
