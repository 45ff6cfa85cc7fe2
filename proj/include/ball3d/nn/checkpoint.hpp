#pragma once

#include <filesystem>

#include <json.hpp>

#include "ball3d/nn/adam.hpp"
#include "ball3d/nn/tensor.hpp"

namespace ball3d::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint layout:
///   "BALL3DCK" | u32 version | u64 header length | JSON header | raw little-endian doubles
/// The header lists every parameter (name, shape) in storage order plus caller metadata.
/// Optimizer moments, when present, follow the parameter values in the same order.
void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params,
                     const nlohmann::json& metadata, const AdamState* adam = nullptr);

/// Header of a checkpoint without touching its tensors.
nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

/// Loads values into an already-structured `params`; names and shapes must match exactly.
/// Restores `adam` when requested and present. Returns the caller metadata.
nlohmann::json load_checkpoint(const std::filesystem::path& path, ParameterSet& params,
                               AdamState* adam = nullptr);

}  // namespace ball3d::nn
