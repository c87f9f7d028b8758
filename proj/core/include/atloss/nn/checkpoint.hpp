#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "atloss/nn/cnn.hpp"

namespace atloss::nn {

/// Model checkpoint, little-endian:
///   "ATCK", u32 version (1),
///   u32 in_channels, u32 hidden_channels, u32 kernel, u32 use_norm, u32 activation,
///   f64 norm_eps, u32 tensor count,
///   per tensor: u32 element count, f32[count].
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const CnnModel<float>& model);
CnnModel<float> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const CnnModel<float>& model);
CnnModel<float> load_checkpoint(const std::filesystem::path& path);

} // namespace atloss::nn
