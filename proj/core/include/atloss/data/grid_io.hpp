#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "atloss/grid_field.hpp"

namespace atloss::data {

/// Grid-sequence container, all integers little-endian:
///   bytes 0-3   magic "ATGS"
///   u32         version (1)
///   u32         height
///   u32         width
///   u32         step count
///   f32[...]    values, step-major then row-major
inline constexpr std::uint32_t kGridFormatVersion = 1;

std::vector<std::uint8_t> encode_grid_sequence(std::span<const GridField> frames);
std::vector<GridField> decode_grid_sequence(std::span<const std::uint8_t> bytes);

void write_grid_sequence(const std::filesystem::path& path, std::span<const GridField> frames);
std::vector<GridField> read_grid_sequence(const std::filesystem::path& path);

/// "step,row,col,value" rows in physical units.
std::string export_csv(std::span<const GridField> frames);

} // namespace atloss::data
