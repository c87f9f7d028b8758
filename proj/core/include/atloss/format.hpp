#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace atloss {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace atloss
