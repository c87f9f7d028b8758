#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "atloss/grid_field.hpp"

namespace atloss::data {

enum class NoiseKind { salt_and_pepper, random_valued_impulse };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::salt_and_pepper;
    double fraction = 0.2;
    std::uint64_t seed = 0;
    double min_fraction = 0.10;
    double max_fraction = 0.30;
    double value_min = 0.0;  ///< pepper / lower end of the impulse range (mm/h)
    double value_max = 1.0;  ///< salt / upper end of the impulse range (mm/h)

    void validate() const;
    friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// round(fraction * n).
std::size_t corrupted_count(std::size_t n, double fraction);

/// The distinct cell indices inject_noise corrupts, in selection order.
std::vector<std::size_t> select_noise_cells(std::size_t n, const NoiseSpec& spec);

/// Salt-and-pepper sets each selected cell to value_min or value_max with
/// equal probability; random-valued impulse draws uniformly from
/// [value_min, value_max].
GridField inject_noise(const GridField& field, const NoiseSpec& spec);

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view s);

} // namespace atloss::data
