#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "atloss/grid_field.hpp"

namespace atloss::data {

/// Parameters of the advecting-Gaussian rain generator. Distances are in
/// grid cells, velocities in cells per step, intensities in mm/h.
struct StormParams {
    int cells = 8;
    double amp_min = 3.0;
    double amp_max = 9.0;
    double sigma_min = 4.0;
    double sigma_max = 9.0;
    double velocity_row = 0.4;
    double velocity_col = 0.9;
    double jitter = 0.15;        ///< sd of per-step random displacement
    int lifetime = 40;           ///< steps of one grow/decay cycle; 0 = constant amplitude
    double background = 0.6;     ///< mean stratiform drizzle, kept below the threshold
    double dry_probability = 0.02;
    int dry_length = 8;          ///< steps per dry spell
    double clutter_fraction = 0.002;
    double clutter_min = 40.0;
    double clutter_max = 80.0;

    void validate() const;
    friend bool operator==(const StormParams&, const StormParams&) = default;
};

/// Emits `steps` consecutive non-negative fields on a periodic domain.
/// During dry spells the storm cells are switched off, leaving only the
/// sub-threshold background. Deterministic given `seed`.
std::vector<GridField> generate_synthetic_sequence(std::size_t height, std::size_t width, std::size_t steps,
                                                   const StormParams& params, std::uint64_t seed);

} // namespace atloss::data
