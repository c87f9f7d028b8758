#pragma once

#include <span>
#include <vector>

#include "atloss/grid_field.hpp"

namespace atloss::data {

/// Affine map of [physical_min, physical_max] (mm/h) onto [-1, 1].
struct NormalizationSpec {
    double physical_min = 0.0;
    double physical_max = 1.0;

    void validate() const;

    [[nodiscard]] double normalize(double v) const noexcept {
        return 2.0 * (v - physical_min) / (physical_max - physical_min) - 1.0;
    }
    [[nodiscard]] double denormalize(double v) const noexcept {
        return physical_min + (v + 1.0) * 0.5 * (physical_max - physical_min);
    }
    /// d(physical) / d(normalized).
    [[nodiscard]] double scale() const noexcept { return 0.5 * (physical_max - physical_min); }
    [[nodiscard]] double range() const noexcept { return physical_max - physical_min; }

    /// physical_min = 0, physical_max = largest value in the sequence
    /// (or `fallback_max` when every value is 0).
    static NormalizationSpec from_sequence(std::span<const GridField> frames, double fallback_max = 1.0);

    friend bool operator==(const NormalizationSpec&, const NormalizationSpec&) = default;
};

std::vector<double> normalize(const FieldView& field, const NormalizationSpec& spec);
std::vector<double> denormalize(std::span<const double> values, const NormalizationSpec& spec);

} // namespace atloss::data
