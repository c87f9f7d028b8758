#pragma once

#include <span>

#include "atloss/grid_field.hpp"

namespace atloss::data {

struct TukeyFences {
    double lower;
    double upper;

    [[nodiscard]] bool contains(double v) const noexcept { return v >= lower && v <= upper; }
};

/// Linear-interpolation quantile (numpy's default) of unsorted values.
double quantile(std::span<const double> values, double q);

/// [Q1 - k IQR, Q3 + k IQR].
TukeyFences tukey_fences(std::span<const double> values, double k = 1.5);

/// Replaces every cell outside the Tukey fences by the mean of its
/// non-outlier 8-neighbours, or by the global non-outlier mean when it
/// has none. Passes repeat until the fences of the result contain every
/// cell, so refining twice changes nothing. A constant field is
/// returned unchanged.
GridField tukey_refine(const GridField& field, double k = 1.5);

} // namespace atloss::data
