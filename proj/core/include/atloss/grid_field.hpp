#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace atloss {

/// Read-only view of a row-major 2-D field.
///
/// Forecasts are pre-activation model outputs and may be negative, so the
/// losses and metrics take views with only a finiteness requirement. Use
/// GridField for observed intensities.
struct FieldView {
    std::size_t height = 0;
    std::size_t width = 0;
    std::span<const double> values;

    FieldView() = default;
    FieldView(std::size_t h, std::size_t w, std::span<const double> v);

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] bool same_shape(const FieldView& other) const noexcept {
        return height == other.height && width == other.width;
    }
};

/// Precipitation intensities in mm/h over height x width grid cells.
///
/// Invariants: height * width > 0, every value finite and >= 0.
class GridField {
public:
    /// All-zero field.
    GridField(std::size_t height, std::size_t width);
    GridField(std::size_t height, std::size_t width, std::vector<double> values);

    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] double at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    /// Replaces one value; rejects negative or non-finite intensities.
    void set(std::size_t row, std::size_t col, double v);

    [[nodiscard]] FieldView view() const noexcept { return {height_, width_, values_}; }
    operator FieldView() const noexcept { return view(); } // NOLINT(google-explicit-constructor)

    friend bool operator==(const GridField&, const GridField&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    std::vector<double> values_;
};

/// Throws DimensionError unless both views have the same shape.
void require_same_shape(const FieldView& a, const FieldView& b, const char* what);

/// Throws InvalidInput if any value is NaN or infinite.
void require_finite(const FieldView& f, const char* what);

} // namespace atloss
