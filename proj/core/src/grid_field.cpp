#include "atloss/grid_field.hpp"

#include <cmath>
#include <string>

#include "atloss/error.hpp"

namespace atloss {

FieldView::FieldView(std::size_t h, std::size_t w, std::span<const double> v)
    : height(h), width(w), values(v) {
    if (h * w != v.size()) {
        throw DimensionError("field view: " + std::to_string(h) + "x" + std::to_string(w) +
                             " does not match " + std::to_string(v.size()) + " values");
    }
}

GridField::GridField(std::size_t height, std::size_t width)
    : GridField(height, width, std::vector<double>(height * width, 0.0)) {}

GridField::GridField(std::size_t height, std::size_t width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
    if (height_ == 0 || width_ == 0) {
        throw DimensionError("grid field must have at least one cell");
    }
    if (height_ * width_ != values_.size()) {
        throw DimensionError("grid field: " + std::to_string(height_) + "x" + std::to_string(width_) +
                             " does not match " + std::to_string(values_.size()) + " values");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw InvalidInput("grid field contains a non-finite value");
        if (v < 0.0) throw InvalidInput("grid field contains a negative intensity");
    }
}

void GridField::set(std::size_t row, std::size_t col, double v) {
    if (!std::isfinite(v) || v < 0.0) {
        throw InvalidInput("grid field values must be finite and non-negative");
    }
    values_.at(row * width_ + col) = v;
}

void require_same_shape(const FieldView& a, const FieldView& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(what) + ": shape mismatch " + std::to_string(a.height) + "x" +
                             std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                             std::to_string(b.width));
    }
}

void require_finite(const FieldView& f, const char* what) {
    for (double v : f.values) {
        if (!std::isfinite(v)) throw InvalidInput(std::string(what) + ": non-finite value");
    }
}

} // namespace atloss
