#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "atloss/error.hpp"

namespace atloss::nn {

struct Shape4 {
    std::size_t batch = 0;
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    [[nodiscard]] std::size_t size() const noexcept { return batch * channels * height * width; }
    [[nodiscard]] std::size_t plane() const noexcept { return height * width; }
    friend bool operator==(const Shape4&, const Shape4&) = default;
};

/// Dense NCHW tensor.
template <typename T>
class Tensor4 {
public:
    Tensor4() = default;
    explicit Tensor4(Shape4 shape, T fill = T(0)) : shape_(shape), data_(shape.size(), fill) {}
    Tensor4(std::size_t n, std::size_t c, std::size_t h, std::size_t w, T fill = T(0))
        : Tensor4(Shape4{n, c, h, w}, fill) {}

    [[nodiscard]] const Shape4& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t batch() const noexcept { return shape_.batch; }
    [[nodiscard]] std::size_t channels() const noexcept { return shape_.channels; }
    [[nodiscard]] std::size_t height() const noexcept { return shape_.height; }
    [[nodiscard]] std::size_t width() const noexcept { return shape_.width; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    [[nodiscard]] std::span<T> data() noexcept { return data_; }
    [[nodiscard]] std::span<const T> data() const noexcept { return data_; }

    T& operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
        return data_[((n * shape_.channels + c) * shape_.height + y) * shape_.width + x];
    }
    const T& operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
        return data_[((n * shape_.channels + c) * shape_.height + y) * shape_.width + x];
    }

    /// Contiguous H x W plane of sample n, channel c.
    [[nodiscard]] std::span<T> plane(std::size_t n, std::size_t c) {
        return std::span<T>(data_).subspan((n * shape_.channels + c) * shape_.plane(), shape_.plane());
    }
    [[nodiscard]] std::span<const T> plane(std::size_t n, std::size_t c) const {
        return std::span<const T>(data_).subspan((n * shape_.channels + c) * shape_.plane(), shape_.plane());
    }

    /// Reshapes, reusing storage when the element count is unchanged.
    void reset(Shape4 shape, T fill = T(0)) {
        shape_ = shape;
        data_.assign(shape.size(), fill);
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    [[nodiscard]] bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    friend bool operator==(const Tensor4&, const Tensor4&) = default;

private:
    Shape4 shape_;
    std::vector<T> data_;
};

} // namespace atloss::nn
