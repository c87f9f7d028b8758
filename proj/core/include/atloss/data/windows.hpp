#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "atloss/data/normalization.hpp"
#include "atloss/grid_field.hpp"

namespace atloss::data {

inline constexpr std::size_t kWindowLength = 6;

/// Overlapping stride-1 windows over one ordered sequence. Frames are
/// stored once; windows are views into them.
class WindowedDataset {
public:
    WindowedDataset(std::vector<GridField> frames, std::size_t window, NormalizationSpec norm, double dt_minutes);

    [[nodiscard]] std::size_t size() const noexcept { return frames_.size() - window_ + 1; }
    [[nodiscard]] bool empty() const noexcept { return size() == 0; }
    [[nodiscard]] std::size_t window_length() const noexcept { return window_; }
    [[nodiscard]] std::span<const GridField> window(std::size_t i) const;
    [[nodiscard]] std::span<const GridField> frames() const noexcept { return frames_; }
    [[nodiscard]] const NormalizationSpec& norm() const noexcept { return norm_; }
    [[nodiscard]] double dt_minutes() const noexcept { return dt_; }
    [[nodiscard]] std::size_t height() const noexcept { return frames_.front().height(); }
    [[nodiscard]] std::size_t width() const noexcept { return frames_.front().width(); }

    /// Same frames, different normalization (e.g. the training set's).
    [[nodiscard]] WindowedDataset with_norm(const NormalizationSpec& norm) const;

private:
    std::vector<GridField> frames_;
    std::size_t window_;
    NormalizationSpec norm_;
    double dt_;
};

/// length - window + 1 windows; normalization computed over the full sequence.
WindowedDataset build_windows(std::vector<GridField> sequence, std::size_t window = kWindowLength,
                              double dt_minutes = 10.0);

} // namespace atloss::data
