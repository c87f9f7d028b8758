#include "atloss/data/windows.hpp"

#include <string>

#include "atloss/error.hpp"

namespace atloss::data {

WindowedDataset::WindowedDataset(std::vector<GridField> frames, std::size_t window, NormalizationSpec norm,
                                 double dt_minutes)
    : frames_(std::move(frames)), window_(window), norm_(norm), dt_(dt_minutes) {
    if (window_ == 0) throw InvalidParameter("window length must be positive");
    if (frames_.size() < window_) {
        throw InvalidInput("sequence of length " + std::to_string(frames_.size()) + " is shorter than window " +
                           std::to_string(window_));
    }
    for (const GridField& f : frames_) {
        if (f.height() != frames_.front().height() || f.width() != frames_.front().width()) {
            throw DimensionError("all frames of a windowed dataset must share one shape");
        }
    }
    norm_.validate();
}

std::span<const GridField> WindowedDataset::window(std::size_t i) const {
    if (i >= size()) throw InvalidInput("window index out of range");
    return std::span<const GridField>(frames_).subspan(i, window_);
}

WindowedDataset WindowedDataset::with_norm(const NormalizationSpec& norm) const {
    return {frames_, window_, norm, dt_};
}

WindowedDataset build_windows(std::vector<GridField> sequence, std::size_t window, double dt_minutes) {
    if (sequence.size() < window) {
        throw InvalidInput("sequence of length " + std::to_string(sequence.size()) + " is shorter than window " +
                           std::to_string(window));
    }
    const NormalizationSpec norm = NormalizationSpec::from_sequence(sequence);
    return {std::move(sequence), window, norm, dt_minutes};
}

} // namespace atloss::data
