#include "atloss/data/normalization.hpp"

#include <algorithm>
#include <cmath>

#include "atloss/error.hpp"

namespace atloss::data {

void NormalizationSpec::validate() const {
    if (!std::isfinite(physical_min) || !std::isfinite(physical_max) || physical_max <= physical_min) {
        throw InvalidParameter("normalization requires physical_max > physical_min");
    }
}

NormalizationSpec NormalizationSpec::from_sequence(std::span<const GridField> frames, double fallback_max) {
    double peak = 0.0;
    for (const GridField& f : frames) {
        for (double v : f.values()) peak = std::max(peak, v);
    }
    NormalizationSpec spec{0.0, peak > 0.0 ? peak : fallback_max};
    spec.validate();
    return spec;
}

std::vector<double> normalize(const FieldView& field, const NormalizationSpec& spec) {
    spec.validate();
    std::vector<double> out(field.size());
    std::transform(field.values.begin(), field.values.end(), out.begin(),
                   [&](double v) { return spec.normalize(v); });
    return out;
}

std::vector<double> denormalize(std::span<const double> values, const NormalizationSpec& spec) {
    spec.validate();
    std::vector<double> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [&](double v) { return spec.denormalize(v); });
    return out;
}

} // namespace atloss::data
