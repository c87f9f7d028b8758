#include "atloss/data/noise.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "atloss/error.hpp"
#include "atloss/random.hpp"

namespace atloss::data {

void NoiseSpec::validate() const {
    if (!(min_fraction >= 0.0 && max_fraction <= 1.0 && min_fraction <= max_fraction)) {
        throw InvalidParameter("noise fraction bounds must satisfy 0 <= min <= max <= 1");
    }
    if (!(fraction >= min_fraction && fraction <= max_fraction)) {
        throw InvalidParameter("noise fraction " + std::to_string(fraction) + " outside [" +
                               std::to_string(min_fraction) + ", " + std::to_string(max_fraction) + "]");
    }
    if (!(std::isfinite(value_min) && std::isfinite(value_max) && value_min >= 0.0 && value_max >= value_min)) {
        throw InvalidParameter("noise value range must satisfy 0 <= value_min <= value_max");
    }
}

std::size_t corrupted_count(std::size_t n, double fraction) {
    return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
}

std::vector<std::size_t> select_noise_cells(std::size_t n, const NoiseSpec& spec) {
    spec.validate();
    const std::size_t m = corrupted_count(n, spec.fraction);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(derive_seed(spec.seed, 0x5e1ec7));
    // Partial Fisher-Yates: the first m entries are a uniform m-subset.
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(m);
    return idx;
}

GridField inject_noise(const GridField& field, const NoiseSpec& spec) {
    const std::vector<std::size_t> cells = select_noise_cells(field.size(), spec);
    std::vector<double> v(field.values().begin(), field.values().end());
    Rng rng(derive_seed(spec.seed, 0xa11e));
    for (std::size_t i : cells) {
        switch (spec.kind) {
            case NoiseKind::salt_and_pepper:
                v[i] = rng.bernoulli(0.5) ? spec.value_max : spec.value_min;
                break;
            case NoiseKind::random_valued_impulse:
                v[i] = rng.uniform(spec.value_min, spec.value_max);
                break;
        }
    }
    return {field.height(), field.width(), std::move(v)};
}

std::string_view to_string(NoiseKind kind) {
    return kind == NoiseKind::salt_and_pepper ? "salt_and_pepper" : "random_valued_impulse";
}

NoiseKind parse_noise_kind(std::string_view s) {
    if (s == "salt_and_pepper") return NoiseKind::salt_and_pepper;
    if (s == "random_valued_impulse") return NoiseKind::random_valued_impulse;
    throw InvalidParameter("unknown noise kind '" + std::string(s) + "'");
}

} // namespace atloss::data
