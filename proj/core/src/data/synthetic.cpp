#include "atloss/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "atloss/error.hpp"
#include "atloss/random.hpp"

namespace atloss::data {

namespace {

struct RainCell {
    double row;
    double col;
    double amplitude;
    double sigma;
    int age;
};

RainCell spawn(Rng& rng, const StormParams& p, std::size_t h, std::size_t w) {
    RainCell c;
    c.row = rng.uniform(0.0, static_cast<double>(h));
    c.col = rng.uniform(0.0, static_cast<double>(w));
    c.amplitude = rng.uniform(p.amp_min, p.amp_max);
    c.sigma = rng.uniform(p.sigma_min, p.sigma_max);
    c.age = p.lifetime > 0 ? static_cast<int>(rng.index(static_cast<std::uint64_t>(p.lifetime))) : 0;
    return c;
}

// Shortest separation on a periodic axis.
double wrap_delta(double a, double b, double period) {
    double d = std::fmod(std::abs(a - b), period);
    return std::min(d, period - d);
}

double wrap(double v, double period) {
    v = std::fmod(v, period);
    return v < 0.0 ? v + period : v;
}

} // namespace

void StormParams::validate() const {
    if (cells < 0) throw InvalidParameter("storm cells must be >= 0");
    if (!(amp_min >= 0.0 && amp_max >= amp_min)) throw InvalidParameter("storm amplitude range invalid");
    if (!(sigma_min > 0.0 && sigma_max >= sigma_min)) throw InvalidParameter("storm sigma range invalid");
    if (!(jitter >= 0.0)) throw InvalidParameter("storm jitter must be >= 0");
    if (lifetime < 0) throw InvalidParameter("storm lifetime must be >= 0");
    if (!(background >= 0.0)) throw InvalidParameter("background must be >= 0");
    if (!(dry_probability >= 0.0 && dry_probability <= 1.0)) throw InvalidParameter("dry_probability must lie in [0, 1]");
    if (dry_length < 1) throw InvalidParameter("dry_length must be >= 1");
    if (!(clutter_fraction >= 0.0 && clutter_fraction <= 1.0)) throw InvalidParameter("clutter_fraction must lie in [0, 1]");
    if (!(clutter_min >= 0.0 && clutter_max >= clutter_min)) throw InvalidParameter("clutter range invalid");
}

std::vector<GridField> generate_synthetic_sequence(std::size_t height, std::size_t width, std::size_t steps,
                                                   const StormParams& params, std::uint64_t seed) {
    if (height == 0 || width == 0 || steps == 0) throw DimensionError("synthetic sequence dimensions must be positive");
    params.validate();

    Rng rng(seed);
    const auto h = static_cast<double>(height);
    const auto w = static_cast<double>(width);

    std::vector<RainCell> cells;
    cells.reserve(static_cast<std::size_t>(params.cells));
    for (int i = 0; i < params.cells; ++i) cells.push_back(spawn(rng, params, height, width));

    // Drizzle layer: two drifting sinusoidal modes, range [0.5, 1.5] * background.
    const double phase_r = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double phase_c = rng.uniform(0.0, 2.0 * std::numbers::pi);

    std::vector<GridField> out;
    out.reserve(steps);
    int dry_remaining = 0;

    for (std::size_t t = 0; t < steps; ++t) {
        if (dry_remaining == 0 && params.dry_probability > 0.0 && rng.bernoulli(params.dry_probability)) {
            dry_remaining = params.dry_length;
        }
        const bool dry = dry_remaining > 0;
        if (dry) --dry_remaining;

        std::vector<double> values(height * width, 0.0);
        const double shift_r = params.velocity_row * static_cast<double>(t);
        const double shift_c = params.velocity_col * static_cast<double>(t);
        if (params.background > 0.0) {
            for (std::size_t r = 0; r < height; ++r) {
                const double sr = std::sin(2.0 * std::numbers::pi * (static_cast<double>(r) - shift_r) / h + phase_r);
                for (std::size_t c = 0; c < width; ++c) {
                    const double sc =
                        std::cos(2.0 * std::numbers::pi * (static_cast<double>(c) - shift_c) / w + phase_c);
                    values[r * width + c] = params.background * (1.0 + 0.5 * sr * sc);
                }
            }
        }

        if (!dry) {
            for (const RainCell& cell : cells) {
                double amp = cell.amplitude;
                if (params.lifetime > 0) {
                    amp *= std::sin(std::numbers::pi * (cell.age + 0.5) / params.lifetime);
                }
                const double inv_two_var = 1.0 / (2.0 * cell.sigma * cell.sigma);
                const double reach = 4.0 * cell.sigma;
                for (std::size_t r = 0; r < height; ++r) {
                    const double dr = wrap_delta(static_cast<double>(r), cell.row, h);
                    if (dr > reach) continue;
                    for (std::size_t c = 0; c < width; ++c) {
                        const double dc = wrap_delta(static_cast<double>(c), cell.col, w);
                        if (dc > reach) continue;
                        values[r * width + c] += amp * std::exp(-(dr * dr + dc * dc) * inv_two_var);
                    }
                }
            }
        }

        if (params.clutter_fraction > 0.0) {
            for (double& v : values) {
                if (rng.bernoulli(params.clutter_fraction)) v = rng.uniform(params.clutter_min, params.clutter_max);
            }
        }

        out.emplace_back(height, width, std::move(values));

        for (RainCell& cell : cells) {
            double dr = params.velocity_row;
            double dc = params.velocity_col;
            if (params.jitter > 0.0) {
                dr += params.jitter * rng.normal();
                dc += params.jitter * rng.normal();
            }
            cell.row = wrap(cell.row + dr, h);
            cell.col = wrap(cell.col + dc, w);
            if (params.lifetime > 0 && ++cell.age >= params.lifetime) {
                cell = spawn(rng, params, height, width);
                cell.age = 0;
            }
        }
    }
    return out;
}

} // namespace atloss::data
