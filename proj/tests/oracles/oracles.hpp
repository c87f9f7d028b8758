#pragma once

// Reference implementations written independently of the library, in
// long double and in the most literal form available.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

inline long double logistic(long double v) { return 1.0L / (1.0L + std::exp(-v)); }

/// (f - sigma((2y - 2 theta + z)/tau))^2 for one cell.
inline long double at_cell_value(int f, long double y, long double tau, long double theta, long double z) {
    const long double d = static_cast<long double>(f) - logistic((2.0L * y - 2.0L * theta + z) / tau);
    return d * d;
}

/// Central difference in long double.
inline long double central_difference(const std::function<long double(long double)>& fn, long double x,
                                      long double h) {
    return (fn(x + h) - fn(x - h)) / (2.0L * h);
}

/// Number of cells where exactly one of x, y reaches theta.
inline std::size_t xor_count(const std::vector<double>& x, const std::vector<double>& y, double theta) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const bool a = x[i] >= theta;
        const bool b = y[i] >= theta;
        if (a != b) ++n;
    }
    return n;
}

/// Direct zero-padded 2-D cross-correlation, NCHW, weights [o][c][ky][kx].
inline std::vector<double> naive_conv(const std::vector<double>& in, std::size_t n, std::size_t cin, std::size_t h,
                                      std::size_t w, const std::vector<double>& weight, const std::vector<double>& bias,
                                      std::size_t cout, std::size_t k) {
    std::vector<double> out(n * cout * h * w, 0.0);
    const long pad = static_cast<long>(k / 2);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t o = 0; o < cout; ++o)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) {
                    long double acc = bias[o];
                    for (std::size_t c = 0; c < cin; ++c)
                        for (std::size_t ky = 0; ky < k; ++ky)
                            for (std::size_t kx = 0; kx < k; ++kx) {
                                const long sy = static_cast<long>(y + ky) - pad;
                                const long sx = static_cast<long>(x + kx) - pad;
                                if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) continue;
                                acc += static_cast<long double>(weight[((o * cin + c) * k + ky) * k + kx]) *
                                       in[((b * cin + c) * h + static_cast<std::size_t>(sy)) * w +
                                          static_cast<std::size_t>(sx)];
                            }
                    out[((b * cout + o) * h + y) * w + x] = static_cast<double>(acc);
                }
    return out;
}

/// Quantile by sorting and linear interpolation at position q (n - 1).
inline double quantile_sorted(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

struct Counts {
    double hits = 0, misses = 0, false_alarms = 0, correct_negatives = 0;
};

inline Counts count_cells(const std::vector<double>& truth, const std::vector<double>& fc, double theta) {
    Counts c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool o = truth[i] >= theta, f = fc[i] >= theta;
        if (o && f) c.hits += 1;
        else if (o) c.misses += 1;
        else if (f) c.false_alarms += 1;
        else c.correct_negatives += 1;
    }
    return c;
}

/// Heidke skill score as (accuracy - chance) / (1 - chance).
inline double hss_from_chance(const Counts& c) {
    const double n = c.hits + c.misses + c.false_alarms + c.correct_negatives;
    const double acc = (c.hits + c.correct_negatives) / n;
    const double chance = ((c.hits + c.misses) * (c.hits + c.false_alarms) +
                           (c.correct_negatives + c.misses) * (c.correct_negatives + c.false_alarms)) /
                          (n * n);
    return (acc - chance) / (1.0 - chance);
}

} // namespace oracle
