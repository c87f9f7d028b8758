#include "atloss/data/tukey.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "atloss/error.hpp"

namespace atloss::data {

double quantile(std::span<const double> values, double q) {
    if (values.empty()) throw InvalidInput("quantile of empty set");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameter("quantile level must lie in [0, 1]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

TukeyFences tukey_fences(std::span<const double> values, double k) {
    if (!(k > 0.0)) throw InvalidParameter("tukey fence multiplier must be > 0");
    const double q1 = quantile(values, 0.25);
    const double q3 = quantile(values, 0.75);
    const double iqr = q3 - q1;
    return {q1 - k * iqr, q3 + k * iqr};
}

namespace {

// One replacement pass. Returns false when no cell lies outside the fences.
bool refine_pass(std::vector<double>& v, std::size_t h, std::size_t w, double k) {
    const TukeyFences fences = tukey_fences(v, k);
    std::vector<char> outlier(v.size(), 0);
    double inlier_sum = 0.0;
    std::size_t inlier_count = 0;
    bool any = false;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (fences.contains(v[i])) {
            inlier_sum += v[i];
            ++inlier_count;
        } else {
            outlier[i] = 1;
            any = true;
        }
    }
    if (!any) return false;
    // The interquartile cells always lie inside the fences.
    const double global_mean = inlier_sum / static_cast<double>(inlier_count);

    std::vector<double> out = v;
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const std::size_t i = r * w + c;
            if (!outlier[i]) continue;
            double sum = 0.0;
            int count = 0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const auto rr = static_cast<std::ptrdiff_t>(r) + dr;
                    const auto cc = static_cast<std::ptrdiff_t>(c) + dc;
                    if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(h) ||
                        cc >= static_cast<std::ptrdiff_t>(w)) {
                        continue;
                    }
                    const std::size_t j = static_cast<std::size_t>(rr) * w + static_cast<std::size_t>(cc);
                    if (outlier[j]) continue;
                    sum += v[j];
                    ++count;
                }
            }
            out[i] = count > 0 ? sum / count : global_mean;
        }
    }
    v = std::move(out);
    return true;
}

} // namespace

GridField tukey_refine(const GridField& field, double k) {
    if (!(k > 0.0)) throw InvalidParameter("tukey fence multiplier must be > 0");
    const auto vals = field.values();
    if (std::all_of(vals.begin(), vals.end(), [&](double x) { return x == vals.front(); })) return field;

    std::vector<double> v(vals.begin(), vals.end());
    // Each pass only writes convex combinations of cells inside the current
    // fences, so every value stays inside the original fences.
    constexpr int kMaxPasses = 256;
    for (int pass = 0; pass < kMaxPasses && refine_pass(v, field.height(), field.width(), k); ++pass) {
    }
    return {field.height(), field.width(), std::move(v)};
}

} // namespace atloss::data
