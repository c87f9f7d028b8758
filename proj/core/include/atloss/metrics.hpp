#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "atloss/grid_field.hpp"

namespace atloss::metrics {

struct ContingencyTable {
    std::size_t hits = 0;               ///< f(x) = 1, f(y) = 1
    std::size_t misses = 0;             ///< f(x) = 1, f(y) = 0
    std::size_t false_alarms = 0;       ///< f(x) = 0, f(y) = 1
    std::size_t correct_negatives = 0;  ///< f(x) = 0, f(y) = 0

    [[nodiscard]] std::size_t total() const noexcept {
        return hits + misses + false_alarms + correct_negatives;
    }
    ContingencyTable& operator+=(const ContingencyTable& o) noexcept;
    friend bool operator==(const ContingencyTable&, const ContingencyTable&) = default;
};

/// A score that is either a real number or undefined (zero denominator).
class MetricValue {
public:
    MetricValue() = default;
    explicit MetricValue(double v) : value_(v) {}
    static MetricValue undefined() { return {}; }

    [[nodiscard]] bool defined() const noexcept { return value_.has_value(); }
    /// Throws std::bad_optional_access when undefined.
    [[nodiscard]] double value() const { return value_.value(); }
    /// Decimal text, or the literal "undefined".
    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const MetricValue&, const MetricValue&) = default;

private:
    std::optional<double> value_;
};

ContingencyTable contingency(const FieldView& x, const FieldView& y, double theta);

/// hits / (hits + misses + false_alarms); undefined when no event is observed or forecast.
MetricValue csi(const ContingencyTable& t);

struct CategoricalScores {
    MetricValue pod;
    MetricValue far;
    MetricValue hss;
};

/// POD = h/(h+m), FAR = fa/(h+fa), HSS = 2(h cn - m fa) / ((h+m)(m+cn) + (h+fa)(fa+cn)).
CategoricalScores pod_far_hss(const ContingencyTable& t);

struct ContinuousScores {
    double mae;
    double psnr;  ///< dB, capped
};

constexpr double kDefaultPsnrCap = 99.0;

/// MAE and PSNR = 10 log10(peak^2 / MSE); identical fields give `psnr_cap`.
ContinuousScores mae_psnr(const FieldView& a, const FieldView& b, double peak, double psnr_cap = kDefaultPsnrCap);

/// Running mean that skips undefined values and counts them.
class MetricAccumulator {
public:
    void add(const MetricValue& v);
    [[nodiscard]] MetricValue mean() const;
    [[nodiscard]] std::size_t defined_count() const noexcept { return count_; }
    [[nodiscard]] std::size_t excluded_count() const noexcept { return excluded_; }

private:
    double sum_ = 0.0;
    std::size_t count_ = 0;
    std::size_t excluded_ = 0;
};

/// One verification row; columns threshold, lead_time, csi, hss, pod, far, mae, psnr.
struct MetricRow {
    double threshold = 0.0;
    double lead_time = 0.0;  ///< minutes
    MetricValue csi;
    MetricValue hss;
    MetricValue pod;
    MetricValue far;
    double mae = 0.0;
    double psnr = 0.0;

    static std::string csv_header();
    [[nodiscard]] std::string to_csv() const;
};

/// Scores a single forecast field against its ground truth.
MetricRow evaluate_field(const FieldView& truth, const FieldView& forecast, double theta, double lead_time,
                         double peak);

} // namespace atloss::metrics
