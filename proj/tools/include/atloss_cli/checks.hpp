#pragma once

#include <string>
#include <vector>

#include "atloss_cli/config.hpp"
#include "atloss_cli/report.hpp"

namespace atloss::cli {

/// Named result tables plus the failures they contain.
struct CheckResult {
    std::vector<std::pair<std::string, Table>> tables;
    std::vector<std::string> failures;

    [[nodiscard]] bool passed() const noexcept { return failures.empty(); }
    void merge(CheckResult other);
};

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

/// Finite-difference check of the AT loss gradient over random
/// (x, y, tau, theta) cases and of every trainer layer.
CheckResult run_gradcheck(const GradcheckConfig& cfg, std::uint64_t seed);

/// Grid sweep of the per-cell gradient against 16/(27 tau).
CheckResult run_lipschitz(const LipschitzConfig& cfg, double theta);

/// Exhaustive 2^k enumeration of forecast indicators. Throws InvalidParameter
/// for k outside [1, 20].
CheckResult run_penalty_oracle(const PenaltyConfig& cfg, double theta, std::uint64_t seed);

inline constexpr std::size_t kMaxOracleCells = 20;

} // namespace atloss::cli
