#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "atloss/grid_field.hpp"
#include "atloss/random.hpp"

namespace atloss {

/// 1 iff k >= theta. The boundary k == theta counts as an event.
int step_indicator(double k, double theta);

/// Per-cell mismatch f(x) + f(y) - 2 f(x) f(y), i.e. f(x) XOR f(y).
int binary_penalty(double x, double y, double theta);

/// Number of cells whose indicators disagree: sum_i (f(x_i) - f(y_i))^2.
/// This is the QUBO objective over the forecast indicators.
std::size_t overall_penalty(const FieldView& x, const FieldView& y, double theta);

/// Inverse logistic CDF, ln u - ln(1 - u). u is clamped one ulp-scale
/// guard away from 0 and 1.
double logistic_from_uniform(double u);

/// One Logistic(0, 1) draw by inverse transform sampling.
double sample_logistic(Rng& rng);

/// Numerically stable logistic sigmoid.
double sigmoid(double v);

struct AtLossParams {
    double tau = 1.0;               ///< temperature, (0, 1]
    double theta = 2.0;             ///< threshold in mm/h
    double perturbation_scale = 0.1;
    double z_clamp = 0.5;           ///< hard bound on |scale * z|
    double tau_floor = 0.05;
    bool deterministic = false;     ///< z == 0 everywhere
    bool shared_z = false;          ///< one z per forward pass instead of one per cell
    std::uint64_t seed = 0;

    /// Throws InvalidParameter on any out-of-range field.
    void validate() const;

    [[nodiscard]] AtLossParams with_tau(double t) const {
        AtLossParams p = *this;
        p.tau = t;
        return p;
    }

    friend bool operator==(const AtLossParams&, const AtLossParams&) = default;
};

/// sigma((2y - 2 theta + z) / tau). Strictly increasing in y.
double soft_indicator(double y, const AtLossParams& params, double z);

/// Scaled and clamped logistic perturbation used by at_loss for `cell`
/// at optimizer step `step`. Depends only on (seed, step, cell), so the
/// result is independent of evaluation order and thread count.
double perturbation(const AtLossParams& params, std::uint64_t step, std::size_t cell);

/// Scalar loss and dL/dy per forecast cell.
struct LossEval {
    double value = 0.0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> grad;

    [[nodiscard]] FieldView grad_view() const { return {height, width, grad}; }
};

/// Per-cell loss (f - zeta)^2 and its derivative -4/tau (f - zeta) zeta (1 - zeta).
struct CellLoss {
    double value;
    double grad;
    double zeta;
};
CellLoss at_loss_cell(int x_indicator, double y, double tau, double theta, double z);

/// Mean AT loss over all cells with the analytic gradient (already divided by n).
LossEval at_loss(const FieldView& x, const FieldView& y, const AtLossParams& params, std::uint64_t step = 0);

/// Allocation-free variant; writes dL/dy into `grad` and returns the loss value.
double at_loss_into(const FieldView& x, const FieldView& y, const AtLossParams& params, std::uint64_t step,
                    std::span<double> grad);

/// Location and height of the extremum of the per-cell gradient in zeta.
struct GradExtremum {
    double zeta_star;
    double grad_magnitude;
};

/// zeta* = 2/3 for f(x) = 0 and 1/3 for f(x) = 1; the magnitude there is 16/(27 tau).
GradExtremum at_loss_grad_extremum(double tau, int x_indicator);

/// Upper bound on |dL_i/dy| for a single cell.
double at_loss_lipschitz(double tau);

enum class AnnealShape { linear, exponential };

struct AnnealSchedule {
    double tau_start = 1.0;
    double tau_floor = 0.05;
    int total_epochs = 100;
    AnnealShape shape = AnnealShape::linear;

    void validate() const;
    friend bool operator==(const AnnealSchedule&, const AnnealSchedule&) = default;
};

/// Temperature at `epoch`; non-increasing and clamped to [tau_floor, tau_start].
double anneal_tau(const AnnealSchedule& schedule, int epoch);

std::string_view to_string(AnnealShape shape);
AnnealShape parse_anneal_shape(std::string_view s);

} // namespace atloss
