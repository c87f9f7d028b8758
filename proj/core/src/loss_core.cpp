#include "atloss/loss_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "atloss/error.hpp"

namespace atloss {

int step_indicator(double k, double theta) {
    if (!std::isfinite(k) || !std::isfinite(theta)) {
        throw InvalidInput("step_indicator: non-finite input");
    }
    return k >= theta ? 1 : 0;
}

int binary_penalty(double x, double y, double theta) {
    const int fx = step_indicator(x, theta);
    const int fy = step_indicator(y, theta);
    return fx + fy - 2 * fx * fy;
}

std::size_t overall_penalty(const FieldView& x, const FieldView& y, double theta) {
    require_same_shape(x, y, "overall_penalty");
    std::size_t total = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int d = step_indicator(x.values[i], theta) - step_indicator(y.values[i], theta);
        total += static_cast<std::size_t>(d * d);
    }
    return total;
}

double logistic_from_uniform(double u) {
    constexpr double guard = std::numeric_limits<double>::epsilon();
    u = std::clamp(u, guard, 1.0 - guard);
    return std::log(u / (1.0 - u));
}

double sample_logistic(Rng& rng) { return logistic_from_uniform(rng.uniform()); }

double sigmoid(double v) {
    // exp(-746) is already 0 in double; skip libm's slow underflow path.
    if (v > 746.0) return 1.0;
    if (v < -746.0) return 0.0;
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

void AtLossParams::validate() const {
    if (!(tau_floor > 0.0 && tau_floor <= 1.0)) {
        throw InvalidParameter("tau_floor must lie in (0, 1], got " + std::to_string(tau_floor));
    }
    if (!(tau > 0.0 && tau <= 1.0)) throw InvalidParameter("tau must lie in (0, 1], got " + std::to_string(tau));
    if (tau < tau_floor) throw InvalidParameter("tau below configured floor");
    if (!(std::isfinite(theta) && theta >= 0.0)) throw InvalidParameter("theta must be finite and >= 0");
    if (!(std::isfinite(perturbation_scale) && perturbation_scale >= 0.0)) {
        throw InvalidParameter("perturbation_scale must be finite and >= 0");
    }
    if (!(std::isfinite(z_clamp) && z_clamp >= 0.0)) throw InvalidParameter("z_clamp must be finite and >= 0");
}

double soft_indicator(double y, const AtLossParams& params, double z) {
    if (!(params.tau > 0.0)) throw InvalidParameter("soft_indicator: tau must be > 0");
    if (!std::isfinite(y) || !std::isfinite(z)) throw InvalidInput("soft_indicator: non-finite input");
    return sigmoid((2.0 * y - 2.0 * params.theta + z) / params.tau);
}

namespace {

bool has_perturbation(const AtLossParams& p) { return !p.deterministic && p.perturbation_scale != 0.0; }

// `base` is derive_seed(seed, step); cells hash off it.
double perturbation_at(const AtLossParams& params, std::uint64_t base, std::size_t cell) {
    const std::uint64_t stream = params.shared_z ? base : mix64(base ^ static_cast<std::uint64_t>(cell));
    const double z = params.perturbation_scale * logistic_from_uniform(bits_to_open_unit(mix64(stream)));
    return std::clamp(z, -params.z_clamp, params.z_clamp);
}

} // namespace

double perturbation(const AtLossParams& params, std::uint64_t step, std::size_t cell) {
    if (!has_perturbation(params)) return 0.0;
    return perturbation_at(params, derive_seed(params.seed, step), cell);
}

CellLoss at_loss_cell(int x_indicator, double y, double tau, double theta, double z) {
    const double zeta = sigmoid((2.0 * y - 2.0 * theta + z) / tau);
    const double diff = static_cast<double>(x_indicator) - zeta;
    return {diff * diff, -4.0 / tau * diff * zeta * (1.0 - zeta), zeta};
}

double at_loss_into(const FieldView& x, const FieldView& y, const AtLossParams& params, std::uint64_t step,
                    std::span<double> grad) {
    params.validate();
    require_same_shape(x, y, "at_loss");
    if (grad.size() != y.size()) throw DimensionError("at_loss: gradient buffer size mismatch");
    require_finite(y, "at_loss forecast");

    const std::size_t n = y.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    const bool perturbed = has_perturbation(params);
    const std::uint64_t base = derive_seed(params.seed, step);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int fx = step_indicator(x.values[i], params.theta);
        const double z = perturbed ? perturbation_at(params, base, i) : 0.0;
        const CellLoss c = at_loss_cell(fx, y.values[i], params.tau, params.theta, z);
        sum += c.value;
        grad[i] = c.grad * inv_n;
    }
    return sum * inv_n;
}

LossEval at_loss(const FieldView& x, const FieldView& y, const AtLossParams& params, std::uint64_t step) {
    LossEval out;
    out.height = y.height;
    out.width = y.width;
    out.grad.assign(y.size(), 0.0);
    out.value = at_loss_into(x, y, params, step, out.grad);
    return out;
}

GradExtremum at_loss_grad_extremum(double tau, int x_indicator) {
    if (!(tau > 0.0 && tau <= 1.0)) throw InvalidParameter("at_loss_grad_extremum: tau must lie in (0, 1]");
    if (x_indicator != 0 && x_indicator != 1) throw InvalidInput("at_loss_grad_extremum: indicator must be 0 or 1");
    // Interior root of d/dzeta of the per-cell gradient:
    //   f = 0: zeta (3 zeta - 2) = 0,  f = 1: (zeta - 1)(3 zeta - 1) = 0.
    const double zeta = x_indicator == 0 ? 2.0 / 3.0 : 1.0 / 3.0;
    const double f = static_cast<double>(x_indicator);
    return {zeta, std::abs(4.0 / tau * (f - zeta) * zeta * (1.0 - zeta))};
}

double at_loss_lipschitz(double tau) { return at_loss_grad_extremum(tau, 0).grad_magnitude; }

void AnnealSchedule::validate() const {
    if (!(tau_start > 0.0 && tau_start <= 1.0)) throw InvalidParameter("tau_start must lie in (0, 1]");
    if (!(tau_floor > 0.0 && tau_floor <= tau_start)) throw InvalidParameter("tau_floor must lie in (0, tau_start]");
    if (total_epochs < 1) throw InvalidParameter("total_epochs must be >= 1");
}

double anneal_tau(const AnnealSchedule& schedule, int epoch) {
    schedule.validate();
    if (epoch <= 0) return schedule.tau_start;
    if (epoch >= schedule.total_epochs) return schedule.tau_floor;
    const double progress = static_cast<double>(epoch) / schedule.total_epochs;
    double tau = 0.0;
    switch (schedule.shape) {
        case AnnealShape::linear:
            tau = schedule.tau_start + (schedule.tau_floor - schedule.tau_start) * progress;
            break;
        case AnnealShape::exponential:
            tau = schedule.tau_start * std::pow(schedule.tau_floor / schedule.tau_start, progress);
            break;
    }
    return std::clamp(tau, schedule.tau_floor, schedule.tau_start);
}

std::string_view to_string(AnnealShape shape) {
    return shape == AnnealShape::linear ? "linear" : "exponential";
}

AnnealShape parse_anneal_shape(std::string_view s) {
    if (s == "linear") return AnnealShape::linear;
    if (s == "exponential") return AnnealShape::exponential;
    throw InvalidParameter("unknown anneal shape '" + std::string(s) + "'");
}

} // namespace atloss
