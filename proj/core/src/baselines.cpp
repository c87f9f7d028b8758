#include "atloss/baselines.hpp"

#include <cmath>
#include <string>

#include "atloss/error.hpp"

namespace atloss {

namespace {

struct Residual {
    double value;
    double grad;
};

Residual evaluate(double d, const BaselineLossKind& k) {
    switch (k.kind) {
        case BaselineKind::mae:
            return {std::abs(d), d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)};
        case BaselineKind::mse:
            return {d * d, 2.0 * d};
        case BaselineKind::huber: {
            const double a = std::abs(d);
            if (a <= k.delta) return {0.5 * d * d, d};
            return {k.delta * (a - 0.5 * k.delta), d > 0.0 ? k.delta : -k.delta};
        }
        case BaselineKind::charbonnier: {
            const double r = std::sqrt(d * d + k.epsilon * k.epsilon);
            return {r, d / r};
        }
    }
    return {0.0, 0.0};
}

} // namespace

void BaselineLossKind::validate() const {
    if (!(delta > 0.0 && std::isfinite(delta))) throw InvalidParameter("huber delta must be > 0");
    if (!(epsilon > 0.0 && std::isfinite(epsilon))) throw InvalidParameter("charbonnier epsilon must be > 0");
}

double baseline_loss_into(const FieldView& x, const FieldView& y, const BaselineLossKind& kind,
                          std::span<double> grad) {
    kind.validate();
    require_same_shape(x, y, "baseline_loss");
    if (grad.size() != y.size()) throw DimensionError("baseline_loss: gradient buffer size mismatch");
    require_finite(x, "baseline_loss target");
    require_finite(y, "baseline_loss forecast");

    const std::size_t n = y.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Residual r = evaluate(y.values[i] - x.values[i], kind);
        sum += r.value;
        grad[i] = r.grad * inv_n;
    }
    return sum * inv_n;
}

LossEval baseline_loss(const FieldView& x, const FieldView& y, const BaselineLossKind& kind) {
    LossEval out;
    out.height = y.height;
    out.width = y.width;
    out.grad.assign(y.size(), 0.0);
    out.value = baseline_loss_into(x, y, kind, out.grad);
    return out;
}

std::string_view to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::mae: return "mae";
        case BaselineKind::mse: return "mse";
        case BaselineKind::huber: return "huber";
        case BaselineKind::charbonnier: return "charbonnier";
    }
    return "?";
}

BaselineKind parse_baseline_kind(std::string_view s) {
    if (s == "mae") return BaselineKind::mae;
    if (s == "mse") return BaselineKind::mse;
    if (s == "huber") return BaselineKind::huber;
    if (s == "charbonnier") return BaselineKind::charbonnier;
    throw InvalidParameter("unknown baseline loss '" + std::string(s) + "'");
}

} // namespace atloss
