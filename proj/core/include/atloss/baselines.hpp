#pragma once

#include <span>
#include <string_view>

#include "atloss/grid_field.hpp"
#include "atloss/loss_core.hpp"

namespace atloss {

enum class BaselineKind { mae, mse, huber, charbonnier };

struct BaselineLossKind {
    BaselineKind kind = BaselineKind::mse;
    double delta = 1.0;     ///< Huber transition point
    double epsilon = 1e-3;  ///< Charbonnier smoothing

    void validate() const;
    friend bool operator==(const BaselineLossKind&, const BaselineLossKind&) = default;
};

/// Mean pixel-wise loss over d = y - x:
///   mae          |d|            (subgradient 0 at d = 0)
///   mse          d^2            (not halved)
///   huber        d^2/2 for |d| <= delta, delta (|d| - delta/2) otherwise
///   charbonnier  sqrt(d^2 + epsilon^2)
LossEval baseline_loss(const FieldView& x, const FieldView& y, const BaselineLossKind& kind);

double baseline_loss_into(const FieldView& x, const FieldView& y, const BaselineLossKind& kind,
                          std::span<double> grad);

std::string_view to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(std::string_view s);

} // namespace atloss
