#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "atloss/error.hpp"
#include "atloss/nn/cnn.hpp"

namespace atloss::nn {

struct AdamConfig {
    double lr = 0.0002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const {
        if (!(lr > 0.0)) throw InvalidParameter("learning rate must be > 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
            throw InvalidParameter("Adam betas must lie in [0, 1)");
        }
        if (!(eps > 0.0)) throw InvalidParameter("Adam epsilon must be > 0");
    }
    friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// Bias-corrected Adam over a CnnModel's parameter set.
template <typename T>
class Adam {
public:
    Adam(const CnnModel<T>& model, AdamConfig config) : config_(config) {
        config_.validate();
        for (std::size_t i = 0; i < kParamCount; ++i) {
            m_[i].assign(model.params()[i].size(), 0.0);
            v_[i].assign(model.params()[i].size(), 0.0);
        }
    }

    void step(CnnModel<T>& model, const ParamArray<T>& grads) {
        ++t_;
        const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < kParamCount; ++i) {
            auto& p = model.params()[i];
            if (grads[i].size() != p.size() || m_[i].size() != p.size()) {
                throw DimensionError("Adam: gradient / moment shape mismatch");
            }
            for (std::size_t j = 0; j < p.size(); ++j) {
                const double g = static_cast<double>(grads[i][j]);
                m_[i][j] = config_.beta1 * m_[i][j] + (1.0 - config_.beta1) * g;
                v_[i][j] = config_.beta2 * v_[i][j] + (1.0 - config_.beta2) * g * g;
                const double mhat = m_[i][j] / c1;
                const double vhat = v_[i][j] / c2;
                p[j] = static_cast<T>(static_cast<double>(p[j]) - config_.lr * mhat / (std::sqrt(vhat) + config_.eps));
            }
        }
    }

    [[nodiscard]] std::uint64_t steps() const noexcept { return t_; }
    [[nodiscard]] const AdamConfig& config() const noexcept { return config_; }
    [[nodiscard]] const ParamArray<double>& first_moment() const noexcept { return m_; }
    [[nodiscard]] const ParamArray<double>& second_moment() const noexcept { return v_; }

private:
    AdamConfig config_;
    ParamArray<double> m_;
    ParamArray<double> v_;
    std::uint64_t t_ = 0;
};

} // namespace atloss::nn
