#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "atloss/error.hpp"
#include "atloss/nn/layers.hpp"
#include "atloss/nn/tensor.hpp"
#include "atloss/random.hpp"

namespace atloss::nn {

enum class Activation { swish, identity };

struct CnnConfig {
    std::size_t in_channels = 1;
    std::size_t hidden_channels = 16;
    std::size_t kernel = 3;
    bool use_norm = true;
    Activation activation = Activation::swish;
    double norm_eps = 1e-5;

    void validate() const {
        if (in_channels == 0 || hidden_channels == 0) throw InvalidParameter("channel counts must be positive");
        if (kernel % 2 == 0) throw InvalidParameter("kernel size must be odd");
        if (!(norm_eps > 0.0)) throw InvalidParameter("instance norm epsilon must be > 0");
    }
    friend bool operator==(const CnnConfig&, const CnnConfig&) = default;
};

enum ParamIndex : std::size_t { kConv1Weight, kConv1Bias, kNormScale, kNormShift, kConv2Weight, kConv2Bias, kParamCount };

inline constexpr std::array<std::string_view, kParamCount> kParamNames = {
    "conv1.weight", "conv1.bias", "norm.scale", "norm.shift", "conv2.weight", "conv2.bias"};

template <typename T>
using ParamArray = std::array<std::vector<T>, kParamCount>;

/// conv(in -> hidden) -> instance norm -> Swish -> conv(hidden -> 1).
/// The output is left pre-activation.
template <typename T>
class CnnModel {
public:
    explicit CnnModel(CnnConfig config = {}) : config_(config) {
        config_.validate();
        const std::size_t kk = config_.kernel * config_.kernel;
        params_[kConv1Weight].assign(config_.hidden_channels * config_.in_channels * kk, T(0));
        params_[kConv1Bias].assign(config_.hidden_channels, T(0));
        params_[kNormScale].assign(config_.hidden_channels, T(1));
        params_[kNormShift].assign(config_.hidden_channels, T(0));
        params_[kConv2Weight].assign(config_.hidden_channels * kk, T(0));
        params_[kConv2Bias].assign(1, T(0));
    }

    /// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); norm scale 1, shift 0.
    void init_uniform_fan_in(std::uint64_t seed) {
        Rng rng(derive_seed(seed, 0xc0ffee));
        const auto kk = static_cast<double>(config_.kernel * config_.kernel);
        const double b1 = 1.0 / std::sqrt(static_cast<double>(config_.in_channels) * kk);
        const double b2 = 1.0 / std::sqrt(static_cast<double>(config_.hidden_channels) * kk);
        for (auto& v : params_[kConv1Weight]) v = static_cast<T>(rng.uniform(-b1, b1));
        for (auto& v : params_[kConv1Bias]) v = static_cast<T>(rng.uniform(-b1, b1));
        for (auto& v : params_[kConv2Weight]) v = static_cast<T>(rng.uniform(-b2, b2));
        for (auto& v : params_[kConv2Bias]) v = static_cast<T>(rng.uniform(-b2, b2));
        std::fill(params_[kNormScale].begin(), params_[kNormScale].end(), T(1));
        std::fill(params_[kNormShift].begin(), params_[kNormShift].end(), T(0));
    }

    [[nodiscard]] const CnnConfig& config() const noexcept { return config_; }
    [[nodiscard]] ParamArray<T>& params() noexcept { return params_; }
    [[nodiscard]] const ParamArray<T>& params() const noexcept { return params_; }
    [[nodiscard]] std::span<T> param(ParamIndex i) noexcept { return params_[i]; }
    [[nodiscard]] std::span<const T> param(ParamIndex i) const noexcept { return params_[i]; }

    [[nodiscard]] Conv2d<T> conv1() const { return {config_.in_channels, config_.hidden_channels, config_.kernel}; }
    [[nodiscard]] Conv2d<T> conv2() const { return {config_.hidden_channels, 1, config_.kernel}; }

    template <typename U>
    [[nodiscard]] CnnModel<U> cast() const {
        CnnModel<U> out(config_);
        for (std::size_t i = 0; i < kParamCount; ++i) {
            auto& dst = out.params()[i];
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = static_cast<U>(params_[i][j]);
        }
        return out;
    }

    friend bool operator==(const CnnModel&, const CnnModel&) = default;

private:
    CnnConfig config_;
    ParamArray<T> params_;
};

/// Activations kept by forward() for backward().
template <typename T>
struct ForwardCache {
    bool valid = false;
    Tensor4<T> input;
    typename InstanceNorm<T>::Cache norm;
    Tensor4<T> pre_activation;  ///< after the norm, before Swish
    Tensor4<T> sigmoid;         ///< sigmoid(pre_activation) when Swish is active
    Tensor4<T> hidden;          ///< input of conv2
};

// Both passes run one sample at a time so a sample's hidden planes stay in cache.
template <typename T>
Tensor4<T> forward(const CnnModel<T>& model, const Tensor4<T>& input, ForwardCache<T>* cache = nullptr) {
    const CnnConfig& cfg = model.config();
    if (input.channels() != cfg.in_channels) {
        throw DimensionError("model expects " + std::to_string(cfg.in_channels) + " input channel(s), got " +
                             std::to_string(input.channels()));
    }
    if (input.size() == 0) throw DimensionError("empty model input");

    ForwardCache<T> local;
    ForwardCache<T>& c = cache ? *cache : local;
    c.valid = false;
    c.input = input;

    const std::size_t hc = cfg.hidden_channels;
    const Shape4 hs{input.batch(), hc, input.height(), input.width()};
    const bool swish = cfg.activation == Activation::swish;
    if (c.pre_activation.shape() != hs) c.pre_activation.reset(hs);
    if (c.hidden.shape() != hs) c.hidden.reset(hs);
    if (swish && c.sigmoid.shape() != hs) c.sigmoid.reset(hs);
    if (cfg.use_norm) {
        if (c.norm.normalized.shape() != hs) c.norm.normalized.reset(hs);
        c.norm.inv_std.resize(input.batch() * hc);
    }

    const Conv2d<T> conv1 = model.conv1();
    const Conv2d<T> conv2 = model.conv2();
    conv1.check(model.param(kConv1Weight), model.param(kConv1Bias));
    conv2.check(model.param(kConv2Weight), model.param(kConv2Bias));
    const InstanceNorm<T> norm{cfg.norm_eps};
    const auto h = static_cast<std::ptrdiff_t>(input.height());
    const auto w = static_cast<std::ptrdiff_t>(input.width());
    const std::size_t plane = input.shape().plane();
    const auto scale = model.param(kNormScale);
    const auto shift = model.param(kNormShift);

    Tensor4<T> out(Shape4{input.batch(), 1, input.height(), input.width()});
    std::vector<T> conv1_out(hc * plane);
    for (std::size_t n = 0; n < input.batch(); ++n) {
        T* pre = c.pre_activation.plane(n, 0).data();
        T* hid = c.hidden.plane(n, 0).data();
        conv1.forward_sample(input.plane(n, 0).data(), model.param(kConv1Weight).data(),
                             model.param(kConv1Bias).data(), cfg.use_norm ? conv1_out.data() : pre, h, w);
        for (std::size_t k = 0; k < hc; ++k) {
            T* pk = pre + k * plane;
            if (cfg.use_norm) {
                c.norm.inv_std[n * hc + k] = norm.forward_plane(conv1_out.data() + k * plane, plane, scale[k],
                                                                shift[k], c.norm.normalized.plane(n, k).data(), pk);
            }
            if (swish) {
                Swish<T>::forward(std::span<const T>(pk, plane), std::span<T>(hid + k * plane, plane),
                                  c.sigmoid.plane(n, k));
            } else {
                std::copy(pk, pk + plane, hid + k * plane);
            }
        }
        conv2.forward_sample(hid, model.param(kConv2Weight).data(), model.param(kConv2Bias).data(),
                             out.plane(n, 0).data(), h, w);
    }
    c.valid = true;
    return out;
}

/// Parameter gradients for the upstream gradient dL/d(output). When
/// `input_grad` is non-null it receives dL/d(input).
template <typename T>
ParamArray<T> backward(const CnnModel<T>& model, const ForwardCache<T>& cache, const Tensor4<T>& upstream,
                       Tensor4<T>* input_grad = nullptr) {
    if (!cache.valid) throw InvalidInput("backward called without a forward cache");
    const CnnConfig& cfg = model.config();
    const Shape4 out_shape{cache.input.batch(), 1, cache.input.height(), cache.input.width()};
    if (upstream.shape() != out_shape) throw DimensionError("upstream gradient shape does not match model output");

    ParamArray<T> grads;
    for (std::size_t i = 0; i < kParamCount; ++i) grads[i].assign(model.params()[i].size(), T(0));
    if (input_grad && input_grad->shape() != cache.input.shape()) input_grad->reset(cache.input.shape());

    const Conv2d<T> conv1 = model.conv1();
    const Conv2d<T> conv2 = model.conv2();
    const std::size_t hc = cfg.hidden_channels;
    const auto h = static_cast<std::ptrdiff_t>(upstream.height());
    const auto w = static_cast<std::ptrdiff_t>(upstream.width());
    const std::size_t plane = upstream.shape().plane();
    const bool swish = cfg.activation == Activation::swish;
    const auto scale = model.param(kNormScale);

    std::vector<T> d_hidden(hc * plane);
    std::vector<T> d_conv1(cfg.use_norm ? hc * plane : 0);
    std::vector<T> scratch(static_cast<std::size_t>(3 * w));
    for (std::size_t n = 0; n < upstream.batch(); ++n) {
        const T* g = upstream.plane(n, 0).data();
        conv2.accumulate_params_sample(cache.hidden.plane(n, 0).data(), g, grads[kConv2Weight].data(),
                                       grads[kConv2Bias].data(), h, w, scratch.data());
        conv2.backward_input_sample(g, model.param(kConv2Weight).data(), d_hidden.data(), h, w);
        T* d_c1 = cfg.use_norm ? d_conv1.data() : d_hidden.data();
        for (std::size_t k = 0; k < hc; ++k) {
            T* dk = d_hidden.data() + k * plane;
            if (swish) {
                const T* x = cache.pre_activation.plane(n, k).data();
                const T* s = cache.sigmoid.plane(n, k).data();
                for (std::size_t i = 0; i < plane; ++i) dk[i] *= Swish<T>::derivative(x[i], s[i]);
            }
            if (cfg.use_norm) {
                InstanceNorm<T>::backward_plane(dk, cache.norm.normalized.plane(n, k).data(), plane,
                                                cache.norm.inv_std[n * hc + k], scale[k], d_c1 + k * plane,
                                                grads[kNormScale][k], grads[kNormShift][k]);
            }
        }
        conv1.accumulate_params_sample(cache.input.plane(n, 0).data(), d_c1, grads[kConv1Weight].data(),
                                       grads[kConv1Bias].data(), h, w, scratch.data());
        if (input_grad) {
            conv1.backward_input_sample(d_c1, model.param(kConv1Weight).data(), input_grad->plane(n, 0).data(), h, w);
        }
    }
    return grads;
}

} // namespace atloss::nn
