#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "atloss/error.hpp"
#include "atloss/nn/adam.hpp"
#include "atloss/nn/checkpoint.hpp"
#include "atloss/nn/cnn.hpp"
#include "atloss/nn/layers.hpp"
#include "atloss/random.hpp"
#include "oracles.hpp"

using namespace atloss;
using namespace atloss::nn;

namespace {

template <typename T>
Tensor4<T> random_tensor(Rng& rng, Shape4 s, double lo = -1.0, double hi = 1.0) {
    Tensor4<T> t(s);
    for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
}

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

// Sum of out * g: a scalar whose gradient w.r.t. the outputs is g.
double dot(std::span<const double> a, std::span<const double> b) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
    return static_cast<double>(s);
}

} // namespace

TEST(Conv2d, MatchesNaiveConvolution) {
    Rng rng(1);
    for (std::size_t k : {1u, 3u, 5u}) {
        const Conv2d<double> conv{2, 3, k};
        const auto in = random_tensor<double>(rng, {2, 2, 7, 5});
        const auto wt = random_vec(rng, conv.weight_count());
        const auto b = random_vec(rng, 3);
        Tensor4<double> out;
        conv.forward(in, wt, b, out);
        const std::vector<double> in_v(in.data().begin(), in.data().end());
        const auto ref = oracle::naive_conv(in_v, 2, 2, 7, 5, wt, b, 3, k);
        ASSERT_EQ(out.size(), ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(out.data()[i], ref[i], 1e-12);
    }
}

TEST(Conv2d, FloatMatchesNaiveConvolution) {
    Rng rng(2);
    const Conv2d<float> conv{1, 4, 3};
    const auto in = random_tensor<float>(rng, {1, 1, 16, 16});
    std::vector<float> wt(conv.weight_count()), b(4);
    for (auto& v : wt) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& v : b) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    Tensor4<float> out;
    conv.forward(in, wt, b, out);
    const std::vector<double> in_v(in.data().begin(), in.data().end());
    const auto ref = oracle::naive_conv(in_v, 1, 1, 16, 16, {wt.begin(), wt.end()}, {b.begin(), b.end()}, 4, 3);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(out.data()[i], ref[i], 1e-6);
}

TEST(Conv2d, IdentityKernelAndZeroWeights) {
    Rng rng(3);
    const Conv2d<double> conv{1, 1, 3};
    const auto in = random_tensor<double>(rng, {1, 1, 6, 6});
    std::vector<double> wt(9, 0.0), b{0.0};
    wt[4] = 1.0;
    Tensor4<double> out;
    conv.forward(in, wt, b, out);
    EXPECT_EQ(out, in);
    std::fill(wt.begin(), wt.end(), 0.0);
    conv.forward(in, wt, b, out);
    for (double v : out.data()) EXPECT_EQ(v, 0.0);
    EXPECT_THROW(conv.forward(in, std::vector<double>(8), b, out), DimensionError);
}

TEST(Conv2d, BackwardMatchesFiniteDifferences) {
    Rng rng(4);
    const Conv2d<double> conv{2, 2, 3};
    const auto in = random_tensor<double>(rng, {1, 2, 5, 4});
    auto wt = random_vec(rng, conv.weight_count());
    const auto b = random_vec(rng, 2);
    const auto g = random_tensor<double>(rng, {1, 2, 5, 4});
    auto objective = [&](const Tensor4<double>& x, const std::vector<double>& w) {
        Tensor4<double> out;
        conv.forward(x, w, b, out);
        return dot(out.data(), g.data());
    };
    Tensor4<double> din;
    conv.backward_input(g, wt, din);
    std::vector<double> dw(wt.size()), db(2);
    conv.backward_params(in, g, dw, db);
    const double h = 1e-4;
    for (std::size_t i = 0; i < in.size(); ++i) {
        auto p = in, m = in;
        p.data()[i] += h;
        m.data()[i] -= h;
        EXPECT_NEAR(din.data()[i], (objective(p, wt) - objective(m, wt)) / (2 * h), 1e-8);
    }
    for (std::size_t i = 0; i < wt.size(); ++i) {
        auto p = wt, m = wt;
        p[i] += h;
        m[i] -= h;
        EXPECT_NEAR(dw[i], (objective(in, p) - objective(in, m)) / (2 * h), 1e-8);
    }
    double gsum0 = 0.0;
    for (double v : g.plane(0, 0)) gsum0 += v;
    EXPECT_NEAR(db[0], gsum0, 1e-12);
}

TEST(InstanceNorm, ZeroMeanUnitVariance) {
    Rng rng(5);
    const InstanceNorm<double> norm{1e-5};
    const auto in = random_tensor<double>(rng, {2, 3, 8, 8}, -4.0, 9.0);
    const std::vector<double> scale(3, 1.0), shift(3, 0.0);
    Tensor4<double> out;
    InstanceNorm<double>::Cache cache;
    norm.forward(in, scale, shift, out, cache);
    for (std::size_t n = 0; n < 2; ++n) {
        for (std::size_t c = 0; c < 3; ++c) {
            double m = 0.0, v = 0.0;
            for (double x : out.plane(n, c)) m += x;
            m /= 64.0;
            for (double x : out.plane(n, c)) v += (x - m) * (x - m);
            v /= 64.0;
            EXPECT_NEAR(m, 0.0, 1e-12);
            EXPECT_NEAR(v, 1.0, 1e-4);
        }
    }
}

TEST(InstanceNorm, BackwardMatchesFiniteDifferences) {
    Rng rng(6);
    const InstanceNorm<double> norm{1e-5};
    const auto in = random_tensor<double>(rng, {1, 2, 4, 4});
    auto scale = random_vec(rng, 2);
    const auto shift = random_vec(rng, 2);
    const auto g = random_tensor<double>(rng, {1, 2, 4, 4});
    auto objective = [&](const Tensor4<double>& x, const std::vector<double>& s) {
        Tensor4<double> out;
        InstanceNorm<double>::Cache c;
        norm.forward(x, s, shift, out, c);
        return dot(out.data(), g.data());
    };
    Tensor4<double> out, din;
    InstanceNorm<double>::Cache cache;
    norm.forward(in, scale, shift, out, cache);
    std::vector<double> dscale(2), dshift(2);
    norm.backward(g, cache, scale, din, dscale, dshift);
    const double h = 1e-5;
    for (std::size_t i = 0; i < in.size(); ++i) {
        auto p = in, m = in;
        p.data()[i] += h;
        m.data()[i] -= h;
        EXPECT_NEAR(din.data()[i], (objective(p, scale) - objective(m, scale)) / (2 * h), 1e-6);
    }
    for (std::size_t c = 0; c < 2; ++c) {
        auto p = scale, m = scale;
        p[c] += h;
        m[c] -= h;
        EXPECT_NEAR(dscale[c], (objective(in, p) - objective(in, m)) / (2 * h), 1e-7);
    }
}

TEST(Swish, ValuesAndDerivative) {
    const std::vector<double> x{0.0, 1.0, -2.0, 30.0};
    std::vector<double> y(4), s(4);
    Swish<double>::forward(x, y, s);
    EXPECT_DOUBLE_EQ(y[0], 0.0);
    EXPECT_NEAR(y[1], 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
    EXPECT_NEAR(y[2], -2.0 / (1.0 + std::exp(2.0)), 1e-15);
    EXPECT_NEAR(y[3], 30.0, 1e-9);
    EXPECT_DOUBLE_EQ(Swish<double>::derivative(0.0, 0.5), 0.5);
    for (double v : {-3.0, -0.4, 0.7, 2.5}) {
        const double h = 1e-6;
        const double num = ((v + h) / (1 + std::exp(-(v + h))) - (v - h) / (1 + std::exp(-(v - h)))) / (2 * h);
        EXPECT_NEAR(Swish<double>::derivative(v, 1.0 / (1.0 + std::exp(-v))), num, 1e-8);
    }
}

TEST(Swish, FloatPathCloseToDouble) {
    Rng rng(7);
    std::vector<float> x(1000), y(1000), s(1000);
    for (auto& v : x) v = static_cast<float>(rng.uniform(-20.0, 20.0));
    Swish<float>::forward(x, y, s);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double ref = x[i] / (1.0 + std::exp(-static_cast<double>(x[i])));
        EXPECT_NEAR(y[i], ref, 1e-5 * std::max(1.0, std::abs(ref)));
    }
}

TEST(Cnn, OutputShapeFollowsInput) {
    CnnConfig cfg;
    cfg.in_channels = 2;
    cfg.hidden_channels = 4;
    CnnModel<float> model(cfg);
    model.init_uniform_fan_in(1);
    for (auto [h, w] : {std::pair<std::size_t, std::size_t>{8, 8}, {5, 11}, {1, 1}}) {
        Rng rng(h * 31 + w);
        const auto out = forward(model, random_tensor<float>(rng, {3, 2, h, w}));
        EXPECT_EQ(out.shape(), (Shape4{3, 1, h, w}));
        EXPECT_TRUE(out.all_finite());
    }
    Rng rng(0);
    EXPECT_THROW(forward(model, random_tensor<float>(rng, {1, 1, 4, 4})), DimensionError);
}

TEST(Cnn, FullModelGradientMatchesFiniteDifferences) {
    CnnConfig cfg;
    cfg.in_channels = 2;
    cfg.hidden_channels = 3;
    CnnModel<double> model(cfg);
    model.init_uniform_fan_in(9);
    Rng rng(9);
    for (auto& v : model.param(kNormScale)) v = rng.uniform(0.5, 1.5);
    for (auto& v : model.param(kNormShift)) v = rng.uniform(-0.5, 0.5);
    const auto in = random_tensor<double>(rng, {2, 2, 6, 5});
    const auto g = random_tensor<double>(rng, {2, 1, 6, 5});

    ForwardCache<double> cache;
    forward(model, in, &cache);
    Tensor4<double> din;
    const auto grads = backward(model, cache, g, &din);

    auto objective = [&](const CnnModel<double>& m, const Tensor4<double>& x) {
        return dot(forward(m, x).data(), g.data());
    };
    const double h = 1e-5;
    for (std::size_t p = 0; p < kParamCount; ++p) {
        for (std::size_t j = 0; j < model.params()[p].size(); ++j) {
            auto plus = model, minus = model;
            plus.params()[p][j] += h;
            minus.params()[p][j] -= h;
            const double num = (objective(plus, in) - objective(minus, in)) / (2 * h);
            EXPECT_NEAR(grads[p][j], num, 1e-6 * std::max(1.0, std::abs(num))) << kParamNames[p] << "[" << j << "]";
        }
    }
    for (std::size_t i = 0; i < in.size(); i += 7) {
        auto p = in, m = in;
        p.data()[i] += h;
        m.data()[i] -= h;
        const double num = (objective(model, p) - objective(model, m)) / (2 * h);
        EXPECT_NEAR(din.data()[i], num, 1e-6 * std::max(1.0, std::abs(num)));
    }
}

TEST(Cnn, InitIsSeededAndBounded) {
    CnnModel<float> a, b, c;
    a.init_uniform_fan_in(3);
    b.init_uniform_fan_in(3);
    c.init_uniform_fan_in(4);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    const double bound = 1.0 / 3.0;  // 1 input channel, 3x3 kernel
    for (float v : a.param(kConv1Weight)) EXPECT_LE(std::abs(v), bound);
    for (float v : a.param(kNormScale)) EXPECT_EQ(v, 1.0f);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
    CnnModel<float> model;
    model.init_uniform_fan_in(2);
    const auto before = model;
    Adam<float> opt(model, {});
    ParamArray<float> zeros;
    for (std::size_t i = 0; i < kParamCount; ++i) zeros[i].assign(model.params()[i].size(), 0.0f);
    for (int s = 0; s < 10; ++s) opt.step(model, zeros);
    EXPECT_EQ(model, before);
    EXPECT_EQ(opt.steps(), 10u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    CnnModel<double> model;
    Adam<double> opt(model, {});
    ParamArray<double> g;
    for (std::size_t i = 0; i < kParamCount; ++i) g[i].assign(model.params()[i].size(), -3.0);
    opt.step(model, g);
    // Bias-corrected first step is lr * sign(g) up to eps.
    EXPECT_NEAR(model.param(kConv2Bias)[0], 0.0002, 1e-10);
    EXPECT_NEAR(model.param(kNormScale)[0], 1.0002, 1e-10);
    EXPECT_THROW(Adam<double>(model, {0.0}), InvalidParameter);
}

TEST(Checkpoint, RoundTripIsExact) {
    CnnConfig cfg;
    cfg.hidden_channels = 5;
    cfg.in_channels = 2;
    CnnModel<float> model(cfg);
    model.init_uniform_fan_in(12);
    const auto bytes = encode_checkpoint(model);
    EXPECT_EQ(decode_checkpoint(bytes), model);
    EXPECT_EQ(encode_checkpoint(decode_checkpoint(bytes)), bytes);
    auto bad = bytes;
    bad.resize(bad.size() - 3);
    EXPECT_THROW(decode_checkpoint(bad), IoError);
}
