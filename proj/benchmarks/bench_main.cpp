#include <benchmark/benchmark.h>

#include <vector>

#include "atloss/baselines.hpp"
#include "atloss/data/synthetic.hpp"
#include "atloss/data/tukey.hpp"
#include "atloss/loss_core.hpp"
#include "atloss/nn/cnn.hpp"
#include "atloss/random.hpp"

using namespace atloss;

namespace {

std::vector<double> uniform_values(std::size_t n, double lo, double hi, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

} // namespace

static void BM_AtLoss(benchmark::State& state) {
    const auto side = static_cast<std::size_t>(state.range(0));
    const auto x = uniform_values(side * side, 0.0, 8.0, 1);
    const auto y = uniform_values(side * side, 0.0, 8.0, 2);
    std::vector<double> grad(x.size());
    AtLossParams p;
    p.tau = 0.3;
    p.deterministic = state.range(1) == 0;
    std::uint64_t step = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(at_loss_into(FieldView(side, side, x), FieldView(side, side, y), p, step++, grad));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_AtLoss)->ArgsProduct({{64, 256}, {0, 1}});

static void BM_MseLoss(benchmark::State& state) {
    const auto side = static_cast<std::size_t>(state.range(0));
    const auto x = uniform_values(side * side, 0.0, 8.0, 1);
    const auto y = uniform_values(side * side, 0.0, 8.0, 2);
    std::vector<double> grad(x.size());
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            baseline_loss_into(FieldView(side, side, x), FieldView(side, side, y), {BaselineKind::mse}, grad));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_MseLoss)->Arg(64)->Arg(256);

// One training batch: 16 samples of 64x64, 16 hidden channels.
static void BM_CnnForwardBackward(benchmark::State& state) {
    nn::CnnModel<float> model;
    model.init_uniform_fan_in(3);
    const auto batch = static_cast<std::size_t>(state.range(0));
    nn::Tensor4<float> in(batch, 1, 64, 64), up(batch, 1, 64, 64);
    Rng rng(4);
    for (auto& v : in.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& v : up.data()) v = static_cast<float>(rng.uniform(-1e-3, 1e-3));
    nn::ForwardCache<float> cache;
    for (auto _ : state) {
        auto out = nn::forward(model, in, &cache);
        benchmark::DoNotOptimize(out.data().data());
        auto grads = nn::backward(model, cache, up);
        benchmark::DoNotOptimize(grads[0].data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_CnnForwardBackward)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_CnnForward(benchmark::State& state) {
    nn::CnnModel<float> model;
    model.init_uniform_fan_in(3);
    nn::Tensor4<float> in(16, 1, 64, 64);
    Rng rng(5);
    for (auto& v : in.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto _ : state) benchmark::DoNotOptimize(nn::forward(model, in).data().data());
}
BENCHMARK(BM_CnnForward)->Unit(benchmark::kMillisecond);

static void BM_TukeyRefine(benchmark::State& state) {
    const auto side = static_cast<std::size_t>(state.range(0));
    data::StormParams storm;
    storm.clutter_fraction = 0.01;
    const auto frames = data::generate_synthetic_sequence(side, side, 1, storm, 6);
    for (auto _ : state) benchmark::DoNotOptimize(data::tukey_refine(frames.front()));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(side * side));
}
BENCHMARK(BM_TukeyRefine)->Arg(64)->Arg(256);

static void BM_SyntheticFrames(benchmark::State& state) {
    const data::StormParams storm;
    for (auto _ : state) benchmark::DoNotOptimize(data::generate_synthetic_sequence(64, 64, 16, storm, 7));
}
BENCHMARK(BM_SyntheticFrames)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
