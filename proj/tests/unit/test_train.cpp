#include <gtest/gtest.h>

#include <vector>

#include "atloss/data/synthetic.hpp"
#include "atloss/data/windows.hpp"
#include "atloss/error.hpp"
#include "atloss/train.hpp"

using namespace atloss::train;
namespace data = atloss::data;
using atloss::anneal_tau;
using atloss::InvalidParameter;

namespace {

data::WindowedDataset small_dataset(std::uint64_t seed, std::size_t steps = 40) {
    data::StormParams storm;
    storm.cells = 3;
    storm.clutter_fraction = 0.0;
    return data::build_windows(data::generate_synthetic_sequence(16, 16, steps, storm, seed));
}

TrainConfig small_config(LossKind loss, int epochs) {
    TrainConfig c;
    c.loss = loss;
    c.epochs = epochs;
    c.schedule.total_epochs = std::max(epochs, 1);
    c.batch_size = 8;
    c.hidden_channels = 4;
    c.adam.lr = 0.01;
    c.seed = 5;
    return c;
}

} // namespace

TEST(Train, ZeroEpochsReturnsInitialModel) {
    const auto ds = small_dataset(1);
    const auto cfg = small_config(LossKind::at, 0);
    const auto r = train(cfg, ds);
    EXPECT_EQ(r.model, initial_model(cfg));
    EXPECT_TRUE(r.log.empty());
}

TEST(Train, BitIdenticalAcrossRuns) {
    const auto ds = small_dataset(2);
    for (LossKind loss : {LossKind::at, LossKind::mse}) {
        const auto cfg = small_config(loss, 3);
        const auto a = train(cfg, ds, &ds);
        const auto b = train(cfg, ds, &ds);
        EXPECT_EQ(a.model, b.model);
        EXPECT_EQ(metric_log_csv(a.log), metric_log_csv(b.log));
    }
}

TEST(Train, AtLossDecreasesOnSeparableData) {
    // Stationary storms: the next frame equals the current one, so the
    // event mask is exactly recoverable from the input.
    data::StormParams storm;
    storm.cells = 3;
    storm.velocity_row = storm.velocity_col = 0.0;
    storm.jitter = 0.0;
    storm.lifetime = 0;
    storm.dry_probability = 0.0;
    storm.clutter_fraction = 0.0;
    storm.background = 0.3;
    const auto ds = data::build_windows(data::generate_synthetic_sequence(16, 16, 40, storm, 3));
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.schedule.total_epochs = 30;
    cfg.batch_size = 8;
    cfg.hidden_channels = 4;
    cfg.seed = 5;
    const auto r = train(cfg, ds);
    ASSERT_EQ(r.log.size(), 30u);
    int decreasing = 0;
    for (std::size_t e = 1; e < r.log.size(); ++e) decreasing += r.log[e].train_loss < r.log[e - 1].train_loss;
    EXPECT_GE(decreasing * 10, 29 * 8);
    EXPECT_LT(r.log.back().train_loss, r.log.front().train_loss);
}

TEST(Train, TauFollowsScheduleAndBaselinesHaveNone) {
    const auto ds = small_dataset(4);
    auto cfg = small_config(LossKind::at, 4);
    cfg.schedule.total_epochs = 4;
    const auto r = train(cfg, ds);
    for (const auto& e : r.log) EXPECT_DOUBLE_EQ(*e.tau, anneal_tau(cfg.schedule, e.epoch));
    const auto m = train(small_config(LossKind::mae, 2), ds);
    for (const auto& e : m.log) EXPECT_FALSE(e.tau.has_value());
    EXPECT_EQ(metric_log_csv(m.log).substr(0, 45), "epoch,tau,train_loss,val_csi,val_hss,val_pod,");
}

TEST(Train, ZeroNoiseDirtyTrackMatchesClean) {
    const auto ds = small_dataset(5);
    const auto clean = small_config(LossKind::at, 2);
    auto dirty = clean;
    dirty.track = Track::dirty;
    data::NoiseSpec noise;
    noise.fraction = 0.0;
    noise.min_fraction = 0.0;
    noise.value_max = ds.norm().physical_max;
    dirty.noise = noise;
    const auto r = consistency_experiment(clean, dirty, ds, ds);
    EXPECT_EQ(r.clean.model, r.dirty.model);
    EXPECT_DOUBLE_EQ(r.mae, 0.0);
    EXPECT_DOUBLE_EQ(r.psnr, 99.0);
}

TEST(Train, ForecastsAreNonNegative) {
    const auto ds = small_dataset(6);
    const auto r = train(small_config(LossKind::mse, 2), ds);
    const auto fc = predict(r.model, ds, ds.norm(), 1);
    ASSERT_EQ(fc.size(), ds.size());
    for (const auto& f : fc) {
        ASSERT_EQ(f.size(), 256u);
        for (double v : f) EXPECT_GE(v, 0.0);
    }
}

TEST(Train, ConfigValidation) {
    auto cfg = small_config(LossKind::at, 1);
    cfg.track = Track::dirty;
    EXPECT_THROW(cfg.validate(), InvalidParameter);
    cfg = small_config(LossKind::at, 1);
    cfg.noise = data::NoiseSpec{};
    EXPECT_THROW(cfg.validate(), InvalidParameter);
    cfg = small_config(LossKind::at, 1);
    cfg.input_frames = 6;
    EXPECT_THROW(cfg.validate(), InvalidParameter);
    cfg = small_config(LossKind::at, 1);
    auto other = cfg;
    other.seed = 6;
    EXPECT_FALSE(cfg.same_except_track(other));
    const auto ds = small_dataset(7);
    other.track = Track::dirty;
    other.noise = data::NoiseSpec{};
    EXPECT_THROW(consistency_experiment(cfg, other, ds, ds), InvalidParameter);
    EXPECT_EQ(parse_loss_kind("charbonnier"), LossKind::charbonnier);
    EXPECT_THROW(parse_track("noisy"), InvalidParameter);
}
