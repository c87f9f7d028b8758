#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "atloss/baselines.hpp"
#include "atloss/error.hpp"
#include "atloss/metrics.hpp"
#include "atloss/random.hpp"
#include "oracles.hpp"

using namespace atloss;
using namespace atloss::metrics;

namespace {

double single(BaselineKind kind, double d, double delta = 1.0, double eps = 1e-3) {
    const std::vector<double> x{0.0}, y{d};
    return baseline_loss(FieldView(1, 1, x), FieldView(1, 1, y), {kind, delta, eps}).value;
}

ContingencyTable table(std::size_t h, std::size_t m, std::size_t fa, std::size_t cn) {
    ContingencyTable t;
    t.hits = h;
    t.misses = m;
    t.false_alarms = fa;
    t.correct_negatives = cn;
    return t;
}

} // namespace

TEST(Baselines, PointValues) {
    EXPECT_DOUBLE_EQ(single(BaselineKind::mae, -1.5), 1.5);
    EXPECT_DOUBLE_EQ(single(BaselineKind::mse, -1.5), 2.25);
    EXPECT_DOUBLE_EQ(single(BaselineKind::huber, 2.0, 1.0), 1.5);
    EXPECT_DOUBLE_EQ(single(BaselineKind::huber, 0.5, 1.0), 0.125);
    EXPECT_NEAR(single(BaselineKind::charbonnier, 0.0, 1.0, 1e-3), 1e-3, 1e-18);
}

TEST(Baselines, HuberIsQuadraticInsideDelta) {
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        const double delta = rng.uniform(0.1, 3.0);
        const double d = rng.uniform(-delta, delta);
        EXPECT_NEAR(single(BaselineKind::huber, d, delta), 0.5 * d * d, 1e-14);
        const double far = delta + rng.uniform(0.0, 5.0);
        EXPECT_NEAR(single(BaselineKind::huber, far, delta), delta * (far - 0.5 * delta), 1e-12);
    }
}

TEST(Baselines, CharbonnierApproachesMaeAsEpsilonShrinks) {
    Rng rng(3);
    std::vector<double> x(25), y(25);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.uniform(0.0, 5.0);
        y[i] = rng.uniform(0.0, 5.0);
    }
    const FieldView xv(5, 5, x), yv(5, 5, y);
    const double mae = baseline_loss(xv, yv, {BaselineKind::mae}).value;
    double prev = INFINITY;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-6}) {
        const double c = baseline_loss(xv, yv, {BaselineKind::charbonnier, 1.0, eps}).value;
        EXPECT_GE(c, mae);
        EXPECT_LT(c - mae, prev);
        prev = c - mae;
    }
    EXPECT_LT(prev, 1e-5);
}

TEST(Baselines, GradientsMatchFiniteDifferences) {
    Rng rng(9);
    std::vector<double> x(12), y(12);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.uniform(0.0, 3.0);
        // keep every cell away from the MAE kink and the Huber seam
        y[i] = x[i] + (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.2, 0.8) * (i % 2 ? 1.0 : 3.0);
    }
    for (BaselineKind kind : {BaselineKind::mae, BaselineKind::mse, BaselineKind::huber, BaselineKind::charbonnier}) {
        const BaselineLossKind k{kind, 1.0, 0.05};
        const auto eval = baseline_loss(FieldView(3, 4, x), FieldView(3, 4, y), k);
        for (std::size_t i = 0; i < y.size(); ++i) {
            auto fn = [&](long double v) {
                auto yy = y;
                yy[i] = static_cast<double>(v);
                return static_cast<long double>(baseline_loss(FieldView(3, 4, x), FieldView(3, 4, yy), k).value);
            };
            const double numeric = static_cast<double>(oracle::central_difference(fn, y[i], 1e-6L));
            EXPECT_NEAR(eval.grad[i], numeric, 1e-8) << to_string(kind) << " cell " << i;
        }
    }
}

TEST(Baselines, ParseAndValidate) {
    for (BaselineKind kind : {BaselineKind::mae, BaselineKind::mse, BaselineKind::huber, BaselineKind::charbonnier}) {
        EXPECT_EQ(parse_baseline_kind(to_string(kind)), kind);
    }
    EXPECT_THROW(parse_baseline_kind("l3"), InvalidParameter);
    EXPECT_THROW((BaselineLossKind{BaselineKind::huber, 0.0, 1e-3}.validate()), InvalidParameter);
    EXPECT_THROW((BaselineLossKind{BaselineKind::charbonnier, 1.0, 0.0}.validate()), InvalidParameter);
}

TEST(Metrics, CategoricalScoresFromTable) {
    const auto t = table(2, 1, 1, 5);
    EXPECT_DOUBLE_EQ(csi(t).value(), 0.5);
    const auto s = pod_far_hss(t);
    EXPECT_DOUBLE_EQ(s.pod.value(), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(s.far.value(), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(s.hss.value(), 0.5);
    EXPECT_NEAR(s.hss.value(), oracle::hss_from_chance({2, 1, 1, 5}), 1e-15);
}

TEST(Metrics, HssMatchesChanceFormOnRandomFields) {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(64), y(64);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = rng.uniform(0.0, 4.0);
            y[i] = rng.uniform(0.0, 4.0);
        }
        const auto t = contingency(FieldView(8, 8, x), FieldView(8, 8, y), 2.0);
        const auto c = oracle::count_cells(x, y, 2.0);
        EXPECT_EQ(t.hits, static_cast<std::size_t>(c.hits));
        EXPECT_EQ(t.misses, static_cast<std::size_t>(c.misses));
        EXPECT_EQ(t.false_alarms, static_cast<std::size_t>(c.false_alarms));
        EXPECT_EQ(t.total(), 64u);
        EXPECT_NEAR(pod_far_hss(t).hss.value(), oracle::hss_from_chance(c), 1e-12);
    }
}

TEST(Metrics, AllDryIsUndefinedNotNaN) {
    const std::vector<double> dry(16, 0.5);
    const auto t = contingency(FieldView(4, 4, dry), FieldView(4, 4, dry), 2.0);
    EXPECT_EQ(t.correct_negatives, 16u);
    EXPECT_FALSE(csi(t).defined());
    const auto s = pod_far_hss(t);
    EXPECT_FALSE(s.pod.defined());
    EXPECT_FALSE(s.far.defined());
    EXPECT_FALSE(s.hss.defined());
    EXPECT_EQ(csi(t).to_string(), "undefined");
}

TEST(Metrics, ScoresStayInRange) {
    Rng rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        const auto t = table(rng.index(20), rng.index(20), rng.index(20), rng.index(20));
        const auto c = csi(t);
        if (c.defined()) {
            EXPECT_GE(c.value(), 0.0);
            EXPECT_LE(c.value(), 1.0);
        }
        const auto s = pod_far_hss(t);
        if (s.pod.defined()) EXPECT_LE(s.pod.value(), 1.0);
        if (s.far.defined()) EXPECT_LE(s.far.value(), 1.0);
        if (s.hss.defined()) {
            EXPECT_GE(s.hss.value(), -1.0);
            EXPECT_LE(s.hss.value(), 1.0);
        }
    }
}

TEST(Metrics, MaePsnr) {
    const std::vector<double> a(16, 3.0), b(16, 4.0);
    const auto s = mae_psnr(FieldView(4, 4, a), FieldView(4, 4, b), 100.0);
    EXPECT_DOUBLE_EQ(s.mae, 1.0);
    EXPECT_NEAR(s.psnr, 40.0, 1e-12);
    const auto same = mae_psnr(FieldView(4, 4, a), FieldView(4, 4, a), 100.0);
    EXPECT_DOUBLE_EQ(same.mae, 0.0);
    EXPECT_DOUBLE_EQ(same.psnr, 99.0);
    EXPECT_THROW(mae_psnr(FieldView(4, 4, a), FieldView(2, 8, b), 100.0), DimensionError);
}

TEST(Metrics, AccumulatorSkipsUndefined) {
    MetricAccumulator acc;
    acc.add(MetricValue(0.2));
    acc.add(MetricValue::undefined());
    acc.add(MetricValue(0.6));
    EXPECT_DOUBLE_EQ(acc.mean().value(), 0.4);
    EXPECT_EQ(acc.defined_count(), 2u);
    EXPECT_EQ(acc.excluded_count(), 1u);
    EXPECT_FALSE(MetricAccumulator{}.mean().defined());
}

TEST(Metrics, CsvRow) {
    EXPECT_EQ(MetricRow::csv_header(), "threshold,lead_time,csi,hss,pod,far,mae,psnr");
    const std::vector<double> dry(4, 0.0);
    const auto row = evaluate_field(FieldView(2, 2, dry), FieldView(2, 2, dry), 2.0, 10.0, 1.0);
    const std::string csv = row.to_csv();
    EXPECT_NE(csv.find("undefined"), std::string::npos);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), ','), 7);
}
