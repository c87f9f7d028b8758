#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include "atloss/data/grid_io.hpp"
#include "atloss/data/noise.hpp"
#include "atloss/data/normalization.hpp"
#include "atloss/data/synthetic.hpp"
#include "atloss/data/tukey.hpp"
#include "atloss/data/windows.hpp"
#include "atloss/error.hpp"
#include "atloss/random.hpp"
#include "oracles.hpp"

using namespace atloss;
using namespace atloss::data;

namespace {

GridField random_field(Rng& rng, std::size_t h, std::size_t w, double hi) {
    std::vector<double> v(h * w);
    for (auto& x : v) x = rng.uniform(0.0, hi);
    return GridField(h, w, std::move(v));
}

std::vector<GridField> ramp_sequence(std::size_t steps) {
    std::vector<GridField> out;
    for (std::size_t s = 0; s < steps; ++s) out.emplace_back(2, 2, std::vector<double>(4, static_cast<double>(s)));
    return out;
}

} // namespace

TEST(GridField, RejectsNegativeAndNonFinite) {
    EXPECT_THROW(GridField(2, 2, {1.0, -0.1, 0.0, 0.0}), InvalidInput);
    EXPECT_THROW(GridField(1, 1, {NAN}), InvalidInput);
    EXPECT_THROW(GridField(2, 2, {1.0}), DimensionError);
    EXPECT_THROW(GridField(0, 3), DimensionError);
    GridField f(2, 2);
    EXPECT_THROW(f.set(0, 0, -1.0), InvalidInput);
    f.set(1, 0, 2.5);
    EXPECT_EQ(f.at(1, 0), 2.5);
}

TEST(Windows, CountAndOverlap) {
    const auto ds = build_windows(ramp_sequence(20));
    EXPECT_EQ(ds.size(), 15u);
    EXPECT_EQ(ds.window_length(), 6u);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto w = ds.window(i);
        ASSERT_EQ(w.size(), 6u);
        for (std::size_t j = 0; j < w.size(); ++j) EXPECT_EQ(w[j].at(0, 0), static_cast<double>(i + j));
    }
    EXPECT_THROW((void)ds.window(15), InvalidInput);
    EXPECT_THROW(build_windows(ramp_sequence(5)), InvalidInput);
    EXPECT_EQ(build_windows(ramp_sequence(6)).size(), 1u);
}

TEST(Windows, NormalizationCoversFullSequence) {
    const auto ds = build_windows(ramp_sequence(10));
    EXPECT_EQ(ds.norm().physical_min, 0.0);
    EXPECT_EQ(ds.norm().physical_max, 9.0);
    const NormalizationSpec other{0.0, 20.0};
    EXPECT_EQ(ds.with_norm(other).norm(), other);
}

TEST(Normalization, RoundTripAndRange) {
    Rng rng(7);
    const NormalizationSpec spec{0.0, 37.5};
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(0.0, 37.5);
        const double n = spec.normalize(v);
        EXPECT_GE(n, -1.0);
        EXPECT_LE(n, 1.0);
        EXPECT_NEAR(spec.denormalize(n), v, 1e-12);
    }
    EXPECT_EQ(spec.normalize(0.0), -1.0);
    EXPECT_EQ(spec.normalize(37.5), 1.0);
    EXPECT_THROW((NormalizationSpec{1.0, 1.0}.validate()), InvalidParameter);
    const std::vector<GridField> dry{GridField(2, 2)};
    EXPECT_EQ(NormalizationSpec::from_sequence(dry, 5.0).physical_max, 5.0);
}

TEST(Tukey, QuantileMatchesSortOracle) {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(1 + rng.index(200));
        for (auto& x : v) x = rng.uniform(-3.0, 10.0);
        for (double q : {0.0, 0.1, 0.25, 0.5, 0.75, 1.0}) {
            EXPECT_DOUBLE_EQ(quantile(v, q), oracle::quantile_sorted(v, q));
        }
    }
}

TEST(Tukey, FencesFromQuartiles) {
    const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9};
    const auto f = tukey_fences(v, 1.5);
    EXPECT_DOUBLE_EQ(f.lower, 3.0 - 1.5 * 4.0);
    EXPECT_DOUBLE_EQ(f.upper, 7.0 + 1.5 * 4.0);
    EXPECT_TRUE(f.contains(13.0));
    EXPECT_FALSE(f.contains(13.01));
}

TEST(Tukey, SpikeReplacedByNeighbourMean) {
    std::vector<double> v(25, 1.0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 5);
    v[12] = 500.0;
    const GridField f(5, 5, v);
    const GridField r = tukey_refine(f);
    double mean = 0.0;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
            if (dy || dx) mean += f.at(2 + dy, 2 + dx);
    EXPECT_NEAR(r.at(2, 2), mean / 8.0, 1e-12);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i != 12) EXPECT_EQ(r.values()[i], v[i]);
    }
}

TEST(Tukey, ResultInsideOwnFencesAndIdempotent) {
    Rng rng(10);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> v(256);
        for (auto& x : v) x = rng.uniform(0.0, 4.0);
        for (int s = 0; s < 8; ++s) v[rng.index(v.size())] = rng.uniform(50.0, 200.0);
        const GridField f(16, 16, v);
        const GridField once = tukey_refine(f);
        const auto fences = tukey_fences(once.values());
        for (double x : once.values()) EXPECT_TRUE(fences.contains(x));
        EXPECT_EQ(tukey_refine(once), once);
        EXPECT_LT(*std::max_element(once.values().begin(), once.values().end()), 50.0);
    }
}

TEST(Tukey, ConstantFieldUnchanged) {
    const GridField f(4, 4, std::vector<double>(16, 3.0));
    EXPECT_EQ(tukey_refine(f), f);
    EXPECT_THROW(tukey_refine(f, 0.0), InvalidParameter);
}

TEST(Noise, CorruptsExactlyRoundedFraction) {
    Rng rng(12);
    const GridField f = random_field(rng, 16, 16, 5.0);
    for (double frac : {0.1, 0.2, 0.3}) {
        for (NoiseKind kind : {NoiseKind::salt_and_pepper, NoiseKind::random_valued_impulse}) {
            NoiseSpec spec;
            spec.kind = kind;
            spec.fraction = frac;
            spec.seed = 3;
            spec.value_max = 40.0;
            const auto cells = select_noise_cells(f.size(), spec);
            EXPECT_EQ(cells.size(), corrupted_count(256, frac));
            EXPECT_EQ(cells.size(), static_cast<std::size_t>(std::lround(frac * 256)));
            EXPECT_EQ(std::set<std::size_t>(cells.begin(), cells.end()).size(), cells.size());

            const GridField g = inject_noise(f, spec);
            const std::set<std::size_t> chosen(cells.begin(), cells.end());
            for (std::size_t i = 0; i < f.size(); ++i) {
                const double v = g.values()[i];
                if (!chosen.count(i)) {
                    EXPECT_EQ(v, f.values()[i]);
                } else if (kind == NoiseKind::salt_and_pepper) {
                    EXPECT_TRUE(v == 0.0 || v == 40.0);
                } else {
                    EXPECT_GE(v, 0.0);
                    EXPECT_LE(v, 40.0);
                }
            }
        }
    }
}

TEST(Noise, DeterministicAndSeedSensitive) {
    Rng rng(13);
    const GridField f = random_field(rng, 8, 8, 5.0);
    NoiseSpec spec;
    spec.seed = 77;
    EXPECT_EQ(inject_noise(f, spec), inject_noise(f, spec));
    NoiseSpec other = spec;
    other.seed = 78;
    EXPECT_NE(inject_noise(f, spec), inject_noise(f, other));
}

TEST(Noise, FractionOutsideBoundsRejected) {
    NoiseSpec spec;
    spec.fraction = 0.35;
    EXPECT_THROW(spec.validate(), InvalidParameter);
    spec.fraction = 0.05;
    EXPECT_THROW(spec.validate(), InvalidParameter);
    spec.min_fraction = 0.0;
    spec.fraction = 0.0;
    EXPECT_NO_THROW(spec.validate());
    EXPECT_EQ(parse_noise_kind("random_valued_impulse"), NoiseKind::random_valued_impulse);
    EXPECT_THROW(parse_noise_kind("gaussian"), InvalidParameter);
}

TEST(Synthetic, DeterministicNonNegativeAndWet) {
    StormParams p;
    const auto a = generate_synthetic_sequence(32, 32, 20, p, 5);
    const auto b = generate_synthetic_sequence(32, 32, 20, p, 5);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, generate_synthetic_sequence(32, 32, 20, p, 6));
    std::size_t wet = 0, cells = 0;
    for (const auto& f : a) {
        for (double v : f.values()) {
            EXPECT_GE(v, 0.0);
            wet += v >= 2.0;
            ++cells;
        }
    }
    EXPECT_GT(wet, 0u);
    EXPECT_LT(wet, cells);
}

TEST(GridIo, EncodeDecodeBitExact) {
    Rng rng(14);
    std::vector<GridField> frames;
    for (int s = 0; s < 3; ++s) {
        std::vector<double> v(12);
        for (auto& x : v) x = static_cast<double>(static_cast<float>(rng.uniform(0.0, 30.0)));
        frames.emplace_back(3, 4, std::move(v));
    }
    const auto bytes = encode_grid_sequence(frames);
    EXPECT_EQ(bytes.size(), 20u + 3u * 12u * 4u);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "ATGS");
    EXPECT_EQ(decode_grid_sequence(bytes), frames);
    EXPECT_EQ(encode_grid_sequence(decode_grid_sequence(bytes)), bytes);

    const auto path = std::filesystem::temp_directory_path() / "atloss_test_grid.atgs";
    write_grid_sequence(path, frames);
    EXPECT_EQ(read_grid_sequence(path), frames);
    std::filesystem::remove(path);

    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_grid_sequence(bad), IoError);
    bad = bytes;
    bad.pop_back();
    EXPECT_THROW(decode_grid_sequence(bad), IoError);
}

TEST(GridIo, CsvExport) {
    const std::vector<GridField> frames{GridField(1, 2, {0.5, 3.0})};
    const std::string csv = export_csv(frames);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,row,col,value");
    EXPECT_NE(csv.find("0,0,1,3"), std::string::npos);
}
