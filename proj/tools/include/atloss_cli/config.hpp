#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "atloss/data/noise.hpp"
#include "atloss/data/synthetic.hpp"
#include "atloss/train.hpp"

namespace atloss::cli {

/// Malformed config text, unknown key or out-of-range value.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DataConfig {
    std::string source;       ///< .atgs file; empty = generate synthetic frames
    std::string eval_source;  ///< .atgs file; empty = generate with eval_seed
    std::size_t height = 64;
    std::size_t width = 64;
    std::size_t windows = 500;
    std::size_t eval_windows = 100;
    std::uint64_t data_seed = 1;
    std::uint64_t eval_seed = 2;
    double dt_minutes = 10.0;
    bool refine = true;
    double tukey_k = 1.5;
    data::StormParams storm;
};

struct NoiseConfig {
    std::vector<data::NoiseKind> kinds{data::NoiseKind::salt_and_pepper, data::NoiseKind::random_valued_impulse};
    double fraction = 0.2;
    double min_fraction = 0.10;
    double max_fraction = 0.30;
};

struct ConsistencyConfig {
    std::vector<train::LossKind> losses{train::LossKind::at, train::LossKind::mae, train::LossKind::mse,
                                        train::LossKind::huber, train::LossKind::charbonnier};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    bool plots = false;
};

struct GradcheckConfig {
    std::size_t cases = 1000;
    double tolerance = 1e-6;
    double fd_step = 1e-5;         ///< multiplied by tau for each case
    double layer_tolerance = 1e-4;
    double layer_step = 1e-4;
    double error_floor = 1e-3;     ///< denominator floor of the relative error
};

struct LipschitzConfig {
    std::vector<double> taus{1.0, 0.8, 0.6, 0.3, 0.05};
    std::size_t points = 1000000;
    double half_width = 10.0;  ///< y grid spans theta +- half_width
    double slack = 1e-9;
    double zeta_tolerance = 1e-3;
};

struct PenaltyConfig {
    std::size_t k = 12;
    std::size_t instances = 3;
    double tau = 0.01;
    double margin = 0.5;  ///< saturated forecasts sit at theta +- margin
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    DataConfig data;
    train::TrainConfig train = default_train();
    data::NoiseKind train_noise = data::NoiseKind::random_valued_impulse;  ///< dirty track of `train`
    NoiseConfig noise;
    ConsistencyConfig consistency;
    GradcheckConfig gradcheck;
    LipschitzConfig lipschitz;
    PenaltyConfig penalty;

    static train::TrainConfig default_train() {
        train::TrainConfig t;
        t.schedule.total_epochs = t.epochs;
        return t;
    }

    /// Range and consistency checks that do not need any data.
    void validate() const;
    /// Train config for one track at `seed` (noise seeded from it).
    [[nodiscard]] train::TrainConfig track_config(train::LossKind loss, std::uint64_t seed, train::Track track,
                                                  data::NoiseKind kind) const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every key, in section order; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const ExperimentConfig& config);

} // namespace atloss::cli
