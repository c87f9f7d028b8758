#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atloss/baselines.hpp"
#include "atloss/data/noise.hpp"
#include "atloss/data/windows.hpp"
#include "atloss/loss_core.hpp"
#include "atloss/metrics.hpp"
#include "atloss/nn/adam.hpp"
#include "atloss/nn/cnn.hpp"

namespace atloss::train {

enum class LossKind { at, mae, mse, huber, charbonnier };
enum class Track { clean, dirty };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view s);
std::string_view to_string(Track track);
Track parse_track(std::string_view s);

/// Baseline settings for a non-AT loss kind.
BaselineLossKind baseline_for(LossKind kind, double huber_delta, double charbonnier_epsilon);

struct TrainConfig {
    LossKind loss = LossKind::at;
    AtLossParams at;                ///< tau is overridden each epoch by `schedule`
    double huber_delta = 1.0;
    double charbonnier_epsilon = 1e-3;
    AnnealSchedule schedule;
    int epochs = 30;
    std::size_t batch_size = 16;
    nn::AdamConfig adam;
    std::uint64_t seed = 0;
    Track track = Track::clean;
    std::optional<data::NoiseSpec> noise;  ///< required on the dirty track, forbidden on the clean one
    std::size_t input_frames = 1;          ///< frames preceding the target, latest last
    std::size_t hidden_channels = 16;

    void validate() const;
    /// True when the two configs agree on everything except track and noise.
    [[nodiscard]] bool same_except_track(const TrainConfig& other) const;
};

struct EpochLog {
    int epoch = 0;
    std::optional<double> tau;  ///< only for the AT loss
    double train_loss = 0.0;
    metrics::MetricValue val_csi;
    metrics::MetricValue val_hss;
    metrics::MetricValue val_pod;
    metrics::MetricValue val_far;
};

struct TrainResult {
    nn::CnnModel<float> model;
    std::vector<EpochLog> log;
};

inline constexpr std::string_view kInitScheme = "uniform_fan_in";

/// Freshly initialised model for `config` (what train() starts from).
nn::CnnModel<float> initial_model(const TrainConfig& config);

/// One-step forecasting: the last `input_frames` frames before the window's
/// final step are the input, the final step is the target. AT loss is
/// evaluated on denormalized (mm/h) predictions, baselines on normalized
/// values. Validation inputs are normalized with the training set's spec.
/// Throws NonFiniteLoss if a batch loss is NaN or Inf.
TrainResult train(const TrainConfig& config, const data::WindowedDataset& dataset,
                  const data::WindowedDataset* validation = nullptr);

/// Physical-unit forecasts of every window's final step, window-major,
/// floored at 0 mm/h.
std::vector<std::vector<double>> predict(const nn::CnnModel<float>& model, const data::WindowedDataset& eval_set,
                                         const data::NormalizationSpec& norm, std::size_t input_frames);

/// MAE / PSNR between two sets of forecasts pooled over all fields.
metrics::ContinuousScores compare_forecasts(const std::vector<std::vector<double>>& a,
                                            const std::vector<std::vector<double>>& b, double peak);

struct ConsistencyResult {
    double mae = 0.0;
    double psnr = 0.0;
    TrainResult clean;
    TrainResult dirty;
};

/// Trains both tracks and compares their forecasts on the clean evaluation
/// inputs. PSNR peak is the training data range in mm/h.
ConsistencyResult consistency_experiment(const TrainConfig& clean, const TrainConfig& dirty,
                                         const data::WindowedDataset& dataset, const data::WindowedDataset& eval_set);

/// epoch,tau,train_loss,val_csi,val_hss,val_pod,val_far
std::string metric_log_csv(const std::vector<EpochLog>& log);

} // namespace atloss::train
