#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "atloss/data/windows.hpp"
#include "atloss_cli/checks.hpp"
#include "atloss_cli/config.hpp"
#include "atloss_cli/report.hpp"

namespace atloss::cli {

/// Training and evaluation windows; eval uses the training normalization.
struct PreparedData {
    data::WindowedDataset train;
    data::WindowedDataset eval;
    std::size_t refined_cells = 0;  ///< cells changed by Tukey refinement (training frames)
};

/// Raw (unrefined) frames for the training and evaluation sequences.
std::vector<GridField> training_frames(const ExperimentConfig& cfg);
std::vector<GridField> evaluation_frames(const ExperimentConfig& cfg);

/// Refines each frame; returns how many cells changed in total.
std::size_t refine_frames(std::vector<GridField>& frames, double k);

PreparedData prepare_data(const ExperimentConfig& cfg);

/// Pooled verification row for a set of forecasts against the eval targets.
metrics::MetricRow score_forecasts(const std::vector<std::vector<double>>& forecasts,
                                   const data::WindowedDataset& eval, double theta, double peak);

struct RunOutput {
    std::filesystem::path dir;
    ReportFormat format = ReportFormat::csv;
    std::ostream* log = nullptr;  ///< progress messages; may be null
};

int cmd_generate(const ExperimentConfig& cfg, const RunOutput& out);
int cmd_refine(const ExperimentConfig& cfg, const RunOutput& out);
int cmd_train(const ExperimentConfig& cfg, const RunOutput& out);
int cmd_consistency(const ExperimentConfig& cfg, const RunOutput& out);

/// Writes the check tables, prints failures; exit 0 or 1.
int emit_checks(const CheckResult& r, const std::string& label, const RunOutput& out);

/// Deterministic description of a run, written next to its tables.
std::string run_metadata_json(const ExperimentConfig& cfg, const std::string& command, const PreparedData* data);

} // namespace atloss::cli
