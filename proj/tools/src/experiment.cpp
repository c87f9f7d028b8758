#include "atloss_cli/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "atloss/data/grid_io.hpp"
#include "atloss/data/synthetic.hpp"
#include "atloss/data/tukey.hpp"
#include "atloss/error.hpp"
#include "atloss/format.hpp"
#include "atloss/nn/checkpoint.hpp"
#include "atloss/train.hpp"

#ifndef ATLOSS_VERSION
#define ATLOSS_VERSION "unknown"
#endif

namespace atloss::cli {

namespace {

void say(const RunOutput& out, const std::string& msg) {
    if (out.log) *out.log << msg << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fixed1(double v) {
    const long tenths = std::lround(v * 10.0);
    return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

std::vector<GridField> frames_from(const std::string& source, std::size_t windows, std::uint64_t seed,
                                   const ExperimentConfig& cfg) {
    if (!source.empty()) return data::read_grid_sequence(source);
    return data::generate_synthetic_sequence(cfg.data.height, cfg.data.width, windows + data::kWindowLength - 1,
                                             cfg.data.storm, seed);
}

Table epoch_table(const std::vector<train::EpochLog>& log) {
    Table t({"epoch", "tau", "train_loss", "val_csi", "val_hss", "val_pod", "val_far"});
    for (const auto& e : log) {
        t.add_row({static_cast<std::int64_t>(e.epoch), e.tau ? Cell(*e.tau) : Cell(std::string("n/a")), e.train_loss,
                   cell(e.val_csi), cell(e.val_hss), cell(e.val_pod), cell(e.val_far)});
    }
    return t;
}

std::vector<Cell> metric_cells(const metrics::MetricRow& r) {
    return {r.threshold, r.lead_time, cell(r.csi), cell(r.hss), cell(r.pod), cell(r.far), r.mae, r.psnr};
}

const std::vector<std::string> kMetricColumns = {"threshold", "lead_time", "csi", "hss", "pod", "far", "mae", "psnr"};

std::vector<std::string> with_metric_columns(std::vector<std::string> lead) {
    lead.insert(lead.end(), kMetricColumns.begin(), kMetricColumns.end());
    return lead;
}

struct FieldStats {
    double max = 0.0;
    double mean = 0.0;
    double wet_fraction = 0.0;
    std::size_t dry_fields = 0;
};

FieldStats field_stats(const std::vector<GridField>& frames, double theta) {
    FieldStats s;
    double sum = 0.0;
    std::size_t n = 0, wet = 0;
    for (const auto& f : frames) {
        std::size_t wet_here = 0;
        for (double v : f.values()) {
            s.max = std::max(s.max, v);
            sum += v;
            wet_here += static_cast<std::size_t>(v >= theta);
        }
        n += f.size();
        wet += wet_here;
        s.dry_fields += static_cast<std::size_t>(wet_here == 0);
    }
    if (n) {
        s.mean = sum / static_cast<double>(n);
        s.wet_fraction = static_cast<double>(wet) / static_cast<double>(n);
    }
    return s;
}

void write_plot(const std::filesystem::path& path, const std::vector<double>& field, std::size_t h, std::size_t w,
                double theta, double peak) {
    write_file_atomic(path, render_ppm(FieldView(h, w, field), theta, peak));
}

} // namespace

std::vector<GridField> training_frames(const ExperimentConfig& cfg) {
    return frames_from(cfg.data.source, cfg.data.windows, cfg.data.data_seed, cfg);
}

std::vector<GridField> evaluation_frames(const ExperimentConfig& cfg) {
    return frames_from(cfg.data.eval_source, cfg.data.eval_windows, cfg.data.eval_seed, cfg);
}

std::size_t refine_frames(std::vector<GridField>& frames, double k) {
    std::size_t changed = 0;
    for (auto& f : frames) {
        GridField refined = data::tukey_refine(f, k);
        for (std::size_t i = 0; i < f.size(); ++i) changed += static_cast<std::size_t>(refined.values()[i] != f.values()[i]);
        f = std::move(refined);
    }
    return changed;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
    auto frames = training_frames(cfg);
    auto eval_frames = evaluation_frames(cfg);
    std::size_t changed = 0;
    if (cfg.data.refine) {
        changed = refine_frames(frames, cfg.data.tukey_k);
        refine_frames(eval_frames, cfg.data.tukey_k);
    }
    auto train_set = data::build_windows(std::move(frames), data::kWindowLength, cfg.data.dt_minutes);
    auto eval_set = data::build_windows(std::move(eval_frames), data::kWindowLength, cfg.data.dt_minutes)
                        .with_norm(train_set.norm());
    if (eval_set.height() != train_set.height() || eval_set.width() != train_set.width()) {
        throw DimensionError("evaluation frames differ in size from training frames");
    }
    return {std::move(train_set), std::move(eval_set), changed};
}

metrics::MetricRow score_forecasts(const std::vector<std::vector<double>>& forecasts,
                                   const data::WindowedDataset& eval, double theta, double peak) {
    if (forecasts.size() != eval.size()) throw DimensionError("one forecast per evaluation window expected");
    metrics::MetricAccumulator csi, hss, pod, far;
    std::vector<double> truth_all, fc_all;
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        const GridField& truth = eval.window(i).back();
        const FieldView fc(truth.height(), truth.width(), forecasts[i]);
        const auto table = metrics::contingency(truth, fc, theta);
        const auto s = metrics::pod_far_hss(table);
        csi.add(metrics::csi(table));
        hss.add(s.hss);
        pod.add(s.pod);
        far.add(s.far);
        truth_all.insert(truth_all.end(), truth.values().begin(), truth.values().end());
        fc_all.insert(fc_all.end(), forecasts[i].begin(), forecasts[i].end());
    }
    const auto c = metrics::mae_psnr(FieldView(1, truth_all.size(), truth_all), FieldView(1, fc_all.size(), fc_all),
                                     peak);
    metrics::MetricRow row;
    row.threshold = theta;
    row.lead_time = eval.dt_minutes();
    row.csi = csi.mean();
    row.hss = hss.mean();
    row.pod = pod.mean();
    row.far = far.mean();
    row.mae = c.mae;
    row.psnr = c.psnr;
    return row;
}

std::string run_metadata_json(const ExperimentConfig& cfg, const std::string& command, const PreparedData* data) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = ATLOSS_VERSION;
    j["seed"] = cfg.seed;
    j["init_scheme"] = std::string(train::kInitScheme);
    j["loss_domain"] = {{"at", "denormalized mm/h"}, {"baselines", "normalized [-1, 1]"}};
    j["input"] = "last " + std::to_string(cfg.train.input_frames) + " frame(s) before the target";
    j["target"] = "window step " + std::to_string(data::kWindowLength);
    j["forecast_floor_mm_per_h"] = 0.0;
    if (data) {
        const auto& norm = data->train.norm();
        j["normalization"] = {{"physical_min", norm.physical_min}, {"physical_max", norm.physical_max}};
        j["psnr_peak"] = norm.range();
        j["psnr_peak_source"] = "training data range (mm/h)";
        j["train_windows"] = data->train.size();
        j["eval_windows"] = data->eval.size();
        j["refined_cells"] = data->refined_cells;
    }
    j["config"] = serialize_config(cfg);
    return j.dump(2) + "\n";
}

int emit_checks(const CheckResult& r, const std::string& label, const RunOutput& out) {
    for (const auto& [name, table] : r.tables) {
        const auto path = write_table(out.dir, name, table, out.format);
        say(out, "[" + label + "] wrote " + path.string());
    }
    for (const auto& f : r.failures) say(out, "[" + label + "] FAIL " + f);
    say(out, "[" + label + "] " + (r.passed() ? "all checks passed" : std::to_string(r.failures.size()) + " failure(s)"));
    return r.passed() ? 0 : 1;
}

int cmd_generate(const ExperimentConfig& cfg, const RunOutput& out) {
    const auto train_frames = training_frames(cfg);
    const auto eval_frames = evaluation_frames(cfg);
    data::write_grid_sequence(out.dir / "train_frames.atgs", train_frames);
    data::write_grid_sequence(out.dir / "eval_frames.atgs", eval_frames);
    Table t({"set", "steps", "height", "width", "max", "mean", "wet_fraction", "dry_fields"});
    const double theta = cfg.train.at.theta;
    for (const auto& [name, frames] : {std::pair<std::string, const std::vector<GridField>*>{"train", &train_frames},
                                       {"eval", &eval_frames}}) {
        const FieldStats s = field_stats(*frames, theta);
        t.add_row({name, static_cast<std::uint64_t>(frames->size()), static_cast<std::uint64_t>(frames->front().height()),
                   static_cast<std::uint64_t>(frames->front().width()), s.max, s.mean, s.wet_fraction,
                   static_cast<std::uint64_t>(s.dry_fields)});
    }
    write_table(out.dir, "dataset_summary", t, out.format);
    say(out, "[generate] wrote " + (out.dir / "train_frames.atgs").string() + " and " +
                 (out.dir / "eval_frames.atgs").string());
    return 0;
}

int cmd_refine(const ExperimentConfig& cfg, const RunOutput& out) {
    if (cfg.data.source.empty()) throw ConfigError("refine needs data.source pointing at an .atgs file");
    auto frames = data::read_grid_sequence(cfg.data.source);
    const FieldStats before = field_stats(frames, cfg.train.at.theta);
    const std::size_t changed = refine_frames(frames, cfg.data.tukey_k);
    const FieldStats after = field_stats(frames, cfg.train.at.theta);
    data::write_grid_sequence(out.dir / "refined_frames.atgs", frames);
    std::size_t cells = 0;
    for (const auto& f : frames) cells += f.size();
    Table t({"frames", "cells", "changed_cells", "max_before", "max_after", "mean_before", "mean_after"});
    t.add_row({static_cast<std::uint64_t>(frames.size()), static_cast<std::uint64_t>(cells),
               static_cast<std::uint64_t>(changed), before.max, after.max, before.mean, after.mean});
    write_table(out.dir, "refine_summary", t, out.format);
    say(out, "[refine] " + std::to_string(changed) + " of " + std::to_string(cells) + " cells replaced");
    return 0;
}

int cmd_train(const ExperimentConfig& cfg, const RunOutput& out) {
    const PreparedData data = prepare_data(cfg);
    const auto tc = cfg.track_config(cfg.train.loss, cfg.seed, cfg.train.track, cfg.train_noise);
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = train::train(tc, data.train, &data.eval);
    say(out, "[train] " + std::string(train::to_string(tc.loss)) + " " + std::string(train::to_string(tc.track)) +
                 " finished in " + fixed1(seconds_since(t0)) + " s");
    nn::save_checkpoint(out.dir / "model.atck", result.model);
    write_table(out.dir, "metrics", epoch_table(result.log), out.format);

    const auto& norm = data.train.norm();
    const auto forecasts = train::predict(result.model, data.eval, norm, tc.input_frames);
    Table fm(with_metric_columns({"window"}));
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        const GridField& truth = data.eval.window(i).back();
        const auto row = metrics::evaluate_field(truth, FieldView(truth.height(), truth.width(), forecasts[i]),
                                                 cfg.train.at.theta, data.eval.dt_minutes(), norm.range());
        auto cells = metric_cells(row);
        cells.insert(cells.begin(), static_cast<std::uint64_t>(i));
        fm.add_row(std::move(cells));
    }
    write_table(out.dir, "forecast_metrics", fm, out.format);
    write_file_atomic(out.dir / "metadata.json", run_metadata_json(cfg, "train", &data));
    if (cfg.consistency.plots && !forecasts.empty()) {
        write_plot(out.dir / "plots" / "forecast_0.ppm", forecasts.front(), data.eval.height(), data.eval.width(),
                   cfg.train.at.theta, norm.range());
    }
    return 0;
}

int cmd_consistency(const ExperimentConfig& cfg, const RunOutput& out) {
    const PreparedData data = prepare_data(cfg);
    const auto& norm = data.train.norm();
    const double theta = cfg.train.at.theta;
    const double peak = norm.range();
    const auto& kinds = cfg.noise.kinds;
    const auto& losses = cfg.consistency.losses;
    const auto& seeds = cfg.consistency.seeds;
    say(out, "[consistency] " + std::to_string(data.train.size()) + " training windows, " +
                 std::to_string(data.eval.size()) + " evaluation windows, " + std::to_string(losses.size()) +
                 " loss(es) x " + std::to_string(seeds.size()) + " seed(s) x " + std::to_string(kinds.size()) +
                 " noise kind(s)");

    // [kind][loss] -> per-seed (mae, psnr)
    std::vector<std::vector<std::vector<metrics::ContinuousScores>>> scores(
        kinds.size(), std::vector<std::vector<metrics::ContinuousScores>>(losses.size()));
    Table per_seed({"noise", "loss", "seed", "mae", "psnr"});
    Table fm(with_metric_columns({"loss", "seed", "track", "noise"}));
    const auto logs = out.dir / "logs";
    const auto plots = out.dir / "plots";

    auto plot = [&](const std::string& name, const std::vector<std::vector<double>>& fc) {
        if (cfg.consistency.plots && !fc.empty()) {
            write_plot(plots / (name + ".ppm"), fc.front(), data.eval.height(), data.eval.width(), theta, peak);
        }
    };
    if (cfg.consistency.plots && data.eval.size() > 0) {
        const auto truth = data.eval.window(0).back().values();
        write_plot(plots / "truth.ppm", std::vector<double>(truth.begin(), truth.end()), data.eval.height(),
                   data.eval.width(), theta, peak);
    }

    for (std::size_t si = 0; si < seeds.size(); ++si) {
        const std::uint64_t seed = seeds[si];
        for (std::size_t li = 0; li < losses.size(); ++li) {
            const auto loss = losses[li];
            const std::string lname(train::to_string(loss));
            const std::string stem = lname + "_seed" + std::to_string(seed);
            const auto clean_cfg = cfg.track_config(loss, seed, train::Track::clean, kinds.front());
            auto t0 = std::chrono::steady_clock::now();
            const auto clean = train::train(clean_cfg, data.train);
            say(out, "[consistency] " + stem + " clean " + fixed1(seconds_since(t0)) + " s");
            write_table(logs, stem + "_clean", epoch_table(clean.log), out.format);
            const auto fc = train::predict(clean.model, data.eval, norm, clean_cfg.input_frames);
            {
                auto cells = metric_cells(score_forecasts(fc, data.eval, theta, peak));
                cells.insert(cells.begin(), {lname, seed, std::string("clean"), std::string("none")});
                fm.add_row(std::move(cells));
            }
            plot(stem + "_clean", fc);
            for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
                const std::string kname(data::to_string(kinds[ki]));
                const auto dirty_cfg = cfg.track_config(loss, seed, train::Track::dirty, kinds[ki]);
                if (!clean_cfg.same_except_track(dirty_cfg)) throw InvalidParameter("track configs diverged");
                t0 = std::chrono::steady_clock::now();
                const auto dirty = train::train(dirty_cfg, data.train);
                write_table(logs, stem + "_dirty_" + kname, epoch_table(dirty.log), out.format);
                const auto fd = train::predict(dirty.model, data.eval, norm, dirty_cfg.input_frames);
                const auto cmp = train::compare_forecasts(fc, fd, peak);
                scores[ki][li].push_back(cmp);
                per_seed.add_row({kname, lname, seed, cmp.mae, cmp.psnr});
                auto cells = metric_cells(score_forecasts(fd, data.eval, theta, peak));
                cells.insert(cells.begin(), {lname, seed, std::string("dirty"), kname});
                fm.add_row(std::move(cells));
                plot(stem + "_dirty_" + kname, fd);
                say(out, "[consistency] " + stem + " dirty " + kname + " " + fixed1(seconds_since(t0)) +
                             " s: mae " + format_double(cmp.mae) + ", psnr " + format_double(cmp.psnr));
            }
        }
    }

    Table table({"noise", "loss", "mae", "psnr", "seeds"});
    for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
        for (std::size_t li = 0; li < losses.size(); ++li) {
            double mae = 0.0, psnr = 0.0;
            for (const auto& s : scores[ki][li]) {
                mae += s.mae;
                psnr += s.psnr;
            }
            const auto n = static_cast<double>(scores[ki][li].size());
            table.add_row({std::string(data::to_string(kinds[ki])), std::string(train::to_string(losses[li])), mae / n,
                           psnr / n, static_cast<std::uint64_t>(scores[ki][li].size())});
        }
    }
    write_table(out.dir, "consistency_table", table, out.format);
    write_table(out.dir, "consistency_per_seed", per_seed, out.format);
    write_table(out.dir, "forecast_metrics", fm, out.format);
    write_file_atomic(out.dir / "metadata.json", run_metadata_json(cfg, "consistency", &data));
    say(out, "[consistency] wrote " + (out.dir / "consistency_table").string() + "." + std::string(extension(out.format)));
    return 0;
}

} // namespace atloss::cli
