// atloss: experiment driver.
//
//   atloss <command> [--config FILE] [--seed N] [--out DIR] [--format csv|json]
//
// Exit codes: 0 success, 1 a check failed, 2 bad usage or config,
// 3 runtime error (I/O, non-finite loss, ...).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "atloss/error.hpp"
#include "atloss_cli/checks.hpp"
#include "atloss_cli/config.hpp"
#include "atloss_cli/experiment.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv("ATLOSS_OUT_DIR"); env && *env) return env;
    return "atloss_out";
}

} // namespace

int main(int argc, char** argv) {
    using namespace atloss;
    using namespace atloss::cli;

    CLI::App app{"AT loss experiments: gradient checks, Lipschitz sweeps, penalty oracle, training, consistency"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string format = "csv";
    app.add_option("--config", config_path, "Config file (sections of key = value)")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Overrides run.seed");
    app.add_option("--out", out_dir, "Output directory (default $ATLOSS_OUT_DIR or ./atloss_out)");
    app.add_option("--format", format, "Report format")->check(CLI::IsMember({"csv", "json"}));

    const char* commands[][2] = {
        {"generate", "Write synthetic training and evaluation frames"},
        {"refine", "Tukey-refine the frames named by data.source"},
        {"gradcheck", "Finite-difference gradient checks"},
        {"lipschitz", "Empirical gradient supremum vs 16/(27 tau)"},
        {"penalty-oracle", "Exhaustive penalty / AT loss ranking check"},
        {"train", "Train one track and score it on the evaluation set"},
        {"consistency", "Clean/dirty consistency experiment"},
        {"verify", "gradcheck + lipschitz + penalty-oracle"},
        {"print-config", "Print the effective config"},
    };
    for (const auto& c : commands) app.add_subcommand(c[0], c[1]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        if (seed) cfg.seed = *seed;
        cfg.validate();
        if (command == "print-config") {
            std::cout << serialize_config(cfg);
            return 0;
        }

        RunOutput out;
        out.dir = out_dir.empty() ? default_out_dir() : std::filesystem::path(out_dir);
        out.format = parse_report_format(format);
        out.log = &std::cerr;
        std::filesystem::create_directories(out.dir);

        if (command == "generate") return cmd_generate(cfg, out);
        if (command == "refine") return cmd_refine(cfg, out);
        if (command == "train") return cmd_train(cfg, out);
        if (command == "consistency") return cmd_consistency(cfg, out);
        if (command == "gradcheck") return emit_checks(run_gradcheck(cfg.gradcheck, cfg.seed), command, out);
        if (command == "lipschitz") return emit_checks(run_lipschitz(cfg.lipschitz, cfg.train.at.theta), command, out);
        if (command == "penalty-oracle") {
            return emit_checks(run_penalty_oracle(cfg.penalty, cfg.train.at.theta, cfg.seed), command, out);
        }
        if (command == "verify") {
            CheckResult all = run_gradcheck(cfg.gradcheck, cfg.seed);
            all.merge(run_lipschitz(cfg.lipschitz, cfg.train.at.theta));
            all.merge(run_penalty_oracle(cfg.penalty, cfg.train.at.theta, cfg.seed));
            return emit_checks(all, command, out);
        }
        std::cerr << "unhandled command " << command << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InvalidParameter& e) {
        std::cerr << "invalid parameter: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << command << " failed: " << e.what() << "\n";
        return kExitRuntime;
    }
}
