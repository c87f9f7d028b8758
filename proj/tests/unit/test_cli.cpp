#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "atloss/error.hpp"
#include "atloss_cli/checks.hpp"
#include "atloss_cli/config.hpp"
#include "atloss_cli/report.hpp"

using namespace atloss;
using namespace atloss::cli;

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ATLOSS_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("atloss_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

} // namespace

TEST(Config, SerializeParseRoundTrip) {
    ExperimentConfig c;
    c.seed = 17;
    c.data.windows = 40;
    c.data.storm.cells = 3;
    c.train.loss = train::LossKind::huber;
    c.train.adam.lr = 0.00123456789;
    c.train.at.shared_z = true;
    c.noise.kinds = {data::NoiseKind::salt_and_pepper};
    c.consistency.seeds = {3, 9};
    c.lipschitz.taus = {0.5, 0.25};
    const std::string text = serialize_config(c);
    const ExperimentConfig back = parse_config(text);
    EXPECT_EQ(serialize_config(back), text);
    EXPECT_EQ(back.train.adam.lr, 0.00123456789);
    EXPECT_EQ(back.consistency.seeds, (std::vector<std::uint64_t>{3, 9}));
}

TEST(Config, DefaultsMatchTrainingSetup) {
    const ExperimentConfig c;
    EXPECT_EQ(c.train.batch_size, 16u);
    EXPECT_EQ(c.train.adam.lr, 0.0002);
    EXPECT_EQ(c.train.adam.beta1, 0.9);
    EXPECT_EQ(c.train.adam.beta2, 0.999);
    EXPECT_EQ(c.train.schedule.tau_floor, 0.05);
    EXPECT_EQ(c.train.schedule.total_epochs, c.train.epochs);
    EXPECT_EQ(c.noise.fraction, 0.2);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, Errors) {
    EXPECT_THROW(parse_config("[train]\nbogus = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("[nowhere]\n"), ConfigError);
    EXPECT_THROW(parse_config("seed = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("[run]\nseed = 1\nseed = 2\n"), ConfigError);
    EXPECT_THROW(parse_config("[train]\nepochs = ten\n"), ConfigError);
    try {
        parse_config("[run]\nseed = 1\n\n[train]\nbogus = 1\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("5"), std::string::npos);
    }
    const auto c = parse_config("# comment\n[run]\n; another\nseed = 4\n");
    EXPECT_EQ(c.seed, 4u);
}

TEST(Config, TrackConfigs) {
    const ExperimentConfig c;
    const auto clean = c.track_config(train::LossKind::at, 2, train::Track::clean, data::NoiseKind::salt_and_pepper);
    const auto dirty = c.track_config(train::LossKind::at, 2, train::Track::dirty, data::NoiseKind::salt_and_pepper);
    EXPECT_FALSE(clean.noise.has_value());
    ASSERT_TRUE(dirty.noise.has_value());
    EXPECT_EQ(dirty.noise->fraction, 0.2);
    EXPECT_TRUE(clean.same_except_track(dirty));
    EXPECT_EQ(clean.seed, 2u);
}

TEST(Report, CsvAndJson) {
    Table t({"name", "value", "count", "ok"});
    t.add_row({std::string("a"), 0.1, std::int64_t{-3}, true});
    t.add_row({std::string("b"), cell(metrics::MetricValue::undefined()), std::int64_t{4}, false});
    EXPECT_EQ(t.to_csv(), "name,value,count,ok\na,0.1,-3,true\nb,undefined,4,false\n");
    const std::string json = t.to_json();
    EXPECT_NE(json.find("\"name\""), std::string::npos);
    EXPECT_NE(json.find("\"undefined\""), std::string::npos);
    EXPECT_THROW(t.add_row({1.0}), std::exception);
    EXPECT_THROW(parse_report_format("xml"), std::exception);
}

TEST(Checks, RelativeError) {
    EXPECT_NEAR(relative_error(1.0, 1.1, 1e-3), 0.1 / 1.1, 1e-15);
    EXPECT_DOUBLE_EQ(relative_error(0.0, 1e-6, 1e-3), 1e-3);
}

TEST(Checks, SmallRunsPass) {
    GradcheckConfig g;
    g.cases = 50;
    EXPECT_TRUE(run_gradcheck(g, 1).passed());
    LipschitzConfig l;
    l.points = 200000;
    EXPECT_TRUE(run_lipschitz(l, 2.0).passed());
    PenaltyConfig p;
    p.k = 5;
    EXPECT_TRUE(run_penalty_oracle(p, 2.0, 0).passed());
    p.k = 21;
    EXPECT_THROW(run_penalty_oracle(p, 2.0, 0), InvalidParameter);
    p.k = 0;
    EXPECT_THROW(run_penalty_oracle(p, 2.0, 0), InvalidParameter);
}

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch_dir("exit");
    EXPECT_EQ(run_cli("print-config"), 0);
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("frobnicate"), 2);
    write_file(dir / "bad.ini", "[train]\nbogus = 1\n");
    EXPECT_EQ(run_cli("print-config --config " + (dir / "bad.ini").string()), 2);
    write_file(dir / "range.ini", "[noise]\nfraction = 0.9\n");
    EXPECT_EQ(run_cli("print-config --config " + (dir / "range.ini").string()), 2);
    write_file(dir / "k.ini", "[penalty]\nk = 30\n");
    EXPECT_EQ(run_cli("penalty-oracle --out " + dir.string() + " --config " + (dir / "k.ini").string()), 2);
    write_file(dir / "missing.ini", "[data]\nsource = " + (dir / "nope.atgs").string() + "\n");
    EXPECT_EQ(run_cli("refine --out " + dir.string() + " --config " + (dir / "missing.ini").string()), 3);
    write_file(dir / "strict.ini", "[lipschitz]\npoints = 1000\nslack = -1\n");
    EXPECT_EQ(run_cli("lipschitz --out " + dir.string() + " --config " + (dir / "strict.ini").string()), 1);
    fs::remove_all(dir);
}

TEST(Cli, PenaltyOracleWritesTable) {
    const fs::path dir = scratch_dir("oracle");
    write_file(dir / "k.ini", "[penalty]\nk = 4\n");
    ASSERT_EQ(run_cli("penalty-oracle --out " + dir.string() + " --config " + (dir / "k.ini").string()), 0);
    std::ifstream in(dir / "penalty_oracle.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_NE(header.find("spearman"), std::string::npos);
    EXPECT_EQ(run_cli("penalty-oracle --format json --out " + dir.string() + " --config " + (dir / "k.ini").string()),
              0);
    EXPECT_TRUE(fs::exists(dir / "penalty_oracle.json"));
    fs::remove_all(dir);
}
