#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qndsim/errors.hpp"
#include "qndsim_cli/commands.hpp"
#include "qndsim_cli/config.hpp"

namespace fs = std::filesystem;
using namespace qndsim;
using namespace qndsim::cli;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "qndsim_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << text;
    return p;
}

int invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "qndsim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

const char* kSmallTomography = R"({
  "tomography": {"phases": 24, "shots": 2000, "seed": 5, "n_tomo": 4}
})";

}  // namespace

TEST(Config, DefaultsRoundTripThroughJson) {
    const RunConfig c = parse_config("{}");
    EXPECT_EQ(c.system.preset, "device");
    EXPECT_EQ(c.protocol.n_ph, 2);
    const RunConfig back = parse_config(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, ExplicitValues) {
    const RunConfig c = parse_config(R"({
      "system": {"preset": "ideal", "chi_hz": 2e6, "t1_s": "inf"},
      "schedule": {"gate_interval_s": 9e-7},
      "threads": 2
    })");
    EXPECT_EQ(c.system.preset, "ideal");
    EXPECT_NEAR(c.threads, 2, 0);
    ASSERT_TRUE(c.schedule.gate_interval.has_value());
    EXPECT_DOUBLE_EQ(*c.schedule.gate_interval, 9e-7);
}

TEST(Config, RejectsUnknownKeysAndBadTypes) {
    EXPECT_THROW(parse_config(R"({"sytem": {}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"system": {"chi": 1}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"protocol": {"n_ph": "two"}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"tomography": {"eta": 1.5}})"), ConfigError);
    EXPECT_THROW(parse_config("not json"), ConfigError);
}

TEST(Cli, UnknownKeyExitsWithConfigCode) {
    const fs::path dir = scratch("unknown_key");
    const fs::path cfg = write_config(dir, R"({"bogus": 1})");
    EXPECT_EQ(invoke({"--config", cfg.string(), "--out", dir.string(), "spectrum"}), kExitConfig);
    EXPECT_EQ(manifest(dir)["exit_code"], kExitConfig);
}

TEST(Cli, MissingConfigFileExitsWithConfigCode) {
    const fs::path dir = scratch("missing");
    EXPECT_EQ(invoke({"--config", (dir / "nope.json").string(), "--out", dir.string(), "spectrum"}), kExitConfig);
}

TEST(Cli, DegenerateEfficiencyGridIsRejected) {
    const fs::path dir = scratch("grid");
    const fs::path cfg = write_config(dir, R"({"schedule": {"input_photon_grid": [0]}})");
    EXPECT_EQ(invoke({"--config", cfg.string(), "--out", dir.string(), "efficiency"}), kExitConfig);
}

TEST(Cli, UnknownSweepAxisIsRejected) {
    const fs::path dir = scratch("axis");
    const fs::path cfg = write_config(dir, R"({"sweep": {"axis": "temperature", "values": [1]}})");
    EXPECT_EQ(invoke({"--config", cfg.string(), "--out", dir.string(), "sweep"}), kExitConfig);
}

TEST(Cli, UnknownSubcommandIsUsageError) {
    EXPECT_EQ(invoke({"teleport"}), kExitConfig);
}

TEST(Cli, TomographyNeedsSeed) {
    const fs::path dir = scratch("noseed");
    EXPECT_EQ(invoke({"--out", dir.string(), "tomo-selftest"}), kExitConfig);
}

TEST(Cli, SpectrumWritesFilesAndManifest) {
    const fs::path dir = scratch("spectrum");
    ASSERT_EQ(invoke({"--out", dir.string(), "spectrum"}), kExitOk);
    const auto m = manifest(dir);
    EXPECT_EQ(m["status"], "ok");
    EXPECT_EQ(m["subcommand"], "spectrum");
    for (const auto& f : m["outputs"]) EXPECT_TRUE(fs::exists(dir / f.get<std::string>())) << f;
    EXPECT_TRUE(fs::exists(dir / "spectrum.csv"));
}

TEST(Cli, ProtocolRun) {
    const fs::path dir = scratch("protocol");
    ASSERT_EQ(invoke({"--out", dir.string(), "protocol"}), kExitOk);
    const auto r = nlohmann::json::parse(slurp(dir / "protocol.json"));
    EXPECT_TRUE(r.is_object());
    for (const char* f : {"rho_g.csv", "rho_e.csv", "rho_comp.csv", "wigner_e.csv", "photon_distribution.csv"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
}

TEST(Cli, SweepWithoutProtocolColumns) {
    const fs::path dir = scratch("sweep");
    const fs::path cfg = write_config(
        dir, R"({"sweep": {"axis": "gate_interval", "values": [7e-7, 8e-7, 9e-7], "protocol_columns": false}})");
    ASSERT_EQ(invoke({"--config", cfg.string(), "--out", dir.string(), "sweep"}), kExitOk);
    EXPECT_TRUE(fs::exists(dir / "sweep.csv"));
}

TEST(Cli, TomographySelftestIsReproducible) {
    const fs::path a = scratch("tomo_a");
    const fs::path b = scratch("tomo_b");
    const fs::path cfg = write_config(a, kSmallTomography);
    ASSERT_EQ(invoke({"--config", cfg.string(), "--out", a.string(), "tomo-selftest"}), kExitOk);
    ASSERT_EQ(invoke({"--config", cfg.string(), "--out", b.string(), "tomo-selftest"}), kExitOk);
    const auto outputs = manifest(a)["outputs"];
    ASSERT_FALSE(outputs.empty());
    for (const auto& f : outputs) {
        const std::string name = f.get<std::string>();
        EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
    }
    // same config except for the output directory
    auto ma = manifest(a);
    auto mb = manifest(b);
    ma["config"].erase("output_dir");
    mb["config"].erase("output_dir");
    EXPECT_EQ(ma, mb);
}

TEST(Cli, SeedFlagChangesSamples) {
    const fs::path a = scratch("seed_a");
    const fs::path b = scratch("seed_b");
    const fs::path cfg = write_config(a, kSmallTomography);
    ASSERT_EQ(invoke({"--config", cfg.string(), "--out", a.string(), "tomo-selftest"}), kExitOk);
    ASSERT_EQ(invoke({"--config", cfg.string(), "--seed", "6", "--out", b.string(), "tomo-selftest"}), kExitOk);
    EXPECT_NE(slurp(a / "record_coherent.csv"), slurp(b / "record_coherent.csv"));
}
