#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fracldp/cli.hpp"

using namespace fracldp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("fracldp_cli_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "fracldp");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

RunConfig small(const std::string& experiment, const fs::path& out, const std::string& params = "{}") {
    RunConfig c = parse_config(R"({"experiment":")" + experiment +
                               R"(","grid":{"points_per_dim":64},"timegrid":{"T":0.5,"n_steps":32},"params":)" + params +
                               "}");
    c.output_dir = out.string();
    return c;
}

}  // namespace

TEST(Cli, ValidateModelExitsZero) {
    const fs::path dir = scratch("vm");
    const RunOutcome r = run(small("validate-model", dir));
    EXPECT_EQ(r.exit_code, exit_ok) << r.message;
    EXPECT_TRUE(fs::exists(dir / "validate-model.ndjson"));
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Cli, ManifestChecksumsMatchFiles) {
    const fs::path dir = scratch("manifest");
    const RunOutcome r = run(small("skeleton", dir));
    ASSERT_EQ(r.exit_code, exit_ok) << r.message;
    const Json m = Json::parse(slurp(dir / "manifest.json"));
    ASSERT_FALSE(m["outputs"].empty());
    for (const auto& f : m["outputs"]) {
        const std::string content = slurp(dir / f["name"].get<std::string>());
        EXPECT_EQ(f["sha256"], sha256_hex(content));
        EXPECT_EQ(f["bytes"], content.size());
    }
    EXPECT_EQ(m["config_hash"], sha256_hex(m["config"].dump()));
    EXPECT_EQ(m["version"], artifact_version());
}

TEST(Cli, TinyGuardIsBlowUpDominated) {
    const fs::path dir = scratch("guard");
    const RunOutcome r = run(small("simulate", dir, R"({"n_paths":16,"linf_guard":1e-3})"));
    EXPECT_EQ(r.exit_code, exit_blow_up_dominated);
    const Json m = Json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(m["blow_ups"], 16);
    EXPECT_EQ(m["exit_code"], exit_blow_up_dominated);
}

TEST(Cli, IdenticalRunsAreByteIdentical) {
    const fs::path a = scratch("repro_a"), b = scratch("repro_b");
    const std::string params = R"({"n_paths":12})";
    ASSERT_EQ(run(small("simulate", a, params)).exit_code, exit_ok);
    RunConfig cb = small("simulate", b, params);
    cb.workers = 3;
    ASSERT_EQ(run(cb).exit_code, exit_ok);
    EXPECT_EQ(slurp(a / "simulate.ndjson"), slurp(b / "simulate.ndjson"));
}

TEST(Cli, CsvFormat) {
    const fs::path dir = scratch("csv");
    RunConfig c = small("tail-scan", dir);
    c.format = OutputFormat::csv;
    ASSERT_EQ(run(c).exit_code, exit_ok);
    const std::string csv = slurp(dir / "tail-scan.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "record,radius,mass,non_increasing,last_over_first");
}

TEST(Cli, ControlModeBeyondNoiseModesIsConfigError) {
    const fs::path dir = scratch("badmode");
    const RunOutcome r = run(small("skeleton", dir, R"({"control":{"kind":"constant_mode","mode":9,"value":1}})"));
    EXPECT_EQ(r.exit_code, exit_config_invalid);
    EXPECT_NE(r.message.find("mode"), std::string::npos);
}

TEST(Cli, CommandLineOverridesAndErrors) {
    const fs::path dir = scratch("argv");
    const fs::path cfg = dir / "cfg.json";
    std::ofstream(cfg) << R"({"grid":{"points_per_dim":64},"timegrid":{"T":0.5,"n_steps":16},"params":{}})";
    EXPECT_EQ(invoke({"skeleton", "--config", cfg.string(), "--out", (dir / "o").string(), "--seed", "5"}), exit_ok);
    const Json m = Json::parse(slurp(dir / "o" / "manifest.json"));
    EXPECT_EQ(m["config"]["seed"], 5);
    EXPECT_EQ(m["config"]["experiment"], "skeleton");

    EXPECT_EQ(invoke({"skeleton"}), exit_config_invalid);
    EXPECT_EQ(invoke({"skeleton", "--config", (dir / "missing.json").string()}), exit_config_invalid);
    std::ofstream(dir / "bad.json") << R"({"grid":{"alpha":1.5}})";
    EXPECT_EQ(invoke({"skeleton", "--config", (dir / "bad.json").string()}), exit_config_invalid);
    std::ofstream(dir / "mismatch.json") << R"({"experiment":"simulate"})";
    EXPECT_EQ(invoke({"skeleton", "--config", (dir / "mismatch.json").string()}), exit_config_invalid);
}
