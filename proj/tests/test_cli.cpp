#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "output.hpp"

using namespace lfv::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::vector<const char*> argv{"lfv"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_command(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("lfv_cli_test_" + std::string(
                                                ::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path file(const std::string& name, const std::string& content) {
        const auto p = dir_ / name;
        std::ofstream(p) << content;
        return p;
    }

    fs::path dir_;
};

}  // namespace

TEST(Config, RejectsUnknownKeyByName) {
    try {
        parse_config(R"({"betaa": 1.5, "n": "ten"})");
        FAIL() << "accepted";
    } catch (const ConfigError& e) {
        ASSERT_EQ(e.problems().size(), 2u);
        EXPECT_NE(e.problems()[0].find("'betaa'"), std::string::npos);
        EXPECT_NE(e.problems()[1].find("'n'"), std::string::npos);
    }
    EXPECT_THROW(parse_config("{not json"), ConfigError);
    EXPECT_THROW(parse_config("[1, 2]"), ConfigError);
}

TEST(Config, RoundTripsThroughJson) {
    const auto c = parse_config(R"({"measure": "beta:1.5", "n": 64, "T": 0.5, "scales": [0.5, 0.25], "seed": 7})");
    EXPECT_EQ(*c.measure, "beta:1.5");
    EXPECT_EQ(*c.n, 64);
    EXPECT_EQ(c.scales.size(), 2u);
    EXPECT_EQ(parse_config(to_json(c).dump()).seed, c.seed);
}

TEST_F(CliTest, RatesKingmanExample) {
    const auto cfg = file("empty.json", "{}");
    const auto r = run({"rates", "--config", cfg.string(), "--measure", "delta0:1", "--b", "4", "--m", "2", "--out",
                        (dir_ / "o").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("4,2,6,6,6\n"), std::string::npos) << r.out;
    EXPECT_EQ(slurp(dir_ / "o" / "rates.csv"), r.out);
    EXPECT_TRUE(fs::exists(dir_ / "o" / "manifest.json"));
}

TEST_F(CliTest, CdiBetaBelowOneStaysInfinite) {
    const auto r = run({"cdi", "--measure", "beta:0.8", "--out", (dir_ / "o").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("stays_infinite", 0), 0u) << r.out;
    const auto j = nlohmann::json::parse(slurp(dir_ / "o" / "cdi.json"));
    EXPECT_EQ(j["classification"], "stays_infinite");
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
    const auto cfg = file("c.json", R"({"measure": "beta:0.8", "b": 5, "m": 2})");
    const auto r = run({"rates", "--config", cfg.string(), "--measure", "delta0:1", "--out", (dir_ / "o").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("5,2,10,10,10\n"), std::string::npos) << r.out;
}

TEST_F(CliTest, ConfigErrorsExitTwoAndListEveryViolation) {
    const auto bad = file("bad.json", R"({"betaa": 1.5})");
    auto r = run({"rates", "--config", bad.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("betaa"), std::string::npos);

    r = run({"lookdown", "--measure", "delta0:1", "--n", "0", "--T", "-1", "--out", (dir_ / "o").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("seed"), std::string::npos);
    EXPECT_NE(r.err.find("n must be"), std::string::npos);
    EXPECT_NE(r.err.find("T must be"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir_ / "o"));

    r = run({"rates", "--bogus", "1"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({}).code, 2);

    r = run({"lookdown", "--measure", "delta1:1", "--n", "4", "--T", "1", "--seed", "1", "--out", (dir_ / "o").string()});
    EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, ManifestChecksumsMatchFiles) {
    const auto out = dir_ / "o";
    const auto r = run({"lookdown", "--measure", "beta:1.5", "--n", "32", "--d", "2", "--T", "0.5", "--replicas", "3",
                        "--snapshot-times", "0.25", "--seed", "4", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(m["artifact_version"], kArtifactVersion);
    EXPECT_EQ(m["config"]["seed"], 4);
    for (const auto& f : m["files"]) {
        const auto content = slurp(out / f["name"].get<std::string>());
        EXPECT_EQ(f["fnv1a64"], hex64(fnv1a64(content))) << f["name"];
        EXPECT_EQ(f["bytes"], content.size());
    }
    for (const auto& e : fs::directory_iterator(out)) EXPECT_NE(e.path().extension(), ".tmp");
    // 3 replicas x (32 levels at t = 0.25 and at T) rows plus the header.
    const auto snaps = slurp(out / "snapshots.csv");
    EXPECT_EQ(std::count(snaps.begin(), snaps.end(), '\n'), 1 + 3 * 64);
}

TEST_F(CliTest, OutputsIdenticalAcrossRunsAndWorkerCounts) {
    std::vector<std::string> files;
    int i = 0;
    for (const char* w : {"1", "1", "4"}) {
        const auto out = dir_ / std::to_string(i++);
        const auto r = run({"support", "--measure", "beta:1.5", "--n", "300", "--d", "2", "--T", "1", "--replicas", "5",
                            "--alpha", "0.5", "--delta", "0.1", "--energy", "0.5,1.5", "--seed", "9", "--workers", w,
                            "--out", out.string()});
        ASSERT_EQ(r.code, 0) << r.err;
        files.push_back(nlohmann::json::parse(slurp(out / "manifest.json"))["files"].dump());
    }
    EXPECT_EQ(files[0], files[1]);
    EXPECT_EQ(files[0], files[2]);
}

TEST_F(CliTest, EveryCommandRuns) {
    const auto o = [&](const char* n) { return (dir_ / n).string(); };
    EXPECT_EQ(run({"coalescent", "--measure", "beta:1.2", "--n", "8", "--T", "1", "--times", "0.2,1", "--replicas", "3",
                   "--seed", "1", "--out", o("c")}).code, 0);
    EXPECT_EQ(run({"tm", "--measure", "delta0:1", "--m", "5", "--n-start", "100", "--replicas", "20", "--seed", "1",
                   "--out", o("t")}).code, 0);
    EXPECT_EQ(run({"dimension", "--measure", "delta0:1", "--n", "2048", "--d", "2", "--T", "1", "--replicas", "2",
                   "--seed", "1", "--out", o("d")}).code, 0);
    EXPECT_EQ(run({"moment2", "--measure", "beta:1.5", "--n", "64", "--d", "2", "--T", "0.5", "--replicas", "20",
                   "--seed", "1", "--out", o("m")}).code, 0);
    EXPECT_TRUE(fs::exists(dir_ / "t" / "tm_summary.json"));
    EXPECT_TRUE(fs::exists(dir_ / "d" / "boxcount.csv"));
    const auto m = nlohmann::json::parse(slurp(dir_ / "m" / "moment2.json"));
    EXPECT_TRUE(m.contains("z"));
    // Support without an override fits the exponent; beta 0.8 has none to fit.
    EXPECT_EQ(run({"support", "--measure", "beta:0.8", "--n", "64", "--T", "1", "--replicas", "1", "--seed", "1",
                   "--out", o("s")}).code, 2);
}
