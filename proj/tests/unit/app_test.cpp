#include "sheetlab/app.hpp"
#include "sheetlab/config.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace sheetlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sheetlab_app_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kMinimal = R"(
[fields]
preset = additive
dimension = 2

[grid]
n = 8

[experiment]
kind = simulate
seed = 3
)";

}  // namespace

TEST(Sha256, KnownDigests) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, MinimalFileParses) {
    const ParseResult r = parse_config(kMinimal);
    ASSERT_TRUE(r.ok()) << r.error_text();
    EXPECT_EQ(r.config->kind, "simulate");
    EXPECT_EQ(r.config->n_s, 8u);
    EXPECT_EQ(r.config->n_t, 8u);
    EXPECT_EQ(r.config->x0, (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(r.config->seed, 3u);
    EXPECT_TRUE(r.warnings.empty());
}

TEST(Config, UnknownKeyReportsLine) {
    const ParseResult r = parse_config("[grid]\nn = 4\n\n[experiment]\nkind = simulate\ntrails = 5\n");
    ASSERT_FALSE(r.ok());
    ASSERT_EQ(r.errors.size(), 1u);
    EXPECT_EQ(r.errors[0].line, 6u);
    EXPECT_NE(r.errors[0].message.find("trails"), std::string::npos);
}

TEST(Config, UnknownSectionAndMalformedLines) {
    const ParseResult r = parse_config("[grdi]\nn = 4\n[grid]\nn_s 4\n");
    ASSERT_FALSE(r.ok());
    EXPECT_EQ(r.errors.size(), 2u);
    EXPECT_EQ(r.errors[0].line, 1u);
    EXPECT_EQ(r.errors[1].line, 4u);
}

TEST(Config, BadValuesAreErrors) {
    EXPECT_FALSE(parse_config("[grid]\nn = -3\n").ok());
    EXPECT_FALSE(parse_config("[experiment]\nkind = dance\n").ok());
    EXPECT_FALSE(parse_config("[experiment]\nz = 0, 1\n").ok());
    EXPECT_FALSE(parse_config("[experiment]\nz = 2, 1\n").ok());
    EXPECT_FALSE(parse_config("[experiment]\nx0 = 1, 2, 3\n").ok());
    EXPECT_FALSE(parse_config("[experiment]\nkind = probe\ntrials = 10\n").ok());
    EXPECT_FALSE(parse_config("[fields]\npreset = nope\n").ok());
}

TEST(Config, BetaPrimeZeroIsValidationError) {
    const ParseResult r =
        parse_config("[experiment]\nkind = norris\n[norris]\nregime = irregular\nbeta = 0.5\nbeta_prime = 0\n");
    ASSERT_FALSE(r.ok());
    EXPECT_EQ(r.errors[0].line, 6u);
    EXPECT_NE(r.errors[0].message.find("beta'"), std::string::npos);
}

TEST(Config, SmallRhoWarnsWithMinimalBound) {
    const ParseResult r = parse_config("[experiment]\nkind = norris\n[norris]\nrho = 10\n");
    ASSERT_TRUE(r.ok()) << r.error_text();
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_EQ(r.warnings[0].line, 4u);
    EXPECT_NE(r.warnings[0].message.find("3+2nu = 15"), std::string::npos);
}

TEST(Config, CustomFieldsBuild) {
    const ParseResult r = parse_config(
        "[fields]\npreset = custom\ndimension = 2\nA1 = 1 ; x1\nA0 = (* -1 x1) ; 0\nregime = smooth\n");
    ASSERT_TRUE(r.ok()) << r.error_text();
    const FieldSet f = build_fields(*r.config);
    EXPECT_EQ(f.d(), 1u);
    EXPECT_FALSE(f.spatially_constant(1));
    const ParseResult bad = parse_config("[fields]\npreset = custom\ndimension = 2\nA1 = 1\n");
    EXPECT_FALSE(bad.ok());
}

TEST(Config, DuplicateKeyWarns) {
    const ParseResult r = parse_config("[grid]\nn = 4\nn = 6\n");
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r.config->n_s, 6u);
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_EQ(r.warnings[0].line, 3u);
}

TEST(Run, WritesArtifactsAndManifest) {
    ParseResult r = parse_config(kMinimal);
    RunConfig c = *r.config;
    c.out_dir = scratch("run").string();
    std::ostringstream log;
    ASSERT_EQ(run(c, log), 0) << log.str();
    const auto manifest = Json::parse(slurp(fs::path(c.out_dir) / "manifest.json"));
    ASSERT_EQ(manifest["artifacts"].size(), 2u);
    for (const auto& a : manifest["artifacts"]) {
        const std::string body = slurp(fs::path(c.out_dir) / a["name"].get<std::string>());
        EXPECT_EQ(a["sha256"], sha256_hex(body));
        EXPECT_EQ(a["bytes"], body.size());
    }
    const auto summary = Json::parse(slurp(fs::path(c.out_dir) / "simulate.json"));
    EXPECT_EQ(summary["config"]["seed"], 3);
    EXPECT_FALSE(summary["config"]["settings"].contains("experiment.workers"));
}

TEST(Run, FailuresLeaveErrorJson) {
    ParseResult r = parse_config("[experiment]\nkind = malliavin\nz = 0.5, 0.01\n[grid]\nn = 8\n");
    ASSERT_TRUE(r.ok()) << r.error_text();
    RunConfig c = *r.config;
    c.out_dir = scratch("fail").string();
    std::ostringstream log;
    EXPECT_EQ(run(c, log), 1);
    const auto err = Json::parse(slurp(fs::path(c.out_dir) / "error.json"));
    EXPECT_EQ(err["kind"], "degenerate");
}

TEST(Cli, WorkerCountDoesNotChangeArtifacts) {
    const fs::path dir = scratch("cli");
    const fs::path cfg = dir / "probe.ini";
    std::ofstream(cfg) << "[fields]\npreset = grushin\n[grid]\nn = 6\n[experiment]\nkind = probe\ntrials = 1000\n"
                          "eps = 0.5, 0.3, 0.1\ndirections = 2\npin = 0, 1\nseed = 9\n";
    std::string hashes[2];
    for (int w = 0; w < 2; ++w) {
        const fs::path out = dir / ("out" + std::to_string(w));
        const std::string cmd = std::string(SHEETLAB_CLI_PATH) + " probe --config " + cfg.string() + " --workers " +
                                std::to_string(w == 0 ? 1 : 3) + " --out " + out.string() + " 2>/dev/null";
        ASSERT_EQ(std::system(cmd.c_str()), 0) << cmd;
        hashes[w] = slurp(out / "manifest.json");
    }
    EXPECT_FALSE(hashes[0].empty());
    EXPECT_EQ(hashes[0], hashes[1]);
}

TEST(Cli, ConfigErrorsExitWithStatusTwo) {
    const fs::path dir = scratch("cli_err");
    const fs::path cfg = dir / "bad.ini";
    std::ofstream(cfg) << "[grid]\nbogus = 1\n";
    const std::string cmd = std::string(SHEETLAB_CLI_PATH) + " simulate --config " + cfg.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 2);
}
