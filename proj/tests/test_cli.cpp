#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "clat/container.hpp"
#include "clat/pipeline.hpp"
#include "test_util.hpp"

using testutil::TempDir;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr combined
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(CLAT_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult res;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) res.output.append(buf, n);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string write_small_config(const TempDir& dir) {
    const auto cfg = dir / "config.json";
    const auto out = dir / "out";
    clat::ordered_json j = {
        {"out_dir", out.string()}, {"fit_samples", 1500}, {"classify_samples", 1000},
        {"center_samples", 1500},  {"sweep_samples", 400}, {"tvec_samples", 800},
        {"flip_samples", 100},
    };
    testutil::write_file(cfg, j.dump(2) + "\n");
    return cfg.string();
}

} // namespace

TEST_CASE("usage problems exit with code 2") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("no-such-command").exit_code == 2);
    CHECK(run_cli("fit --frobnicate").exit_code == 2);
    CHECK(run_cli("--config /definitely/not/a/file.json fit").exit_code == 2);

    const CliResult missing = run_cli("arithmetic");
    CHECK(missing.exit_code == 2);
    // Both required flags are named in one message.
    CHECK(missing.output.find("--from") != std::string::npos);
    CHECK(missing.output.find("--to") != std::string::npos);
}

TEST_CASE("help exits cleanly and names every subcommand") {
    const CliResult help = run_cli("--help");
    CHECK(help.exit_code == 0);
    for (const char* sub : {"gen-dataset", "fit", "analyze", "evaluate", "truncate",
                            "arithmetic", "interpolate", "invert", "wildcard-sample"})
        CHECK(help.output.find(sub) != std::string::npos);
    CHECK(run_cli("truncate --help").exit_code == 0);
}

TEST_CASE("a full command sequence runs clean through the binary") {
    TempDir dir;
    const std::string cfg = " --config " + write_small_config(dir);
    const auto out = dir / "out";

    CHECK(run_cli("gen-dataset" + cfg).exit_code == 0);
    CHECK(std::filesystem::exists(out / "dataset" / "metadata.jsonl"));
    CHECK(std::filesystem::exists(out / "dataset" / "images.bin"));

    CHECK(run_cli("fit" + cfg).exit_code == 0);
    CHECK(std::filesystem::exists(out / "models" / "gaussians.bin"));

    CHECK(run_cli("analyze" + cfg).exit_code == 0);
    CHECK(std::filesystem::exists(out / "analysis" / "classification.csv"));

    CHECK(run_cli("evaluate" + cfg).exit_code == 0);
    CHECK(std::filesystem::exists(out / "evaluation" / "report.json"));

    CHECK(run_cli("truncate --psi 1,0.5,0" + cfg).exit_code == 0);
    CHECK(run_cli("arithmetic --from crimson --to scarlet" + cfg).exit_code == 0);
    CHECK(run_cli("interpolate --from teal --to turquoise --steps 4" + cfg).exit_code == 0);
    CHECK(run_cli("invert --condition olive --steps 200" + cfg).exit_code == 0);
    CHECK(run_cli("wildcard-sample" + cfg).exit_code == 0);

    // Manifests exist for each command that ran.
    CHECK(std::filesystem::exists(out / "manifests" / "fit.json"));
    CHECK(std::filesystem::exists(out / "manifests" / "evaluate.json"));
}

TEST_CASE("data problems exit with code 3") {
    TempDir dir;

    SUBCASE("missing upstream artifacts name the producing command") {
        const std::string cfg = " --config " + write_small_config(dir);
        const CliResult res = run_cli("analyze" + cfg);
        CHECK(res.exit_code == 3);
        CHECK(res.output.find("fit") != std::string::npos);
    }
    SUBCASE("config that is not JSON") {
        testutil::write_file(dir / "bad.json", "{ nope");
        CHECK(run_cli("fit --config " + (dir / "bad.json").string()).exit_code == 3);
    }
    SUBCASE("config with an unknown key") {
        testutil::write_file(dir / "typo.json", "{\"fit_samplez\": 10}\n");
        const CliResult res = run_cli("fit --config " + (dir / "typo.json").string());
        CHECK(res.exit_code == 3);
        CHECK(res.output.find("fit_samplez") != std::string::npos);
    }
    SUBCASE("unknown condition id") {
        const std::string cfg = " --config " + write_small_config(dir);
        REQUIRE(run_cli("fit" + cfg).exit_code == 0);
        const CliResult res = run_cli("arithmetic --from crimson --to mauve" + cfg);
        CHECK(res.exit_code == 3);
        CHECK(res.output.find("mauve") != std::string::npos);
    }
}

TEST_CASE("numeric failures exit with code 4") {
    TempDir dir;
    const std::string cfg = " --config " + write_small_config(dir);
    REQUIRE(run_cli("fit" + cfg).exit_code == 0);

    // Replace one fitted covariance with a negative-definite matrix; the
    // Cholesky factorization in the classifier cannot absorb that.
    const auto path = dir / "out" / "models" / "gaussians.bin";
    clat::Blob blob = clat::read_container(path);
    for (auto& [name, block] : blob.blocks)
        if (name == "crimson.sigma")
            block = -Eigen::MatrixXd::Identity(block.rows(), block.cols());
    clat::write_container(path, blob);

    const CliResult res = run_cli("analyze" + cfg);
    CHECK(res.exit_code == 4);
    CHECK(res.output.find("crimson") != std::string::npos);
}

TEST_CASE("seed and out-dir flags override the config file") {
    TempDir dir;
    const std::string cfg = write_small_config(dir);
    const auto alt = dir / "alt-out";

    CHECK(run_cli("gen-dataset --config " + cfg + " --out " + alt.string() +
                  " --seed 99")
              .exit_code == 0);
    CHECK(std::filesystem::exists(alt / "dataset" / "metadata.jsonl"));

    std::ifstream in(alt / "manifests" / "gen-dataset.json");
    REQUIRE(in.good());
    const clat::ordered_json m = clat::ordered_json::parse(in);
    CHECK(m.at("seed").get<std::uint64_t>() == 99);
}

TEST_CASE("the same seed writes identical dataset bytes across runs") {
    TempDir a, b;
    const std::string cfg_a = write_small_config(a);
    const std::string cfg_b = write_small_config(b);
    REQUIRE(run_cli("gen-dataset --config " + cfg_a).exit_code == 0);
    REQUIRE(run_cli("gen-dataset --config " + cfg_b).exit_code == 0);

    CHECK(testutil::read_file(a / "out" / "dataset" / "metadata.jsonl") ==
          testutil::read_file(b / "out" / "dataset" / "metadata.jsonl"));
    CHECK(testutil::read_file(a / "out" / "dataset" / "images.bin") ==
          testutil::read_file(b / "out" / "dataset" / "images.bin"));
}
