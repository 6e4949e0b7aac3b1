#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clat/error.hpp"
#include "clat/pipeline.hpp"

namespace {

struct GlobalFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;

    clat::RunConfig resolve() const {
        clat::RunConfig config =
            config_path.empty() ? clat::RunConfig{} : clat::RunConfig::load(config_path);
        if (seed) config.seed = *seed;
        if (!out_dir.empty()) config.out_dir = out_dir;
        return config;
    }
};

void require_together(const std::vector<std::pair<std::string, bool>>& flags) {
    std::string missing;
    for (const auto& [name, present] : flags)
        if (!present) missing += (missing.empty() ? "" : ", ") + name;
    if (!missing.empty()) throw CLI::RequiredError(missing);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional latent-space analysis toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags global;
    app.add_option("--config", global.config_path,
                   "JSON config file; present keys override built-in defaults")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", global.seed, "Root seed (overrides the config)");
    app.add_option("--out", global.out_dir, "Output directory (overrides the config)");

    auto* gen = app.add_subcommand("gen-dataset",
                                   "Write the bundled synthetic dataset (metadata + images)");
    gen->callback([&] { clat::cmd_gen_dataset(global.resolve()); });

    auto* fit = app.add_subcommand(
        "fit", "Fit per-condition Gaussians and centers of mass; writes models");
    fit->callback([&] { clat::cmd_fit(global.resolve()); });

    auto* analyze = app.add_subcommand(
        "analyze", "Classification, FD matrix, PCA scatter, and truncation sweep CSVs");
    analyze->callback([&] { clat::cmd_analyze(global.resolve()); });

    auto* truncate = app.add_subcommand("truncate", "Truncate samples toward a center of mass");
    std::string trunc_condition;
    std::vector<double> trunc_psis;
    truncate->add_option("--condition", trunc_condition,
                         "Condition id (default: first bundled condition)");
    truncate->add_option("--psi", trunc_psis, "Truncation factors (default: config psi_sweep)")
        ->delimiter(',');
    truncate->callback(
        [&] { clat::cmd_truncate(global.resolve(), trunc_condition, trunc_psis); });

    auto* arithmetic =
        app.add_subcommand("arithmetic", "Latent re-conditioning via a transformation vector");
    std::string arith_from, arith_to;
    arithmetic->add_option("--from", arith_from, "Source condition id");
    arithmetic->add_option("--to", arith_to, "Target condition id");
    arithmetic->callback([&] {
        require_together({{"--from", !arith_from.empty()}, {"--to", !arith_to.empty()}});
        clat::cmd_arithmetic(global.resolve(), arith_from, arith_to);
    });

    auto* interpolate =
        app.add_subcommand("interpolate", "Interpolate one z between two conditions");
    std::string interp_from, interp_to;
    std::int64_t interp_steps = 10;
    interpolate->add_option("--from", interp_from, "Source condition id");
    interpolate->add_option("--to", interp_to, "Target condition id");
    interpolate->add_option("--steps", interp_steps, "Interpolation steps (default 10)");
    interpolate->callback([&] {
        require_together({{"--from", !interp_from.empty()}, {"--to", !interp_to.empty()}});
        clat::cmd_interpolate(global.resolve(), interp_from, interp_to, interp_steps);
    });

    auto* invert =
        app.add_subcommand("invert", "Recover a latent for a self-generated target image");
    std::string invert_condition;
    std::int64_t invert_steps = 2000;
    double invert_step_size = 1.0;
    invert->add_option("--condition", invert_condition,
                       "Condition id (default: first bundled condition)");
    invert->add_option("--steps", invert_steps, "Gradient steps (default 2000)");
    invert->add_option("--step-size", invert_step_size, "Initial step size (default 1.0)");
    invert->callback([&] {
        clat::cmd_invert(global.resolve(), invert_condition, invert_steps, invert_step_size);
    });

    auto* wildcard = app.add_subcommand(
        "wildcard-sample", "Sample with sub-conditions wildcarded (zero condition blocks)");
    std::vector<std::string> wildcard_mask;
    bool wildcard_stochastic = false;
    wildcard->add_option("--mask", wildcard_mask,
                         "Sub-condition names to wildcard (default: style,motif)")
        ->delimiter(',');
    wildcard->add_flag("--stochastic", wildcard_stochastic,
                       "Draw mask_k sub-conditions per sample, each masked with mask_p");
    wildcard->callback([&] {
        clat::cmd_wildcard_sample(global.resolve(), wildcard_mask, wildcard_stochastic);
    });

    auto* evaluate =
        app.add_subcommand("evaluate", "FID/FJD/intra-FID metric report for the generated set");
    std::string labels_path;
    evaluate->add_option("--labels", labels_path,
                         "Qualitative 0/1 label matrix CSV (n_qual rows)");
    evaluate->callback([&] {
        std::optional<std::filesystem::path> labels;
        if (!labels_path.empty()) labels = labels_path;
        clat::cmd_evaluate(global.resolve(), labels);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        (void)app.exit(e);
        return 2;
    } catch (const clat::numeric_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 4;
    } catch (const clat::data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid argument: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
