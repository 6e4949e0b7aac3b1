#include "clat/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <variant>

#include <Eigen/Eigenvalues>

#include "clat/error.hpp"
#include "clat/rng.hpp"

namespace clat {

namespace fs = std::filesystem;

namespace {

// Shortest round-trip decimal form; the same double always prints the same
// bytes, which the reproducibility contract relies on.
std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string now_iso8601() {
    const std::time_t t =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw data_error("write failed for " + path.string());
}

void write_json_file(const fs::path& path, const ordered_json& j) {
    write_text(path, j.dump(2) + "\n");
}

ordered_json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path.string());
    try {
        return ordered_json::parse(in);
    } catch (const ordered_json::exception& e) {
        throw data_error(path.string() + ": " + e.what());
    }
}

void write_manifest(const RunConfig& config, const std::string& command,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, ordered_json parameters) {
    ordered_json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["seed"] = config.seed;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["parameters"] = std::move(parameters);
    // Wall-clock time lives only in manifests; every other artifact is a
    // pure function of config and seed.
    j["timestamp"] = now_iso8601();
    fs::create_directories(config.out_dir / "manifests");
    write_json_file(config.out_dir / "manifests" / (command + ".json"), j);
}

void need_file(const fs::path& p, const std::string& producer) {
    if (!fs::exists(p))
        throw data_error("missing input " + p.string() + "; run '" + producer + "' first");
}

// Batch form of truncate_latent; same coefficient arrangement so the psi=1
// and psi=0 endpoints stay exact.
Eigen::MatrixXd truncate_rows(const Eigen::MatrixXd& W, const Eigen::VectorXd& w_bar,
                              double psi) {
    return (psi * W).rowwise() + ((1.0 - psi) * w_bar).transpose();
}

void check_config(const RunConfig& c) {
    const auto at_least_one = [](std::int64_t v, const char* name) {
        if (v < 1)
            throw data_error(std::string("config: ") + name + " must be >= 1, got " +
                             std::to_string(v));
    };
    at_least_one(c.z_dim, "z_dim");
    at_least_one(c.w_dim, "w_dim");
    at_least_one(c.image_dim, "image_dim");
    at_least_one(c.text_dim, "text_dim");
    at_least_one(c.mapping_depth, "mapping_depth");
    at_least_one(c.synthesis_depth, "synthesis_depth");
    at_least_one(c.min_count, "min_count");
    at_least_one(c.fit_samples, "fit_samples");
    at_least_one(c.classify_samples, "classify_samples");
    at_least_one(c.center_samples, "center_samples");
    at_least_one(c.sweep_samples, "sweep_samples");
    at_least_one(c.tvec_samples, "tvec_samples");
    at_least_one(c.flip_samples, "flip_samples");
    at_least_one(c.embed_dim, "embed_dim");
    if (!std::isfinite(c.condition_gain) || c.condition_gain <= 0.0)
        throw data_error("config: condition_gain must be finite and > 0");
    if (!std::isfinite(c.ridge_scale) || c.ridge_scale < 0.0)
        throw data_error("config: ridge_scale must be finite and >= 0");
    if (c.psi_sweep.empty()) throw data_error("config: psi_sweep must not be empty");
    for (const double psi : c.psi_sweep)
        if (!std::isfinite(psi)) throw data_error("config: psi_sweep contains a non-finite value");
    if (!(c.mask_p >= 0.0 && c.mask_p <= 1.0))
        throw data_error("config: mask_p outside [0, 1]");
    if (!std::isfinite(c.fjd_alpha) || c.fjd_alpha < 0.0)
        throw data_error("config: fjd_alpha must be finite and >= 0");
    if (!(c.intra_fraction > 0.0 && c.intra_fraction <= 1.0))
        throw data_error("config: intra_fraction outside (0, 1]");
}

} // namespace

ordered_json RunConfig::to_json() const {
    ordered_json j;
    j["seed"] = seed;
    j["out_dir"] = out_dir.string();
    j["z_dim"] = static_cast<std::int64_t>(z_dim);
    j["w_dim"] = static_cast<std::int64_t>(w_dim);
    j["image_dim"] = static_cast<std::int64_t>(image_dim);
    j["text_dim"] = static_cast<std::int64_t>(text_dim);
    j["mapping_depth"] = static_cast<std::int64_t>(mapping_depth);
    j["synthesis_depth"] = static_cast<std::int64_t>(synthesis_depth);
    j["condition_gain"] = condition_gain;
    j["ridge_scale"] = ridge_scale;
    j["min_count"] = min_count;
    j["fit_samples"] = fit_samples;
    j["classify_samples"] = classify_samples;
    j["center_samples"] = center_samples;
    j["sweep_samples"] = sweep_samples;
    j["tvec_samples"] = tvec_samples;
    j["flip_samples"] = flip_samples;
    j["psi_sweep"] = psi_sweep;
    j["mask_k"] = mask_k;
    j["mask_p"] = mask_p;
    j["fjd_alpha"] = fjd_alpha;
    j["embed_dim"] = static_cast<std::int64_t>(embed_dim);
    j["intra_fraction"] = intra_fraction;
    return j;
}

RunConfig RunConfig::from_json(const ordered_json& j) {
    if (!j.is_object()) throw data_error("config: top level must be a JSON object");
    RunConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "out_dir") c.out_dir = value.get<std::string>();
            else if (key == "z_dim") c.z_dim = value.get<std::int64_t>();
            else if (key == "w_dim") c.w_dim = value.get<std::int64_t>();
            else if (key == "image_dim") c.image_dim = value.get<std::int64_t>();
            else if (key == "text_dim") c.text_dim = value.get<std::int64_t>();
            else if (key == "mapping_depth") c.mapping_depth = value.get<std::int64_t>();
            else if (key == "synthesis_depth") c.synthesis_depth = value.get<std::int64_t>();
            else if (key == "condition_gain") c.condition_gain = value.get<double>();
            else if (key == "ridge_scale") c.ridge_scale = value.get<double>();
            else if (key == "min_count") c.min_count = value.get<std::int64_t>();
            else if (key == "fit_samples") c.fit_samples = value.get<std::int64_t>();
            else if (key == "classify_samples") c.classify_samples = value.get<std::int64_t>();
            else if (key == "center_samples") c.center_samples = value.get<std::int64_t>();
            else if (key == "sweep_samples") c.sweep_samples = value.get<std::int64_t>();
            else if (key == "tvec_samples") c.tvec_samples = value.get<std::int64_t>();
            else if (key == "flip_samples") c.flip_samples = value.get<std::int64_t>();
            else if (key == "psi_sweep") c.psi_sweep = value.get<std::vector<double>>();
            else if (key == "mask_k") c.mask_k = value.get<std::size_t>();
            else if (key == "mask_p") c.mask_p = value.get<double>();
            else if (key == "fjd_alpha") c.fjd_alpha = value.get<double>();
            else if (key == "embed_dim") c.embed_dim = value.get<std::int64_t>();
            else if (key == "intra_fraction") c.intra_fraction = value.get<double>();
            else throw data_error("config: unknown key '" + key + "'");
        }
    } catch (const ordered_json::exception& e) {
        throw data_error(std::string("config: ") + e.what());
    }
    check_config(c);
    return c;
}

RunConfig RunConfig::load(const fs::path& path) {
    return from_json(read_json_file(path));
}

Scenario build_scenario(const RunConfig& config) {
    check_config(config);

    Scenario s;
    s.dataset_spec = bundled_dataset_spec(config.image_dim);
    const RngStream root(config.seed);
    const GeneratedDataset data =
        gen_dataset(s.dataset_spec, root.substream("dataset").seed());
    IngestResult ingest = ingest_metadata(data.records, config.min_count, config.text_dim);
    s.schema = std::move(ingest.schema);
    s.support = std::move(ingest.support);

    const std::size_t palette_sub = s.schema.index_of("palette");
    const SubConditionDescriptor& palette = s.schema.subconditions[palette_sub];
    for (const auto& entry : s.dataset_spec.entries) {
        MultiCondition mc;
        mc.values.resize(s.schema.subconditions.size());  // wildcards
        Eigen::VectorXd weights = Eigen::VectorXd::Zero(palette.dim);
        for (Eigen::Index k = 0; k < palette.dim; ++k) {
            const auto it = entry.palette.find(palette.vocab[static_cast<std::size_t>(k)]);
            if (it != entry.palette.end()) weights(k) = it->second;
        }
        mc.values[palette_sub] = DistributionValue{std::move(weights)};
        s.condition_ids.push_back(entry.style);
        s.condition_vectors.push_back(config.condition_gain *
                                      assemble_condition_vector(s.schema, mc));
        s.conditions.push_back(std::move(mc));
    }

    auto [mapping, synthesis] =
        init_models(config.z_dim, s.schema.total_dim(), config.w_dim, config.image_dim,
                    config.mapping_depth, root.substream("models").seed(),
                    config.synthesis_depth);
    s.mapping = std::move(mapping);
    s.synthesis = std::move(synthesis);
    return s;
}

FitArtifacts fit_scenario(const RunConfig& config) {
    FitArtifacts art;
    art.scenario = build_scenario(config);
    const Scenario& s = art.scenario;
    const RngStream root(config.seed);

    for (std::size_t i = 0; i < s.condition_ids.size(); ++i) {
        RngStream rng = root.substream("fit/" + s.condition_ids[i]);
        const Eigen::MatrixXd P = sample_condition_points(
            s.mapping, s.condition_vectors[i], config.fit_samples, LatentSpace::P, rng);
        art.gaussians.push_back(fit_gaussian(P, s.condition_ids[i], LatentSpace::P));
    }
    art.ridge = default_ridge(art.gaussians, config.ridge_scale);

    for (std::size_t i = 0; i < s.condition_ids.size(); ++i) {
        RngStream rng = root.substream("center/" + s.condition_ids[i]);
        art.centers.push_back(
            center_of_mass(s.mapping, s.condition_vectors[i], config.center_samples, rng));
    }
    RngStream rng = root.substream("center/global");
    art.global_center = center_of_mass(s.mapping, std::nullopt, config.center_samples, rng);
    return art;
}

namespace {

ordered_json scenario_to_json(const Scenario& s, const RunConfig& config) {
    ordered_json j;
    j["type"] = "scenario";
    j["condition_gain"] = config.condition_gain;
    j["schema"] = s.schema.to_json();
    ordered_json conds = ordered_json::array();
    for (std::size_t i = 0; i < s.condition_ids.size(); ++i) {
        ordered_json c;
        c["id"] = s.condition_ids[i];
        c["palette"] = s.dataset_spec.entries[i].palette;
        c["vector"] = std::vector<double>(
            s.condition_vectors[i].data(),
            s.condition_vectors[i].data() + s.condition_vectors[i].size());
        conds.push_back(std::move(c));
    }
    j["conditions"] = std::move(conds);
    j["support"] = s.support;
    return j;
}

void save_gaussians(const fs::path& path, const std::vector<ConditionGaussian>& gs,
                    double ridge) {
    Blob b;
    b.meta["type"] = "gaussians";
    b.meta["space"] = to_string(gs.front().space);
    b.meta["ridge"] = ridge;
    ordered_json conds = ordered_json::array();
    for (const auto& g : gs) {
        conds.push_back({{"id", g.condition_id},
                         {"samples", g.sample_count},
                         {"degenerate", g.degenerate}});
        b.blocks.emplace_back(g.condition_id + ".mu", g.mu.transpose());
        b.blocks.emplace_back(g.condition_id + ".sigma", g.sigma);
    }
    b.meta["conditions"] = std::move(conds);
    write_container(path, b);
}

std::pair<std::vector<ConditionGaussian>, double> load_gaussians(const fs::path& path) {
    const Blob b = read_container(path);
    std::vector<ConditionGaussian> gs;
    double ridge = 0.0;
    try {
        if (!b.meta.contains("type") || b.meta.at("type") != "gaussians")
            throw data_error(path.string() + ": not a gaussians container");
        const LatentSpace space =
            latent_space_from_string(b.meta.at("space").get<std::string>());
        ridge = b.meta.at("ridge").get<double>();
        for (const auto& c : b.meta.at("conditions")) {
            ConditionGaussian g;
            g.condition_id = c.at("id").get<std::string>();
            g.space = space;
            g.sample_count = c.at("samples").get<std::int64_t>();
            g.degenerate = c.at("degenerate").get<bool>();
            g.mu = b.block(g.condition_id + ".mu").row(0).transpose();
            g.sigma = b.block(g.condition_id + ".sigma");
            if (g.sigma.rows() != g.mu.size() || g.sigma.cols() != g.mu.size())
                throw data_error(path.string() + ": covariance shape mismatch for '" +
                                 g.condition_id + "'");
            gs.push_back(std::move(g));
        }
    } catch (const ordered_json::exception& e) {
        throw data_error(path.string() + ": " + e.what());
    }
    if (gs.empty()) throw data_error(path.string() + ": no conditions");
    return {std::move(gs), ridge};
}

std::size_t condition_index(const Scenario& s, const std::string& id) {
    for (std::size_t i = 0; i < s.condition_ids.size(); ++i)
        if (s.condition_ids[i] == id) return i;
    std::string known;
    for (const auto& c : s.condition_ids) known += (known.empty() ? "" : ", ") + c;
    throw data_error("unknown condition '" + id + "'; available: " + known);
}

std::vector<std::string> wildcard_names(const ConditionSchema& schema,
                                        const MultiCondition& mc) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < mc.values.size(); ++i)
        if (std::holds_alternative<Wildcard>(mc.values[i]))
            names.push_back(schema.subconditions[i].name);
    return names;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : sep) + p;
    return out;
}

} // namespace

void cmd_gen_dataset(const RunConfig& config) {
    check_config(config);
    const SyntheticDatasetSpec spec = bundled_dataset_spec(config.image_dim);
    const GeneratedDataset data =
        gen_dataset(spec, RngStream(config.seed).substream("dataset").seed());

    const fs::path dir = config.out_dir / "dataset";
    fs::create_directories(dir);
    save_dataset((dir / "metadata.jsonl").string(), (dir / "images.bin").string(), data);

    ordered_json params;
    params["config"] = config.to_json();
    params["records"] = data.records.size();
    params["entries"] = spec.entries.size();
    write_manifest(config, "gen-dataset", {},
                   {"dataset/metadata.jsonl", "dataset/images.bin"}, std::move(params));
}

void cmd_fit(const RunConfig& config) {
    const FitArtifacts art = fit_scenario(config);
    const Scenario& s = art.scenario;

    const fs::path models = config.out_dir / "models";
    const fs::path centers = config.out_dir / "centers";
    fs::create_directories(models);
    fs::create_directories(centers);

    save_mapping(models / "mapping.bin", s.mapping);
    save_synthesis(models / "synthesis.bin", s.synthesis);
    write_json_file(models / "scenario.json", scenario_to_json(s, config));
    save_gaussians(models / "gaussians.bin", art.gaussians, art.ridge);

    std::vector<std::string> outputs = {"models/mapping.bin", "models/synthesis.bin",
                                        "models/scenario.json", "models/gaussians.bin",
                                        "centers/global.bin"};
    save_center(centers / "global.bin", art.global_center);
    for (std::size_t i = 0; i < s.condition_ids.size(); ++i) {
        save_center(centers / (s.condition_ids[i] + ".bin"), art.centers[i]);
        outputs.push_back("centers/" + s.condition_ids[i] + ".bin");
    }

    ordered_json params;
    params["config"] = config.to_json();
    params["ridge"] = art.ridge;
    write_manifest(config, "fit", {}, outputs, std::move(params));
}

FitArtifacts load_fit_artifacts(const RunConfig& config) {
    FitArtifacts art;
    art.scenario = build_scenario(config);
    Scenario& s = art.scenario;

    const fs::path models = config.out_dir / "models";
    need_file(models / "mapping.bin", "fit");
    need_file(models / "synthesis.bin", "fit");
    need_file(models / "scenario.json", "fit");
    need_file(models / "gaussians.bin", "fit");

    const ordered_json stored = read_json_file(models / "scenario.json");
    if (!stored.contains("schema") || stored["schema"] != s.schema.to_json() ||
        !stored.contains("condition_gain") ||
        stored["condition_gain"].get<double>() != config.condition_gain)
        throw data_error((models / "scenario.json").string() +
                         " disagrees with the scenario rebuilt from this config; re-run 'fit' "
                         "with the current config");

    s.mapping = load_mapping(models / "mapping.bin");
    s.synthesis = load_synthesis(models / "synthesis.bin");
    if (s.mapping.z_dim != config.z_dim || s.mapping.c_dim != s.schema.total_dim() ||
        s.mapping.w_dim != config.w_dim)
        throw data_error((models / "mapping.bin").string() +
                         ": dimensions disagree with the config");
    if (s.synthesis.w_dim != config.w_dim || s.synthesis.image_dim != config.image_dim)
        throw data_error((models / "synthesis.bin").string() +
                         ": dimensions disagree with the config");

    auto [gaussians, ridge] = load_gaussians(models / "gaussians.bin");
    if (gaussians.size() != s.condition_ids.size())
        throw data_error((models / "gaussians.bin").string() + ": expected " +
                         std::to_string(s.condition_ids.size()) + " conditions, found " +
                         std::to_string(gaussians.size()));
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        if (gaussians[i].condition_id != s.condition_ids[i])
            throw data_error((models / "gaussians.bin").string() +
                             ": condition order disagrees with the scenario");
        if (gaussians[i].dim() != config.w_dim)
            throw data_error((models / "gaussians.bin").string() +
                             ": dimensions disagree with the config");
    }
    art.gaussians = std::move(gaussians);
    art.ridge = ridge;

    const fs::path centers = config.out_dir / "centers";
    need_file(centers / "global.bin", "fit");
    art.global_center = load_center(centers / "global.bin");
    for (const auto& id : s.condition_ids) {
        need_file(centers / (id + ".bin"), "fit");
        art.centers.push_back(load_center(centers / (id + ".bin")));
        if (art.centers.back().w_bar.size() != config.w_dim)
            throw data_error((centers / (id + ".bin")).string() +
                             ": dimensions disagree with the config");
    }
    return art;
}

void cmd_analyze(const RunConfig& config) {
    const FitArtifacts art = load_fit_artifacts(config);
    const Scenario& s = art.scenario;
    const RngStream root(config.seed);
    const std::size_t n_cond = s.condition_ids.size();

    const fs::path dir = config.out_dir / "analysis";
    fs::create_directories(dir);

    // Held-out classification accuracy.
    std::string cls = "condition,samples,correct,accuracy\n";
    std::int64_t total = 0, total_correct = 0;
    for (std::size_t i = 0; i < n_cond; ++i) {
        RngStream rng = root.substream("classify/" + s.condition_ids[i]);
        const Eigen::MatrixXd P = sample_condition_points(
            s.mapping, s.condition_vectors[i], config.classify_samples, LatentSpace::P, rng);
        const std::vector<std::size_t> labels = classify_rows(P, art.gaussians, art.ridge);
        const std::int64_t correct = static_cast<std::int64_t>(
            std::count(labels.begin(), labels.end(), i));
        cls += s.condition_ids[i] + "," + std::to_string(config.classify_samples) + "," +
               std::to_string(correct) + "," +
               fmt(static_cast<double>(correct) / static_cast<double>(config.classify_samples)) +
               "\n";
        total += config.classify_samples;
        total_correct += correct;
    }
    cls += "overall," + std::to_string(total) + "," + std::to_string(total_correct) + "," +
           fmt(static_cast<double>(total_correct) / static_cast<double>(total)) + "\n";
    write_text(dir / "classification.csv", cls);

    // Pairwise Frechet distances with nearest neighbours.
    const FDMatrix fdm = fd_matrix(art.gaussians);
    std::string fd = "condition";
    for (const auto& id : fdm.ids) fd += "," + id;
    fd += ",nearest\n";
    for (std::size_t i = 0; i < fdm.ids.size(); ++i) {
        fd += fdm.ids[i];
        for (Eigen::Index jc = 0; jc < fdm.values.cols(); ++jc)
            fd += "," + fmt(fdm.values(static_cast<Eigen::Index>(i), jc));
        fd += "," + fdm.ids[fdm.nearest[i]] + "\n";
    }
    write_text(dir / "fd_matrix.csv", fd);

    // 2-D PCA of pooled per-condition P samples, plus per-condition 3-sigma
    // ellipse parameters for plotting.
    const std::int64_t per_cond = config.sweep_samples;
    Eigen::MatrixXd pooled(static_cast<Eigen::Index>(n_cond) * per_cond, config.w_dim);
    for (std::size_t i = 0; i < n_cond; ++i) {
        RngStream rng = root.substream("pca/" + s.condition_ids[i]);
        pooled.middleRows(static_cast<Eigen::Index>(i) * per_cond, per_cond) =
            sample_condition_points(s.mapping, s.condition_vectors[i], per_cond,
                                    LatentSpace::P, rng);
    }
    const PCAResult pca = pca_project(pooled, 2);

    std::string scatter = "condition,pc1,pc2\n";
    for (std::size_t i = 0; i < n_cond; ++i)
        for (Eigen::Index r = 0; r < per_cond; ++r) {
            const Eigen::Index row = static_cast<Eigen::Index>(i) * per_cond + r;
            scatter += s.condition_ids[i] + "," + fmt(pca.projected(row, 0)) + "," +
                       fmt(pca.projected(row, 1)) + "\n";
        }
    write_text(dir / "pca_scatter.csv", scatter);

    std::string ellipses = "condition,center_pc1,center_pc2,semi_major,semi_minor,angle_rad\n";
    for (std::size_t i = 0; i < n_cond; ++i) {
        const Eigen::MatrixXd block =
            pca.projected.middleRows(static_cast<Eigen::Index>(i) * per_cond, per_cond);
        const Eigen::RowVector2d mean = block.colwise().mean();
        const Eigen::MatrixXd centered = block.rowwise() - mean;
        const Eigen::Matrix2d cov =
            centered.transpose() * centered / static_cast<double>(per_cond - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
        const Eigen::Vector2d lam = eig.eigenvalues().cwiseMax(0.0);
        const Eigen::Vector2d major_axis = eig.eigenvectors().col(1);
        ellipses += s.condition_ids[i] + "," + fmt(mean(0)) + "," + fmt(mean(1)) + "," +
                    fmt(3.0 * std::sqrt(lam(1))) + "," + fmt(3.0 * std::sqrt(lam(0))) + "," +
                    fmt(std::atan2(major_axis(1), major_axis(0))) + "\n";
    }
    write_text(dir / "pca_ellipses.csv", ellipses);

    std::string variance = "component,explained_variance_ratio\n";
    for (Eigen::Index k = 0; k < pca.projection.explained_variance_ratio.size(); ++k)
        variance += "pc" + std::to_string(k + 1) + "," +
                    fmt(pca.projection.explained_variance_ratio(k)) + "\n";
    write_text(dir / "pca_variance.csv", variance);

    // Condition retention under both truncation variants.
    std::string sweep = "psi,condition,samples,conditional_accuracy,global_accuracy\n";
    for (std::size_t j = 0; j < config.psi_sweep.size(); ++j) {
        const double psi = config.psi_sweep[j];
        std::int64_t cond_correct_all = 0, glob_correct_all = 0;
        for (std::size_t i = 0; i < n_cond; ++i) {
            RngStream rng = root.substream("sweep/" + s.condition_ids[i], j);
            const Eigen::MatrixXd W = sample_condition_points(
                s.mapping, s.condition_vectors[i], config.sweep_samples, LatentSpace::W, rng);

            const auto accuracy_after = [&](const Eigen::VectorXd& w_bar, std::int64_t* hits) {
                const Eigen::MatrixXd P =
                    p_transform_rows(truncate_rows(W, w_bar, psi), PDirection::WtoP);
                const std::vector<std::size_t> labels =
                    classify_rows(P, art.gaussians, art.ridge);
                const std::int64_t correct = static_cast<std::int64_t>(
                    std::count(labels.begin(), labels.end(), i));
                *hits += correct;
                return static_cast<double>(correct) /
                       static_cast<double>(config.sweep_samples);
            };
            const double acc_cond = accuracy_after(art.centers[i].w_bar, &cond_correct_all);
            const double acc_glob = accuracy_after(art.global_center.w_bar, &glob_correct_all);
            sweep += fmt(psi) + "," + s.condition_ids[i] + "," +
                     std::to_string(config.sweep_samples) + "," + fmt(acc_cond) + "," +
                     fmt(acc_glob) + "\n";
        }
        const double denom = static_cast<double>(config.sweep_samples) *
                             static_cast<double>(n_cond);
        sweep += fmt(psi) + ",overall," +
                 std::to_string(config.sweep_samples * static_cast<std::int64_t>(n_cond)) +
                 "," + fmt(static_cast<double>(cond_correct_all) / denom) + "," +
                 fmt(static_cast<double>(glob_correct_all) / denom) + "\n";
    }
    write_text(dir / "truncation_sweep.csv", sweep);

    ordered_json params;
    params["config"] = config.to_json();
    write_manifest(config, "analyze",
                   {"models/mapping.bin", "models/synthesis.bin", "models/scenario.json",
                    "models/gaussians.bin", "centers/"},
                   {"analysis/classification.csv", "analysis/fd_matrix.csv",
                    "analysis/pca_scatter.csv", "analysis/pca_ellipses.csv",
                    "analysis/pca_variance.csv", "analysis/truncation_sweep.csv"},
                   std::move(params));
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
    return out;
}

// Lexicographically first outcome of maximal weight.
std::string argmax_outcome(const std::map<std::string, double>& weights) {
    const std::string* best = nullptr;
    double best_w = 0.0;
    for (const auto& [outcome, w] : weights)
        if (!best || w > best_w) {
            best = &outcome;
            best_w = w;
        }
    return best ? *best : std::string();
}

} // namespace

void cmd_evaluate(const RunConfig& config,
                  const std::optional<fs::path>& qualitative_labels) {
    const FitArtifacts art = load_fit_artifacts(config);
    const Scenario& s = art.scenario;
    const RngStream root(config.seed);

    const fs::path ds_dir = config.out_dir / "dataset";
    need_file(ds_dir / "metadata.jsonl", "gen-dataset");
    need_file(ds_dir / "images.bin", "gen-dataset");
    const GeneratedDataset real =
        load_dataset((ds_dir / "metadata.jsonl").string(), (ds_dir / "images.bin").string());
    if (real.images.cols() != config.image_dim)
        throw data_error((ds_dir / "images.bin").string() +
                         ": image width disagrees with the config");

    const std::size_t n_cond = s.condition_ids.size();
    const Eigen::Index n_real = real.images.rows();

    // Real condition embeddings straight off the metadata.
    Eigen::MatrixXd real_cond(n_real, s.schema.total_dim());
    for (Eigen::Index r = 0; r < n_real; ++r)
        real_cond.row(r) = assemble_condition_vector(
            s.schema, record_to_condition(s.schema, real.records[static_cast<std::size_t>(r)]))
            .transpose();

    // Generated samples: per condition, as many as the real set holds for it.
    std::vector<std::int64_t> real_count(n_cond, 0);
    for (const auto& rec : real.records) {
        const auto it = rec.categorical.find("style");
        if (it == rec.categorical.end()) continue;
        for (std::size_t i = 0; i < n_cond; ++i)
            if (s.condition_ids[i] == it->second) {
                ++real_count[i];
                break;
            }
    }
    std::vector<std::int64_t> fake_count(n_cond);
    std::int64_t n_fake = 0;
    for (std::size_t i = 0; i < n_cond; ++i) {
        fake_count[i] = real_count[i] > 0 ? real_count[i] : s.dataset_spec.entries[i].count;
        n_fake += fake_count[i];
    }

    Eigen::MatrixXd fake_images(n_fake, config.image_dim);
    Eigen::MatrixXd fake_cond(n_fake, s.schema.total_dim());
    std::vector<Eigen::Index> fake_start(n_cond);
    Eigen::Index cursor = 0;
    for (std::size_t i = 0; i < n_cond; ++i) {
        fake_start[i] = cursor;
        RngStream rng = root.substream("eval/" + s.condition_ids[i]);
        const Eigen::MatrixXd Z = rng.normal_matrix(fake_count[i], config.z_dim);
        const Eigen::MatrixXd W = map_conditional_batch(s.mapping, Z, s.condition_vectors[i]);
        fake_images.middleRows(cursor, fake_count[i]) = synthesize_batch(s.synthesis, W);
        const Eigen::VectorXd cvec =
            assemble_condition_vector(s.schema, s.conditions[i]);  // unscaled
        fake_cond.middleRows(cursor, fake_count[i]) =
            cvec.transpose().replicate(fake_count[i], 1);
        cursor += fake_count[i];
    }

    const EmbeddingFunction embed = EmbeddingFunction::random_projection(
        config.image_dim, config.embed_dim, root.substream("embed").seed());
    const Eigen::MatrixXd real_emb = embed(real.images);
    const Eigen::MatrixXd fake_emb = embed(fake_images);

    MetricReport report;
    report.fid_value = fid(real_emb, fake_emb, &report.warnings);
    report.fjd_alpha = config.fjd_alpha;
    report.fjd_value =
        fjd(real_emb, real_cond, fake_emb, fake_cond, config.fjd_alpha, &report.warnings);

    // Intra-FID entry sets: one per categorical or distribution entry; text
    // sub-conditions have no entries to enumerate.
    std::vector<EntrySet> entry_sets;
    std::map<std::string, std::map<std::string, std::pair<std::int64_t, std::int64_t>>> counts;
    for (const auto& sub : s.schema.subconditions) {
        if (sub.kind == SubKind::text_embedding) continue;
        for (const auto& label : sub.vocab) {
            std::vector<Eigen::Index> real_idx;
            for (Eigen::Index r = 0; r < n_real; ++r) {
                const auto& rec = real.records[static_cast<std::size_t>(r)];
                if (sub.kind == SubKind::categorical) {
                    const auto it = rec.categorical.find(sub.name);
                    if (it == rec.categorical.end()) continue;
                    const auto v = sub.vocab_index(it->second);
                    const std::string mapped =
                        v ? sub.vocab[static_cast<std::size_t>(*v)] : kUnknownLabel;
                    if (mapped == label) real_idx.push_back(r);
                } else {
                    const auto it = rec.distribution.find(sub.name);
                    if (it == rec.distribution.end() || it->second.empty()) continue;
                    if (argmax_outcome(it->second) == label) real_idx.push_back(r);
                }
            }
            std::vector<Eigen::Index> fake_idx;
            for (std::size_t i = 0; i < n_cond; ++i) {
                const auto& entry = s.dataset_spec.entries[i];
                const std::string fake_label =
                    sub.kind == SubKind::categorical
                        ? (sub.vocab_index(entry.style) ? entry.style
                                                        : std::string(kUnknownLabel))
                        : argmax_outcome(entry.palette);
                if (fake_label != label) continue;
                for (Eigen::Index r = 0; r < fake_count[i]; ++r)
                    fake_idx.push_back(fake_start[i] + r);
            }
            EntrySet e;
            e.condition = sub.name;
            e.entry = label;
            e.support = static_cast<std::int64_t>(real_idx.size());
            e.real = take_rows(real_emb, real_idx);
            e.fake = take_rows(fake_emb, fake_idx);
            counts[sub.name][label] = {e.support,
                                       static_cast<std::int64_t>(fake_idx.size())};
            entry_sets.push_back(std::move(e));
        }
    }
    const IntraFidResult intra = intra_fid(entry_sets, config.intra_fraction);
    report.intra_per_condition = intra.per_condition;
    report.intra_average = intra.average;
    report.warnings.insert(report.warnings.end(), intra.warnings.begin(),
                           intra.warnings.end());

    report.n_qual_value = n_qual(condition_shape(s.schema));

    if (qualitative_labels) {
        const Eigen::MatrixXd b = read_matrix_csv(*qualitative_labels, false);
        if (b.rows() != report.n_qual_value)
            throw data_error(qualitative_labels->string() + ": " + std::to_string(b.rows()) +
                             " rows, but the qualitative sample list has n_qual = " +
                             std::to_string(report.n_qual_value));
        report.e_qual_score = e_qual(b);
        report.e_art_score =
            e_art(report.intra_average, report.fjd_value, *report.e_qual_score);
    } else {
        report.warnings.push_back("e_qual omitted: no qualitative labels provided");
    }

    const fs::path dir = config.out_dir / "evaluation";
    fs::create_directories(dir);
    write_json_file(dir / "report.json", report.to_json());

    std::string intra_csv = "sub_condition,entry,real_samples,fake_samples,fid\n";
    for (const auto& [cond, entry, score] : intra.per_entry) {
        const auto& [nr, nf] = counts[cond][entry];
        intra_csv += cond + "," + entry + "," + std::to_string(nr) + "," +
                     std::to_string(nf) + "," + fmt(score) + "\n";
    }
    write_text(dir / "intra_fid.csv", intra_csv);

    ordered_json params;
    params["config"] = config.to_json();
    params["qualitative_labels"] =
        qualitative_labels ? ordered_json(qualitative_labels->string()) : ordered_json();
    std::vector<std::string> inputs = {"dataset/metadata.jsonl", "dataset/images.bin",
                                       "models/mapping.bin", "models/synthesis.bin",
                                       "models/scenario.json", "models/gaussians.bin"};
    if (qualitative_labels) inputs.push_back(qualitative_labels->string());
    write_manifest(config, "evaluate", inputs,
                   {"evaluation/report.json", "evaluation/intra_fid.csv"}, std::move(params));
}

void cmd_truncate(const RunConfig& config, const std::string& condition_id,
                  const std::vector<double>& psis) {
    const FitArtifacts art = load_fit_artifacts(config);
    const Scenario& s = art.scenario;
    const std::string id = condition_id.empty() ? s.condition_ids.front() : condition_id;
    const std::size_t ci = condition_index(s, id);
    const std::vector<double> psi_list = psis.empty() ? config.psi_sweep : psis;
    for (const double psi : psi_list)
        if (!std::isfinite(psi)) throw std::invalid_argument("truncate: non-finite psi");

    const RngStream root(config.seed);
    RngStream rng = root.substream("truncate/" + id);
    const Eigen::MatrixXd W = sample_condition_points(
        s.mapping, s.condition_vectors[ci], config.sweep_samples, LatentSpace::W, rng);
    const Eigen::VectorXd& w_bar = art.centers[ci].w_bar;

    const fs::path dir = config.out_dir / "latent";
    fs::create_directories(dir);

    Blob vectors;
    vectors.meta["type"] = "truncated-latents";
    vectors.meta["condition"] = id;
    vectors.meta["psis"] = psi_list;

    std::string csv = "psi,sample_id,classified_condition,distance_to_center\n";
    for (std::size_t j = 0; j < psi_list.size(); ++j) {
        const Eigen::MatrixXd Wt = truncate_rows(W, w_bar, psi_list[j]);
        const std::vector<std::size_t> labels =
            classify_rows(p_transform_rows(Wt, PDirection::WtoP), art.gaussians, art.ridge);
        for (Eigen::Index r = 0; r < Wt.rows(); ++r) {
            char sid[32];
            std::snprintf(sid, sizeof(sid), "s%05lld", static_cast<long long>(r));
            csv += fmt(psi_list[j]) + "," + sid + "," +
                   s.condition_ids[labels[static_cast<std::size_t>(r)]] + "," +
                   fmt((Wt.row(r).transpose() - w_bar).norm()) + "\n";
        }
        vectors.blocks.emplace_back("psi" + std::to_string(j) + ".w", Wt);
    }
    write_text(dir / "truncate.csv", csv);
    write_container(dir / "truncate_vectors.bin", vectors);

    ordered_json params;
    params["config"] = config.to_json();
    params["condition"] = id;
    params["psis"] = psi_list;
    write_manifest(config, "truncate",
                   {"models/mapping.bin", "models/gaussians.bin", "centers/" + id + ".bin"},
                   {"latent/truncate.csv", "latent/truncate_vectors.bin"}, std::move(params));
}

void cmd_arithmetic(const RunConfig& config, const std::string& from_id,
                    const std::string& to_id) {
    const FitArtifacts art = load_fit_artifacts(config);
    const Scenario& s = art.scenario;
    const std::size_t fi = condition_index(s, from_id);
    const std::size_t ti = condition_index(s, to_id);
    if (fi == ti) throw std::invalid_argument("arithmetic: --from and --to are the same");

    // The z stream is keyed by the unordered pair, so swapping --from and
    // --to replays identical z and the result negates exactly.
    const std::string pair_key = "tvec/" + std::min(from_id, to_id) + "/" +
                                 std::max(from_id, to_id);
    const RngStream root(config.seed);
    RngStream rng = root.substream(pair_key);
    const TransformationVector tvec = transformation_vector(
        s.mapping, s.condition_vectors[fi], s.condition_vectors[ti], config.tvec_samples, rng);

    RngStream flip_rng = root.substream("flips/" + from_id + "/" + to_id);
    const Eigen::MatrixXd Z = flip_rng.normal_matrix(config.flip_samples, config.z_dim);
    const Eigen::MatrixXd W = map_conditional_batch(s.mapping, Z, s.condition_vectors[fi]);
    const Eigen::MatrixXd Wt = W.rowwise() + tvec.t.transpose();
    const std::vector<std::size_t> before =
        classify_rows(p_transform_rows(W, PDirection::WtoP), art.gaussians, art.ridge);
    const std::vector<std::size_t> after =
        classify_rows(p_transform_rows(Wt, PDirection::WtoP), art.gaussians, art.ridge);

    const fs::path dir = config.out_dir / "latent";
    fs::create_directories(dir);

    std::string csv = "sample_id,before_condition,after_condition,target_reached\n";
    std::int64_t reached = 0;
    for (Eigen::Index r = 0; r < config.flip_samples; ++r) {
        const bool hit = after[static_cast<std::size_t>(r)] == ti;
        reached += hit ? 1 : 0;
        char sid[32];
        std::snprintf(sid, sizeof(sid), "s%05lld", static_cast<long long>(r));
        csv += std::string(sid) + "," + s.condition_ids[before[static_cast<std::size_t>(r)]] +
               "," + s.condition_ids[after[static_cast<std::size_t>(r)]] + "," +
               (hit ? "1" : "0") + "\n";
    }
    write_text(dir / "arithmetic_flips.csv", csv);

    const std::string tvec_file = "transformation_" + from_id + "_" + to_id + ".bin";
    save_transformation(dir / tvec_file, tvec);

    ordered_json params;
    params["config"] = config.to_json();
    params["from"] = from_id;
    params["to"] = to_id;
    params["flip_rate"] =
        static_cast<double>(reached) / static_cast<double>(config.flip_samples);
    write_manifest(config, "arithmetic", {"models/mapping.bin", "models/gaussians.bin"},
                   {"latent/arithmetic_flips.csv", "latent/" + tvec_file}, std::move(params));
}

void cmd_interpolate(const RunConfig& config, const std::string& from_id,
                     const std::string& to_id, std::int64_t steps) {
    const FitArtifacts art = load_fit_artifacts(config);
    const Scenario& s = art.scenario;
    const std::size_t fi = condition_index(s, from_id);
    const std::size_t ti = condition_index(s, to_id);
    if (steps < 1) throw std::invalid_argument("interpolate: steps must be >= 1");

    const RngStream root(config.seed);
    RngStream rng = root.substream("interp/" + from_id + "/" + to_id);
    const LatentVector z{LatentSpace::Z, rng.normal_vector(config.z_dim)};

    Eigen::MatrixXd W(steps + 1, config.w_dim);
    Eigen::MatrixXd images(steps + 1, config.image_dim);
    std::string csv = "lambda,classified_condition\n";
    for (std::int64_t k = 0; k <= steps; ++k) {
        const double lambda = static_cast<double>(k) / static_cast<double>(steps);
        const LatentVector w = conditional_interpolate(
            s.mapping, z, s.condition_vectors[fi], s.condition_vectors[ti], lambda);
        W.row(k) = w.data.transpose();
        images.row(k) = synthesize(s.synthesis, w).transpose();
        const std::size_t label =
            classify(p_transform(w, PDirection::WtoP).data, art.gaussians, art.ridge);
        csv += fmt(lambda) + "," + s.condition_ids[label] + "\n";
    }

    const fs::path dir = config.out_dir / "latent";
    fs::create_directories(dir);
    write_text(dir / "interpolation.csv", csv);

    Blob vectors;
    vectors.meta["type"] = "interpolation";
    vectors.meta["from"] = from_id;
    vectors.meta["to"] = to_id;
    vectors.meta["steps"] = steps;
    vectors.blocks.emplace_back("w", W);
    vectors.blocks.emplace_back("images", images);
    write_container(dir / "interpolation_vectors.bin", vectors);

    ordered_json params;
    params["config"] = config.to_json();
    params["from"] = from_id;
    params["to"] = to_id;
    params["steps"] = steps;
    write_manifest(config, "interpolate",
                   {"models/mapping.bin", "models/synthesis.bin", "models/gaussians.bin"},
                   {"latent/interpolation.csv", "latent/interpolation_vectors.bin"},
                   std::move(params));
}

void cmd_invert(const RunConfig& config, const std::string& condition_id, std::int64_t steps,
                double step_size) {
    const FitArtifacts art = load_fit_artifacts(config);
    const Scenario& s = art.scenario;
    const std::string id = condition_id.empty() ? s.condition_ids.front() : condition_id;
    const std::size_t ci = condition_index(s, id);
    if (steps < 0) throw std::invalid_argument("invert: steps must be >= 0");

    const RngStream root(config.seed);
    RngStream target_rng = root.substream("invert/target/" + id);
    const LatentVector z_target{LatentSpace::Z, target_rng.normal_vector(config.z_dim)};
    const LatentVector w_target = map_conditional(s.mapping, z_target, s.condition_vectors[ci]);
    const Eigen::VectorXd target = synthesize(s.synthesis, w_target);

    RngStream init_rng = root.substream("invert/init");
    const LatentVector z0{LatentSpace::Z, init_rng.normal_vector(config.z_dim)};
    const LatentVector w0 = map_conditional(s.mapping, z0, s.condition_vectors[ci]);

    const InversionResult res =
        invert_latent(s.synthesis, target, w0, static_cast<int>(steps), step_size);

    const fs::path dir = config.out_dir / "latent";
    fs::create_directories(dir);

    std::string csv = "step,loss\n";
    for (std::size_t k = 0; k < res.loss_trace.size(); ++k)
        csv += std::to_string(k) + "," + fmt(res.loss_trace[k]) + "\n";
    write_text(dir / "inversion_trace.csv", csv);

    Blob result;
    result.meta["type"] = "inversion";
    result.meta["condition"] = id;
    result.meta["steps"] = steps;
    result.meta["step_size"] = step_size;
    result.meta["final_step"] = res.final_step;
    result.meta["halvings"] = res.halvings;
    result.meta["final_loss"] = res.loss_trace.back();
    result.blocks.emplace_back("w", res.w.data.transpose());
    result.blocks.emplace_back("target", target.transpose());
    result.blocks.emplace_back("reconstruction", synthesize(s.synthesis, res.w).transpose());
    write_container(dir / "inversion_result.bin", result);

    ordered_json params;
    params["config"] = config.to_json();
    params["condition"] = id;
    params["steps"] = steps;
    params["step_size"] = step_size;
    params["final_loss"] = res.loss_trace.back();
    write_manifest(config, "invert", {"models/mapping.bin", "models/synthesis.bin"},
                   {"latent/inversion_trace.csv", "latent/inversion_result.bin"},
                   std::move(params));
}

void cmd_wildcard_sample(const RunConfig& config, const std::vector<std::string>& mask,
                         bool stochastic) {
    const FitArtifacts art = load_fit_artifacts(config);
    const Scenario& s = art.scenario;

    std::vector<std::string> fixed_mask = mask;
    if (!stochastic && fixed_mask.empty()) fixed_mask = {"style", "motif"};
    for (const auto& name : fixed_mask) (void)s.schema.index_of(name);  // validates

    const std::size_t style_sub = s.schema.index_of("style");
    const std::size_t motif_sub = s.schema.index_of("motif");
    const std::vector<std::string> motif_tokens(
        s.dataset_spec.motif_pool.begin(),
        s.dataset_spec.motif_pool.begin() +
            std::min<std::size_t>(2, s.dataset_spec.motif_pool.size()));

    const RngStream root(config.seed);
    const fs::path dir = config.out_dir / "latent";
    fs::create_directories(dir);

    Blob vectors;
    vectors.meta["type"] = "wildcard-samples";
    vectors.meta["mode"] = stochastic ? "stochastic" : "fixed";

    std::string csv =
        "sample_id,requested_condition,masked_subconditions,classified_condition,match\n";
    ordered_json match_rates;
    for (std::size_t i = 0; i < s.condition_ids.size(); ++i) {
        const std::string& id = s.condition_ids[i];
        // Fully specified condition: the scenario's palette plus the entry's
        // style and a fixed motif.
        MultiCondition full = s.conditions[i];
        const auto style_index =
            s.schema.subconditions[style_sub].vocab_index(s.dataset_spec.entries[i].style);
        full.values[style_sub] =
            CategoricalValue{style_index ? *style_index : Eigen::Index(0)};
        full.values[motif_sub] = TextValue{motif_tokens};

        RngStream rng = root.substream("wildcard/" + id);
        Eigen::MatrixXd W(config.flip_samples, config.w_dim);
        std::int64_t matches = 0;
        for (Eigen::Index k = 0; k < config.flip_samples; ++k) {
            const MultiCondition masked =
                stochastic ? stochastic_mask(s.schema, full, config.mask_k, config.mask_p, rng)
                           : apply_wildcard(s.schema, full, fixed_mask);
            const Eigen::VectorXd cvec =
                config.condition_gain * assemble_condition_vector(s.schema, masked);
            const LatentVector z{LatentSpace::Z, rng.normal_vector(config.z_dim)};
            const LatentVector w = map_conditional(s.mapping, z, cvec);
            W.row(k) = w.data.transpose();
            const std::size_t label =
                classify(p_transform(w, PDirection::WtoP).data, art.gaussians, art.ridge);
            const bool match = label == i;
            matches += match ? 1 : 0;
            char sid[64];
            std::snprintf(sid, sizeof(sid), "%s-%05lld", id.c_str(),
                          static_cast<long long>(k));
            csv += std::string(sid) + "," + id + "," +
                   join(wildcard_names(s.schema, masked), "|") + "," +
                   s.condition_ids[label] + "," + (match ? "1" : "0") + "\n";
        }
        vectors.blocks.emplace_back(id + ".w", W);
        match_rates[id] =
            static_cast<double>(matches) / static_cast<double>(config.flip_samples);
    }
    vectors.meta["match_rates"] = match_rates;

    write_text(dir / "wildcard_samples.csv", csv);
    write_container(dir / "wildcard_vectors.bin", vectors);

    ordered_json params;
    params["config"] = config.to_json();
    params["mode"] = stochastic ? "stochastic" : "fixed";
    if (stochastic) {
        params["mask_k"] = config.mask_k;
        params["mask_p"] = config.mask_p;
    } else {
        ordered_json blocks = ordered_json::array();
        for (const auto& name : fixed_mask) {
            const std::size_t sub = s.schema.index_of(name);
            blocks.push_back({{"name", name},
                              {"offset", static_cast<std::int64_t>(s.schema.offset_of(sub))},
                              {"dim", static_cast<std::int64_t>(
                                          s.schema.subconditions[sub].dim)}});
        }
        params["zeroed_blocks"] = std::move(blocks);
    }
    params["motif_tokens"] = motif_tokens;
    params["match_rates"] = match_rates;
    write_manifest(config, "wildcard-sample",
                   {"models/mapping.bin", "models/gaussians.bin"},
                   {"latent/wildcard_samples.csv", "latent/wildcard_vectors.bin"},
                   std::move(params));
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path, bool header_row) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path.string());

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 && header_row) continue;
        if (line.empty()) continue;

        std::vector<double> vals;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            std::size_t a = start, b = end;
            while (a < b && (line[a] == ' ' || line[a] == '\t')) ++a;
            while (b > a && (line[b - 1] == ' ' || line[b - 1] == '\t')) --b;
            double v = 0.0;
            const auto res = std::from_chars(line.data() + a, line.data() + b, v);
            if (res.ec != std::errc() || res.ptr != line.data() + b)
                throw data_error(path.string() + ":" + std::to_string(lineno) +
                                 ": bad number '" + line.substr(start, end - start) + "'");
            vals.push_back(v);
            start = end + 1;
        }
        if (!rows.empty() && vals.size() != rows.front().size())
            throw data_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(rows.front().size()) + " columns, found " +
                             std::to_string(vals.size()));
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw data_error(path.string() + ": no data rows");

    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return out;
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header) {
    if (!header.empty() && static_cast<Eigen::Index>(header.size()) != m.cols())
        throw std::invalid_argument("write_matrix_csv: header width mismatch");
    std::string text;
    if (!header.empty()) text = join(header, ",") + "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            text += fmt(m(r, c));
            text += (c + 1 < m.cols()) ? "," : "";
        }
        text += "\n";
    }
    write_text(path, text);
}

} // namespace clat
