#include "clat/dataset.hpp"

#include <cmath>
#include <cstdio>

#include "clat/container.hpp"
#include "clat/error.hpp"
#include "clat/rng.hpp"

namespace clat {

SyntheticDatasetSpec bundled_dataset_spec(Eigen::Index image_dim) {
    if (image_dim < 5) throw std::invalid_argument("bundled_dataset_spec: image_dim < 5");

    auto blob = [image_dim](Eigen::Index axis, Eigen::Index side_axis, double side) {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(image_dim);
        m(axis) = 4.0;
        if (side != 0.0) m(side_axis) = side;
        return m;
    };

    SyntheticDatasetSpec spec;
    spec.image_dim = image_dim;
    spec.motif_pool = {"arch", "bloom", "crest",  "dune",  "ember", "fjord",
                       "glade", "harbor", "isle", "jetty", "knoll", "lagoon"};
    // Two close pairs plus one isolated entry. The pairs share a primary axis
    // and palette pair and differ only in a small secondary component, so
    // their fitted Gaussians end up mutual nearest neighbours.
    spec.entries = {
        {"crimson", {{"p0", 0.6}, {"p1", 0.4}}, blob(0, 1, 1.2), 1.0, 400},
        {"scarlet", {{"p0", 0.4}, {"p1", 0.6}}, blob(0, 1, -1.2), 1.0, 300},
        {"teal", {{"p2", 0.6}, {"p3", 0.4}}, blob(2, 3, 1.2), 1.0, 250},
        {"turquoise", {{"p2", 0.4}, {"p3", 0.6}}, blob(2, 3, -1.2), 1.0, 200},
        {"olive", {{"p4", 0.5}, {"p5", 0.5}}, blob(4, 0, 0.0), 1.0, 150},
    };
    return spec;
}

namespace {

void check_spec(const SyntheticDatasetSpec& spec) {
    if (spec.image_dim < 1) throw std::invalid_argument("gen_dataset: image_dim < 1");
    if (spec.entries.empty()) throw std::invalid_argument("gen_dataset: no entries");
    if (spec.motif_min < 0 || spec.motif_max < spec.motif_min)
        throw std::invalid_argument("gen_dataset: bad motif token range");
    if (spec.motif_min > 0 && spec.motif_pool.empty())
        throw std::invalid_argument("gen_dataset: motif tokens requested but the pool is empty");
    for (const auto& entry : spec.entries) {
        if (entry.style.empty()) throw std::invalid_argument("gen_dataset: entry without a style");
        if (entry.count < 1)
            throw std::invalid_argument("gen_dataset: entry '" + entry.style + "' has count < 1");
        if (entry.image_mean.size() != spec.image_dim)
            throw std::invalid_argument("gen_dataset: entry '" + entry.style +
                                        "' has no generator parameters for image_dim " +
                                        std::to_string(spec.image_dim));
        if (!entry.image_mean.allFinite() || !std::isfinite(entry.image_spread) ||
            entry.image_spread < 0.0)
            throw std::invalid_argument("gen_dataset: entry '" + entry.style +
                                        "' has non-finite generator parameters");
        if (entry.palette.empty())
            throw std::invalid_argument("gen_dataset: entry '" + entry.style +
                                        "' has an empty palette");
        if (spec.palette_draws < 1)
            throw std::invalid_argument("gen_dataset: palette_draws < 1");
        double total = 0.0;
        for (const auto& [outcome, weight] : entry.palette) {
            if (!std::isfinite(weight) || weight < 0.0)
                throw std::invalid_argument("gen_dataset: entry '" + entry.style +
                                            "' has a bad weight for '" + outcome + "'");
            total += weight;
        }
        if (total <= 0.0)
            throw std::invalid_argument("gen_dataset: entry '" + entry.style +
                                        "' has zero palette mass");
    }
}

std::map<std::string, double> resample_palette(const std::map<std::string, double>& weights,
                                               std::int64_t draws, RngStream& rng) {
    double total = 0.0;
    for (const auto& [outcome, weight] : weights) total += weight;

    std::map<std::string, std::int64_t> counts;
    for (std::int64_t d = 0; d < draws; ++d) {
        const double u = rng.uniform() * total;
        double cum = 0.0;
        const std::string* hit = nullptr;
        for (const auto& [outcome, weight] : weights) {
            cum += weight;
            if (u < cum) {
                hit = &outcome;
                break;
            }
        }
        if (!hit) hit = &weights.rbegin()->first;  // u landed on accumulated rounding
        ++counts[*hit];
    }

    std::map<std::string, double> out;
    for (const auto& [outcome, count] : counts)
        out[outcome] = static_cast<double>(count) / static_cast<double>(draws);
    return out;
}

} // namespace

GeneratedDataset gen_dataset(const SyntheticDatasetSpec& spec, std::uint64_t seed) {
    check_spec(spec);

    std::int64_t total = 0;
    for (const auto& entry : spec.entries) total += entry.count;

    GeneratedDataset out;
    out.records.reserve(static_cast<std::size_t>(total));
    out.images.resize(total, spec.image_dim);

    const RngStream root(seed);
    Eigen::Index row = 0;
    for (const auto& entry : spec.entries) {
        RngStream rng = root.substream("dataset/" + entry.style);
        for (std::int64_t i = 0; i < entry.count; ++i) {
            DatasetRecord rec;
            char id[128];
            std::snprintf(id, sizeof(id), "%s-%04lld", entry.style.c_str(),
                          static_cast<long long>(i));
            rec.sample_id = id;
            rec.image_id = rec.sample_id;
            rec.categorical["style"] = entry.style;
            if (!entry.palette.empty())
                rec.distribution["palette"] =
                    resample_palette(entry.palette, spec.palette_draws, rng);
            if (!spec.motif_pool.empty() && spec.motif_max > 0) {
                const std::int64_t n = rng.uniform_int(spec.motif_min, spec.motif_max);
                std::vector<std::string> tokens;
                tokens.reserve(static_cast<std::size_t>(n));
                for (std::int64_t t = 0; t < n; ++t)
                    tokens.push_back(spec.motif_pool[static_cast<std::size_t>(rng.uniform_int(
                        0, static_cast<std::int64_t>(spec.motif_pool.size()) - 1))]);
                if (!tokens.empty()) rec.text["motif"] = std::move(tokens);
            }
            out.images.row(row) =
                entry.image_mean.transpose() +
                entry.image_spread * rng.normal_vector(spec.image_dim).transpose();
            out.records.push_back(std::move(rec));
            ++row;
        }
    }
    return out;
}

void save_dataset(const std::string& jsonl_path, const std::string& container_path,
                  const GeneratedDataset& dataset) {
    if (dataset.images.rows() != static_cast<Eigen::Index>(dataset.records.size()))
        throw std::invalid_argument("save_dataset: image rows and record count differ");
    write_jsonl(jsonl_path, dataset.records);

    Blob blob;
    blob.meta["type"] = "dataset-images";
    ordered_json ids = ordered_json::array();
    for (const auto& rec : dataset.records) ids.push_back(rec.sample_id);
    blob.meta["sample_ids"] = std::move(ids);
    blob.blocks.emplace_back("images", dataset.images);
    write_container(container_path, blob);
}

GeneratedDataset load_dataset(const std::string& jsonl_path,
                              const std::string& container_path) {
    GeneratedDataset out;
    out.records = read_jsonl(jsonl_path);

    const Blob blob = read_container(container_path);
    if (!blob.meta.contains("type") || blob.meta["type"] != "dataset-images")
        throw data_error(container_path + ": not a dataset-images container");
    out.images = blob.block("images");
    if (out.images.rows() != static_cast<Eigen::Index>(out.records.size()))
        throw data_error(container_path + ": " + std::to_string(out.images.rows()) +
                         " image rows for " + std::to_string(out.records.size()) +
                         " metadata records");
    if (blob.meta.contains("sample_ids")) {
        const auto& ids = blob.meta["sample_ids"];
        if (ids.size() != out.records.size())
            throw data_error(container_path + ": sample_ids length mismatch");
        for (std::size_t i = 0; i < out.records.size(); ++i)
            if (ids[i].get<std::string>() != out.records[i].sample_id)
                throw data_error(container_path + ": sample_ids disagree with metadata at row " +
                                 std::to_string(i));
    }
    return out;
}

} // namespace clat
