#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clat/condition.hpp"

namespace clat {

// One categorical entry of the synthetic dataset: every record generated for
// it carries the style label, a noisy version of the palette weights, a few
// motif tokens, and an image vector drawn from a Gaussian blob around
// image_mean.
struct EntrySpec {
    std::string style;
    std::map<std::string, double> palette;
    Eigen::VectorXd image_mean;
    double image_spread = 1.0;
    std::int64_t count = 0;
};

struct SyntheticDatasetSpec {
    Eigen::Index image_dim = 0;
    // Draws per record when resampling the palette weights as empirical
    // frequencies; more draws concentrate records around the entry weights.
    std::int64_t palette_draws = 7;
    std::vector<std::string> motif_pool;
    std::int64_t motif_min = 2;
    std::int64_t motif_max = 4;
    std::vector<EntrySpec> entries;
};

struct GeneratedDataset {
    std::vector<DatasetRecord> records;
    Eigen::MatrixXd images;  // one row per record, same order
};

// The scenario shipped with the CLI: five styles in two close pairs plus one
// isolated, so nearest-neighbour structure is known in advance on both the
// palette weights and the image blobs.
SyntheticDatasetSpec bundled_dataset_spec(Eigen::Index image_dim = 192);

GeneratedDataset gen_dataset(const SyntheticDatasetSpec& spec, std::uint64_t seed);

void save_dataset(const std::string& jsonl_path, const std::string& container_path,
                  const GeneratedDataset& dataset);
GeneratedDataset load_dataset(const std::string& jsonl_path,
                              const std::string& container_path);

} // namespace clat
