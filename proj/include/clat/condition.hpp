#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "clat/container.hpp"
#include "clat/rng.hpp"

namespace clat {

enum class SubKind { categorical, distribution, text_embedding };

std::string to_string(SubKind k);
SubKind sub_kind_from_string(const std::string& s);

// Fold target for rare categorical labels. A real vocabulary entry, not a
// wildcard: "Unknown" carries information ("rare label"), a wildcard carries
// none.
inline constexpr const char* kUnknownLabel = "Unknown";

struct SubConditionDescriptor {
    std::string name;
    SubKind kind = SubKind::categorical;
    Eigen::Index dim = 0;
    // One-hot order for categorical, outcome order for distribution, empty
    // for text embeddings.
    std::vector<std::string> vocab;

    std::optional<Eigen::Index> vocab_index(const std::string& label) const;
};

struct ConditionSchema {
    std::vector<SubConditionDescriptor> subconditions;

    Eigen::Index total_dim() const;
    Eigen::Index offset_of(std::size_t sub) const;
    std::size_t index_of(const std::string& name) const;  // data_error if absent
    const SubConditionDescriptor& sub(const std::string& name) const;

    ordered_json to_json() const;
    static ConditionSchema from_json(const ordered_json& j);
};

struct Wildcard {};
struct CategoricalValue { Eigen::Index index = 0; };
struct DistributionValue { Eigen::VectorXd weights; };  // non-negative, positive total
struct TextValue { std::vector<std::string> tokens; };

using ConditionValue = std::variant<Wildcard, CategoricalValue, DistributionValue, TextValue>;

// One value per schema sub-condition, in schema order.
struct MultiCondition {
    std::vector<ConditionValue> values;
};

struct DatasetRecord {
    std::string sample_id;
    std::map<std::string, std::string> categorical;
    std::map<std::string, std::map<std::string, double>> distribution;
    std::map<std::string, std::vector<std::string>> text;
    std::string image_id;  // defaults to sample_id when absent in files
};

struct IngestResult {
    ConditionSchema schema;
    // Per sub-condition, records per entry after folding. Distribution
    // sub-conditions count records by their argmax outcome; text
    // sub-conditions have no entries.
    std::map<std::string, std::map<std::string, std::int64_t>> support;
};

// Builds a schema from raw records. Categorical labels seen fewer than
// min_count times fold into the Unknown entry, which always sits at index 0;
// surviving labels follow in lexicographic order. Sub-conditions are ordered
// categorical, distribution, text, each group sorted by name.
IngestResult ingest_metadata(const std::vector<DatasetRecord>& records,
                             std::int64_t min_count = 100,
                             Eigen::Index text_dim = 32);

Eigen::VectorXd encode_subcondition(const SubConditionDescriptor& d, const ConditionValue& v);

// Concatenation of the per-sub-condition encodings; wildcards contribute a
// zero block.
Eigen::VectorXd assemble_condition_vector(const ConditionSchema& schema, const MultiCondition& c);

// Functional: returns a copy with the named sub-conditions replaced by
// wildcards; the input is untouched.
MultiCondition apply_wildcard(const ConditionSchema& schema, const MultiCondition& c,
                              const std::vector<std::string>& names);

// Draws k sub-conditions without replacement and masks each with probability
// p. The expected fraction of masked sub-conditions is k*p/|S|.
MultiCondition stochastic_mask(const ConditionSchema& schema, const MultiCondition& c,
                               std::size_t k, double p, RngStream& rng);

// Entry count per sub-condition: vocabulary size for categorical and
// distribution kinds, embedding width for text.
std::vector<std::int64_t> condition_shape(const ConditionSchema& schema);

// Schema-aligned condition for a record. Missing annotations become
// wildcards; categorical labels outside the vocabulary map to Unknown.
MultiCondition record_to_condition(const ConditionSchema& schema, const DatasetRecord& r);

// Hashed-token unit-norm embedding used for text sub-conditions: each token
// adds +-1 (by hash bit) at coordinate fnv1a64(token) % dim, then the sum is
// L2-normalized.
Eigen::VectorXd embed_tokens(const std::vector<std::string>& tokens, Eigen::Index dim);

std::vector<DatasetRecord> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<DatasetRecord>& records);

} // namespace clat
