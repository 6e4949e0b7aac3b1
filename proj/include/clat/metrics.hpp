#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "clat/container.hpp"

namespace clat {

using WarningList = std::vector<std::string>;

inline constexpr Eigen::Index kDefaultEmbeddingDim = 64;
inline constexpr std::int64_t kFidRecommendedSamples = 50000;

enum class EmbeddingKind { identity, random_projection, external_file };

std::string to_string(EmbeddingKind k);
EmbeddingKind embedding_kind_from_string(const std::string& s);

// Stand-in for a fixed learned feature space: a seeded random projection
// followed by a leaky rectification. Deterministic across processes given
// (kind, dims, seed). The external-file kind marks embeddings that are
// precomputed and loaded, so it never transforms anything itself.
class EmbeddingFunction {
public:
    static EmbeddingFunction identity(Eigen::Index dim);
    static EmbeddingFunction random_projection(Eigen::Index input_dim, Eigen::Index output_dim,
                                               std::uint64_t seed);
    static EmbeddingFunction external_file(Eigen::Index dim);

    EmbeddingKind kind() const { return kind_; }
    Eigen::Index input_dim() const { return input_dim_; }
    Eigen::Index output_dim() const { return output_dim_; }
    std::uint64_t seed() const { return seed_; }

    Eigen::MatrixXd operator()(const Eigen::MatrixXd& rows) const;

private:
    EmbeddingFunction() = default;

    EmbeddingKind kind_ = EmbeddingKind::identity;
    Eigen::Index input_dim_ = 0;
    Eigen::Index output_dim_ = 0;
    std::uint64_t seed_ = 0;
    Eigen::MatrixXd projection_;
};

// Fréchet distance between Gaussian fits of the two embedding sets. Counts
// below kFidRecommendedSamples append a warning, never an error.
double fid(const Eigen::MatrixXd& real, const Eigen::MatrixXd& fake,
           WarningList* warnings = nullptr);

struct JointSample {
    Eigen::VectorXd image_embedding;
    Eigen::VectorXd condition_embedding;
};

// FID over the joint rows [f(x), alpha * h(y)]. alpha = 0 reduces to the
// image-only FID exactly.
double fjd(const Eigen::MatrixXd& real_images, const Eigen::MatrixXd& real_conditions,
           const Eigen::MatrixXd& fake_images, const Eigen::MatrixXd& fake_conditions,
           double alpha, WarningList* warnings = nullptr);
double fjd(const std::vector<JointSample>& real, const std::vector<JointSample>& fake,
           double alpha, WarningList* warnings = nullptr);

// One condition entry with its real and fake embedding sets. support is the
// dataset support used for ranking, not the row count.
struct EntrySet {
    std::string condition;
    std::string entry;
    std::int64_t support = 0;
    Eigen::MatrixXd real;
    Eigen::MatrixXd fake;
};

struct IntraFidResult {
    // (condition, entry, fid) for every kept, scorable entry.
    std::vector<std::tuple<std::string, std::string, double>> per_entry;
    std::vector<std::pair<std::string, double>> per_condition;
    double average = 0.0;
    WarningList warnings;
};

// Per condition, ranks entries by support (descending, entry name as the tie
// break), keeps the top ceil(fraction * entry_count), and averages per-entry
// FID scores. Kept entries with fewer than 2 samples on either side are
// skipped with a warning rather than failing the report.
IntraFidResult intra_fid(const std::vector<EntrySet>& entries, double fraction = 0.5);

// Mean over samples of the per-sample mean of binary correctness entries.
double e_qual(const Eigen::MatrixXd& b);

// min(ceil(prod(c_shape)/10) + 10, n_max)
std::int64_t n_qual(const std::vector<std::int64_t>& c_shape, std::int64_t n_max = 100);

// ((intra_fid_avg + fjd) / 2) * (2 - e_qual)
double e_art(double intra_fid_avg, double fjd_value, double e_qual_score);

struct MetricReport {
    double fid_value = 0.0;
    double fjd_alpha = 0.5;
    double fjd_value = 0.0;
    std::vector<std::pair<std::string, double>> intra_per_condition;
    double intra_average = 0.0;
    std::optional<double> e_qual_score;
    std::int64_t n_qual_value = 0;
    std::optional<double> e_art_score;
    WarningList warnings;

    ordered_json to_json() const;
};

} // namespace clat
