#include "clat/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "clat/error.hpp"
#include "clat/gaussian.hpp"
#include "clat/mapping.hpp"
#include "clat/rng.hpp"

namespace clat {

std::string to_string(EmbeddingKind k) {
    switch (k) {
        case EmbeddingKind::identity: return "identity";
        case EmbeddingKind::random_projection: return "random-projection";
        case EmbeddingKind::external_file: return "external-file";
    }
    throw std::invalid_argument("unhandled EmbeddingKind");
}

EmbeddingKind embedding_kind_from_string(const std::string& s) {
    if (s == "identity") return EmbeddingKind::identity;
    if (s == "random-projection") return EmbeddingKind::random_projection;
    if (s == "external-file") return EmbeddingKind::external_file;
    throw data_error("unknown embedding kind '" + s + "'");
}

EmbeddingFunction EmbeddingFunction::identity(Eigen::Index dim) {
    if (dim < 1) throw std::invalid_argument("EmbeddingFunction: dim < 1");
    EmbeddingFunction f;
    f.kind_ = EmbeddingKind::identity;
    f.input_dim_ = f.output_dim_ = dim;
    return f;
}

EmbeddingFunction EmbeddingFunction::random_projection(Eigen::Index input_dim,
                                                       Eigen::Index output_dim,
                                                       std::uint64_t seed) {
    if (input_dim < 1 || output_dim < 1)
        throw std::invalid_argument("EmbeddingFunction: dimensions must be >= 1");
    EmbeddingFunction f;
    f.kind_ = EmbeddingKind::random_projection;
    f.input_dim_ = input_dim;
    f.output_dim_ = output_dim;
    f.seed_ = seed;
    RngStream rng(seed);
    f.projection_ =
        rng.normal_matrix(output_dim, input_dim) / std::sqrt(static_cast<double>(input_dim));
    return f;
}

EmbeddingFunction EmbeddingFunction::external_file(Eigen::Index dim) {
    if (dim < 1) throw std::invalid_argument("EmbeddingFunction: dim < 1");
    EmbeddingFunction f;
    f.kind_ = EmbeddingKind::external_file;
    f.input_dim_ = f.output_dim_ = dim;
    return f;
}

Eigen::MatrixXd EmbeddingFunction::operator()(const Eigen::MatrixXd& rows) const {
    if (rows.cols() != input_dim_)
        throw std::invalid_argument("embedding: rows have width " + std::to_string(rows.cols()) +
                                    ", expected " + std::to_string(input_dim_));
    switch (kind_) {
        case EmbeddingKind::identity:
            return rows;
        case EmbeddingKind::random_projection: {
            Eigen::MatrixXd h = rows * projection_.transpose();
            h = (h.array() >= 0.0).select(h, kLeakySlope * h);
            return h;
        }
        case EmbeddingKind::external_file:
            throw data_error("external-file embeddings are precomputed; load them from the "
                             "embedding file instead of applying the function");
    }
    throw std::invalid_argument("unhandled EmbeddingKind");
}

namespace {

void warn_small(const char* which, Eigen::Index count, WarningList* warnings) {
    if (warnings && count < kFidRecommendedSamples)
        warnings->push_back(std::string("fid: ") + which + " set has " + std::to_string(count) +
                            " samples, below the recommended " +
                            std::to_string(kFidRecommendedSamples));
}

} // namespace

double fid(const Eigen::MatrixXd& real, const Eigen::MatrixXd& fake, WarningList* warnings) {
    if (real.cols() != fake.cols())
        throw std::invalid_argument("fid: embedding widths differ (" +
                                    std::to_string(real.cols()) + " vs " +
                                    std::to_string(fake.cols()) + ")");
    if (real.rows() < 2 || fake.rows() < 2)
        throw std::invalid_argument("fid: both sets need at least 2 samples");
    warn_small("real", real.rows(), warnings);
    warn_small("fake", fake.rows(), warnings);
    return frechet_distance(fit_gaussian(real, "real"), fit_gaussian(fake, "fake"));
}

double fjd(const Eigen::MatrixXd& real_images, const Eigen::MatrixXd& real_conditions,
           const Eigen::MatrixXd& fake_images, const Eigen::MatrixXd& fake_conditions,
           double alpha, WarningList* warnings) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw std::invalid_argument("fjd: alpha must be finite and >= 0");
    if (real_images.rows() != real_conditions.rows() ||
        fake_images.rows() != fake_conditions.rows())
        throw std::invalid_argument("fjd: image and condition row counts differ");
    if (real_conditions.cols() != fake_conditions.cols())
        throw std::invalid_argument("fjd: condition widths differ");

    const Eigen::Index img_w = real_images.cols();
    const Eigen::Index cond_w = real_conditions.cols();
    Eigen::MatrixXd real_joint(real_images.rows(), img_w + cond_w);
    real_joint << real_images, alpha * real_conditions;
    Eigen::MatrixXd fake_joint(fake_images.rows(), img_w + cond_w);
    fake_joint << fake_images, alpha * fake_conditions;
    return fid(real_joint, fake_joint, warnings);
}

namespace {

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> stack_joint(const std::vector<JointSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("fjd: empty sample list");
    const Eigen::Index img_w = samples.front().image_embedding.size();
    const Eigen::Index cond_w = samples.front().condition_embedding.size();
    Eigen::MatrixXd images(static_cast<Eigen::Index>(samples.size()), img_w);
    Eigen::MatrixXd conditions(static_cast<Eigen::Index>(samples.size()), cond_w);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].image_embedding.size() != img_w ||
            samples[i].condition_embedding.size() != cond_w)
            throw std::invalid_argument("fjd: inconsistent widths in sample list");
        images.row(static_cast<Eigen::Index>(i)) = samples[i].image_embedding.transpose();
        conditions.row(static_cast<Eigen::Index>(i)) = samples[i].condition_embedding.transpose();
    }
    return {std::move(images), std::move(conditions)};
}

} // namespace

double fjd(const std::vector<JointSample>& real, const std::vector<JointSample>& fake,
           double alpha, WarningList* warnings) {
    const auto [real_images, real_conditions] = stack_joint(real);
    const auto [fake_images, fake_conditions] = stack_joint(fake);
    return fjd(real_images, real_conditions, fake_images, fake_conditions, alpha, warnings);
}

IntraFidResult intra_fid(const std::vector<EntrySet>& entries, double fraction) {
    if (entries.empty()) throw std::invalid_argument("intra_fid: no entries");
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("intra_fid: fraction outside (0, 1]");

    // Group by condition, preserving first-appearance order.
    std::vector<std::string> conditions;
    for (const auto& e : entries)
        if (std::find(conditions.begin(), conditions.end(), e.condition) == conditions.end())
            conditions.push_back(e.condition);

    IntraFidResult res;
    double condition_sum = 0.0;
    std::size_t condition_count = 0;

    for (const auto& cond : conditions) {
        std::vector<const EntrySet*> group;
        for (const auto& e : entries)
            if (e.condition == cond) group.push_back(&e);
        std::sort(group.begin(), group.end(), [](const EntrySet* a, const EntrySet* b) {
            if (a->support != b->support) return a->support > b->support;
            return a->entry < b->entry;
        });
        const auto keep = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(group.size())));

        double entry_sum = 0.0;
        std::size_t entry_count = 0;
        for (std::size_t i = 0; i < keep; ++i) {
            const EntrySet& e = *group[i];
            if (e.real.rows() < 2 || e.fake.rows() < 2) {
                res.warnings.push_back("intra_fid: entry '" + e.condition + "/" + e.entry +
                                       "' skipped, fewer than 2 samples on one side");
                continue;
            }
            const double score = fid(e.real, e.fake, nullptr);
            res.per_entry.emplace_back(e.condition, e.entry, score);
            entry_sum += score;
            ++entry_count;
        }
        if (entry_count == 0) {
            res.warnings.push_back("intra_fid: condition '" + cond +
                                   "' has no scorable entries and is excluded from the average");
            continue;
        }
        const double avg = entry_sum / static_cast<double>(entry_count);
        res.per_condition.emplace_back(cond, avg);
        condition_sum += avg;
        ++condition_count;
    }

    if (condition_count == 0) throw data_error("intra_fid: no scorable entries in any condition");
    res.average = condition_sum / static_cast<double>(condition_count);
    return res;
}

double e_qual(const Eigen::MatrixXd& b) {
    if (b.rows() < 1 || b.cols() < 1) throw std::invalid_argument("e_qual: empty matrix");
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            if (b(i, j) != 0.0 && b(i, j) != 1.0)
                throw std::invalid_argument("e_qual: entries must be exactly 0 or 1");
    double sample_sum = 0.0;
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        sample_sum += b.row(i).mean();
    return sample_sum / static_cast<double>(b.rows());
}

std::int64_t n_qual(const std::vector<std::int64_t>& c_shape, std::int64_t n_max) {
    if (c_shape.empty()) throw std::invalid_argument("n_qual: empty shape");
    if (n_max < 1) throw std::invalid_argument("n_qual: n_max < 1");
    std::uint64_t prod = 1;
    for (const std::int64_t e : c_shape) {
        if (e < 1) throw std::invalid_argument("n_qual: shape entries must be >= 1");
        prod *= static_cast<std::uint64_t>(e);
        // Once ceil(prod/10) + 10 reaches the cap the result cannot change;
        // clamping here also keeps the product from overflowing.
        if (prod >= 10 * static_cast<std::uint64_t>(n_max)) return n_max;
    }
    const auto raw = static_cast<std::int64_t>((prod + 9) / 10) + 10;
    return std::min(raw, n_max);
}

double e_art(double intra_fid_avg, double fjd_value, double e_qual_score) {
    if (!std::isfinite(intra_fid_avg) || intra_fid_avg < 0.0)
        throw std::invalid_argument("e_art: intra-fid average must be finite and >= 0");
    if (!std::isfinite(fjd_value) || fjd_value < 0.0)
        throw std::invalid_argument("e_art: fjd must be finite and >= 0");
    if (!(e_qual_score >= 0.0 && e_qual_score <= 1.0))
        throw std::invalid_argument("e_art: e_qual outside [0, 1]");
    return 0.5 * (intra_fid_avg + fjd_value) * (2.0 - e_qual_score);
}

ordered_json MetricReport::to_json() const {
    ordered_json j;
    j["fid"] = fid_value;
    j["fjd"] = {{"alpha", fjd_alpha}, {"value", fjd_value}};
    ordered_json per = ordered_json::object();
    for (const auto& [cond, score] : intra_per_condition) per[cond] = score;
    j["intra_fid"] = {{"per_condition", per}, {"average", intra_average}};
    if (e_qual_score) j["e_qual"] = *e_qual_score;
    j["n_qual"] = n_qual_value;
    if (e_art_score) j["e_art"] = *e_art_score;
    j["warnings"] = warnings;
    return j;
}

} // namespace clat
