#include "clat/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "clat/error.hpp"

namespace clat {

namespace {

constexpr double kEigenCorruptTol = -1e-6;

// Clip small negative eigenvalues of a nominally PSD matrix; reject anything
// below the corruption tolerance.
Eigen::VectorXd clip_spectrum(const Eigen::VectorXd& eigenvalues, const std::string& what) {
    Eigen::VectorXd out = eigenvalues;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        if (out(i) < kEigenCorruptTol)
            throw numeric_error(what + ": eigenvalue " + std::to_string(out(i)) +
                                " below tolerance, covariance is corrupt");
        if (out(i) < 0.0) out(i) = 0.0;
    }
    return out;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& s, const std::string& what) {
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    if (((s - s.transpose()).cwiseAbs().maxCoeff()) > 1e-10 * scale)
        throw std::invalid_argument(what + ": covariance is not symmetric");
    return 0.5 * (s + s.transpose());
}

} // namespace

ConditionGaussian fit_gaussian(const Eigen::MatrixXd& X, std::string condition_id,
                               LatentSpace space) {
    if (X.rows() < 2)
        throw std::invalid_argument("fit_gaussian: need at least 2 samples, got " +
                                    std::to_string(X.rows()));
    if (!X.allFinite()) throw std::invalid_argument("fit_gaussian: non-finite samples");

    ConditionGaussian g;
    g.condition_id = std::move(condition_id);
    g.space = space;
    g.sample_count = X.rows();
    g.mu = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - g.mu.transpose();
    Eigen::MatrixXd s =
        (centered.transpose() * centered) / static_cast<double>(X.rows() - 1);
    g.sigma = 0.5 * (s + s.transpose());
    g.degenerate = g.sample_count < g.dim() + 1 || g.sigma.cwiseAbs().maxCoeff() == 0.0;
    return g;
}

double default_ridge(const ConditionGaussian& g, double ridge_scale) {
    return ridge_scale * g.sigma.trace() / static_cast<double>(g.dim());
}

double default_ridge(const std::vector<ConditionGaussian>& gs, double ridge_scale) {
    if (gs.empty()) throw std::invalid_argument("default_ridge: empty Gaussian list");
    double acc = 0.0;
    for (const auto& g : gs) acc += default_ridge(g, ridge_scale);
    return acc / static_cast<double>(gs.size());
}

GaussianDensity::GaussianDensity(const ConditionGaussian& g, double ridge) : mu_(g.mu) {
    if (ridge < 0.0) throw std::invalid_argument("GaussianDensity: negative ridge");
    Eigen::MatrixXd s = g.sigma;
    s.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success)
        throw numeric_error("covariance factorization failed for condition '" + g.condition_id +
                            "' (ridge " + std::to_string(ridge) + "); covariance is ill-conditioned");
    chol_lower_ = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < chol_lower_.rows(); ++i)
        log_det += 2.0 * std::log(chol_lower_(i, i));
    log_norm_ = -0.5 * (static_cast<double>(mu_.size()) * std::log(2.0 * std::numbers::pi) +
                        log_det);
}

double GaussianDensity::log_pdf(const Eigen::VectorXd& x) const {
    if (x.size() != mu_.size())
        throw std::invalid_argument("log_pdf: vector has length " + std::to_string(x.size()) +
                                    ", Gaussian has dimension " + std::to_string(mu_.size()));
    Eigen::VectorXd y = x - mu_;
    chol_lower_.triangularView<Eigen::Lower>().solveInPlace(y);
    return log_norm_ - 0.5 * y.squaredNorm();
}

Eigen::VectorXd GaussianDensity::log_pdf_rows(const Eigen::MatrixXd& X) const {
    if (X.cols() != mu_.size())
        throw std::invalid_argument("log_pdf_rows: rows have width " + std::to_string(X.cols()) +
                                    ", Gaussian has dimension " + std::to_string(mu_.size()));
    Eigen::MatrixXd y = (X.rowwise() - mu_.transpose()).transpose();
    chol_lower_.triangularView<Eigen::Lower>().solveInPlace(y);
    return log_norm_ - 0.5 * y.colwise().squaredNorm().array();
}

double log_pdf(const Eigen::VectorXd& x, const ConditionGaussian& g, double ridge) {
    return GaussianDensity(g, ridge).log_pdf(x);
}

namespace {

void check_classify_args(const std::vector<ConditionGaussian>& gs) {
    if (gs.empty()) throw std::invalid_argument("classify: empty Gaussian list");
    for (const auto& g : gs)
        if (g.dim() != gs.front().dim())
            throw std::invalid_argument("classify: Gaussians have mixed dimensions");
}

} // namespace

std::size_t classify(const Eigen::VectorXd& x, const std::vector<ConditionGaussian>& gs,
                     double ridge) {
    check_classify_args(gs);
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < gs.size(); ++i) {
        const double score = GaussianDensity(gs[i], ridge).log_pdf(x);
        if (score > best_score) {  // strict: ties keep the lowest index
            best_score = score;
            best = i;
        }
    }
    return best;
}

std::vector<std::size_t> classify_rows(const Eigen::MatrixXd& X,
                                       const std::vector<ConditionGaussian>& gs, double ridge) {
    check_classify_args(gs);
    std::vector<GaussianDensity> densities;
    densities.reserve(gs.size());
    for (const auto& g : gs) densities.emplace_back(g, ridge);

    const Eigen::Index n = X.rows();
    std::vector<std::size_t> labels(static_cast<std::size_t>(n), 0);

    for (Eigen::Index start = 0; start < n; start += kSampleBatch) {
        const Eigen::Index len = std::min(kSampleBatch, n - start);
        const Eigen::MatrixXd chunk = X.middleRows(start, len);
        Eigen::VectorXd best = densities[0].log_pdf_rows(chunk);
        for (std::size_t c = 1; c < densities.size(); ++c) {
            const Eigen::VectorXd scores = densities[c].log_pdf_rows(chunk);
            for (Eigen::Index r = 0; r < len; ++r) {
                if (scores(r) > best(r)) {
                    best(r) = scores(r);
                    labels[static_cast<std::size_t>(start + r)] = c;
                }
            }
        }
    }
    return labels;
}

double frechet_distance(const ConditionGaussian& a, const ConditionGaussian& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("frechet_distance: dimension mismatch (" +
                                    std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) +
                                    ")");
    if (a.space != b.space)
        throw std::invalid_argument("frechet_distance: Gaussians live in different spaces");

    const Eigen::MatrixXd s1 = symmetrized(a.sigma, "frechet_distance");
    const Eigen::MatrixXd s2 = symmetrized(b.sigma, "frechet_distance");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(s1);
    if (es1.info() != Eigen::Success)
        throw numeric_error("frechet_distance: eigendecomposition failed");
    const Eigen::VectorXd l1 = clip_spectrum(es1.eigenvalues(), "frechet_distance");
    const Eigen::MatrixXd sqrt1 = es1.eigenvectors() * l1.cwiseSqrt().asDiagonal() *
                                  es1.eigenvectors().transpose();

    Eigen::MatrixXd inner = sqrt1 * s2 * sqrt1;
    inner = 0.5 * (inner + inner.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(inner);
    if (es2.info() != Eigen::Success)
        throw numeric_error("frechet_distance: eigendecomposition failed");
    const Eigen::VectorXd li = clip_spectrum(es2.eigenvalues(), "frechet_distance");

    const double fd2 = (a.mu - b.mu).squaredNorm() + s1.trace() + s2.trace() -
                       2.0 * li.cwiseSqrt().sum();
    return std::sqrt(std::max(fd2, 0.0));
}

FDMatrix fd_matrix(const std::vector<ConditionGaussian>& gs) {
    if (gs.size() < 2) throw std::invalid_argument("fd_matrix: need at least 2 Gaussians");

    FDMatrix out;
    out.ids.reserve(gs.size());
    for (const auto& g : gs) out.ids.push_back(g.condition_id);

    const auto n = static_cast<Eigen::Index>(gs.size());
    out.values = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double fd = frechet_distance(gs[static_cast<std::size_t>(i)],
                                               gs[static_cast<std::size_t>(j)]);
            out.values(i, j) = fd;
            out.values(j, i) = fd;
        }

    out.nearest.resize(gs.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = -1;
        double best_fd = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            if (out.values(i, j) < best_fd) {
                best_fd = out.values(i, j);
                best = j;
            }
        }
        out.nearest[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
    }
    return out;
}

PCAResult pca_project(const Eigen::MatrixXd& X, Eigen::Index k) {
    const Eigen::Index n = X.cols();
    if (k < 1 || k > std::min(X.rows() - 1, n))
        throw std::invalid_argument("pca_project: k must be in [1, min(rows-1, cols)]");
    if (!X.allFinite()) throw std::invalid_argument("pca_project: non-finite samples");

    PCAResult res;
    res.projection.mean = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - res.projection.mean.transpose();
    Eigen::MatrixXd s = (centered.transpose() * centered) / static_cast<double>(X.rows() - 1);
    s = 0.5 * (s + s.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.info() != Eigen::Success) throw numeric_error("pca_project: eigendecomposition failed");

    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += std::max(es.eigenvalues()(i), 0.0);

    res.projection.components.resize(k, n);
    res.projection.explained_variance_ratio.resize(k);
    for (Eigen::Index out = 0; out < k; ++out) {
        const Eigen::Index src = n - 1 - out;  // eigenvalues come back ascending
        Eigen::VectorXd v = es.eigenvectors().col(src);
        Eigen::Index peak = 0;
        v.cwiseAbs().maxCoeff(&peak);
        if (v(peak) < 0.0) v = -v;
        res.projection.components.row(out) = v.transpose();
        res.projection.explained_variance_ratio(out) =
            total > 0.0 ? std::max(es.eigenvalues()(src), 0.0) / total : 0.0;
    }
    res.projected = centered * res.projection.components.transpose();
    return res;
}

Eigen::MatrixXd sample_condition_points(const MappingModel& m, const Eigen::VectorXd& cvec,
                                        std::int64_t count, LatentSpace space, RngStream& rng) {
    if (count < 1) throw std::invalid_argument("sample_condition_points: count < 1");
    if (space != LatentSpace::W && space != LatentSpace::P)
        throw std::invalid_argument("sample_condition_points: target space must be W or P");

    Eigen::MatrixXd out(count, m.w_dim);
    for (Eigen::Index start = 0; start < count; start += kSampleBatch) {
        const Eigen::Index len = std::min(kSampleBatch, static_cast<Eigen::Index>(count) - start);
        const Eigen::MatrixXd z = rng.normal_matrix(len, m.z_dim);
        out.middleRows(start, len) = map_conditional_batch(m, z, cvec);
    }
    if (space == LatentSpace::P) out = p_transform_rows(out, PDirection::WtoP);
    return out;
}

} // namespace clat
