#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "clat/mapping.hpp"
#include "clat/rng.hpp"

namespace clat {

struct ConditionGaussian {
    std::string condition_id;
    LatentSpace space = LatentSpace::P;
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;  // symmetric by construction
    std::int64_t sample_count = 0;
    // Set when sample_count < dim + 1 or the covariance is exactly zero;
    // density-based classification is unreliable on such a fit.
    bool degenerate = false;

    Eigen::Index dim() const { return mu.size(); }
};

inline constexpr double kDefaultRidgeScale = 1e-9;

// Unbiased fit (divisor N-1); the covariance is symmetrized explicitly.
ConditionGaussian fit_gaussian(const Eigen::MatrixXd& X, std::string condition_id = {},
                               LatentSpace space = LatentSpace::P);

// ridge_scale * trace(sigma)/n. The set overload averages that quantity so
// every condition gets the same regularizer and the argmax is preserved for
// comparably scaled covariances.
double default_ridge(const ConditionGaussian& g, double ridge_scale = kDefaultRidgeScale);
double default_ridge(const std::vector<ConditionGaussian>& gs,
                     double ridge_scale = kDefaultRidgeScale);

// Prepared log-density evaluator: factors sigma + ridge*I once via Cholesky.
// Works entirely in log space; the density itself underflows at this
// dimensionality long before the log does.
class GaussianDensity {
public:
    GaussianDensity(const ConditionGaussian& g, double ridge);

    double log_pdf(const Eigen::VectorXd& x) const;
    Eigen::VectorXd log_pdf_rows(const Eigen::MatrixXd& X) const;

private:
    Eigen::VectorXd mu_;
    Eigen::MatrixXd chol_lower_;
    double log_norm_ = 0.0;
};

double log_pdf(const Eigen::VectorXd& x, const ConditionGaussian& g, double ridge);

// Argmax of log_pdf across conditions; ties break to the lowest index.
std::size_t classify(const Eigen::VectorXd& x, const std::vector<ConditionGaussian>& gs,
                     double ridge);
std::vector<std::size_t> classify_rows(const Eigen::MatrixXd& X,
                                       const std::vector<ConditionGaussian>& gs, double ridge);

// Fréchet distance between Gaussian fits. The trace term uses the symmetric
// form Tr((S1^1/2 S2 S1^1/2)^1/2); eigenvalues above -1e-6 are clipped to
// zero, anything lower signals a corrupt covariance.
double frechet_distance(const ConditionGaussian& a, const ConditionGaussian& b);

struct FDMatrix {
    std::vector<std::string> ids;
    Eigen::MatrixXd values;             // symmetric, zero diagonal
    std::vector<std::size_t> nearest;   // per condition, index of the closest other one
};

FDMatrix fd_matrix(const std::vector<ConditionGaussian>& gs);

struct PCAProjection {
    Eigen::MatrixXd components;                // k x n, rows orthonormal
    Eigen::VectorXd explained_variance_ratio;  // lambda_i / sum of all lambda
    Eigen::VectorXd mean;
};

struct PCAResult {
    PCAProjection projection;
    Eigen::MatrixXd projected;  // rows x k
};

// Top-k principal components of the sample covariance. Component signs are
// canonical: the entry of largest magnitude is made positive.
PCAResult pca_project(const Eigen::MatrixXd& X, Eigen::Index k);

// Rows are p_transform(map_conditional(z_i, c)) for i.i.d. standard-normal
// z_i, or the raw w rows when space is W.
Eigen::MatrixXd sample_condition_points(const MappingModel& m, const Eigen::VectorXd& cvec,
                                        std::int64_t count, LatentSpace space, RngStream& rng);

} // namespace clat
