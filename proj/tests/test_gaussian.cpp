#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "clat/error.hpp"
#include "clat/gaussian.hpp"
#include "clat/rng.hpp"
#include "test_util.hpp"

using namespace clat;

namespace {

ConditionGaussian make_gaussian(std::string id, Eigen::VectorXd mu, Eigen::MatrixXd sigma) {
    ConditionGaussian g;
    g.condition_id = std::move(id);
    g.mu = std::move(mu);
    g.sigma = std::move(sigma);
    g.sample_count = 2 * g.mu.size() + 2;
    return g;
}

// Naive log-density oracle from the textbook formula with an explicit
// inverse and determinant; numerically careless on purpose, fine at 5-D.
double log_pdf_oracle(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                      const Eigen::MatrixXd& sigma) {
    const auto n = static_cast<double>(mu.size());
    const Eigen::VectorXd d = x - mu;
    const double quad = d.dot(sigma.inverse() * d);
    return -0.5 * (n * std::log(2.0 * std::numbers::pi) + std::log(sigma.determinant()) + quad);
}

// Fréchet distance oracle via the textbook trace form
// |mu1-mu2|^2 + tr(S1 + S2 - 2 (S1 S2)^(1/2)), with the matrix square root
// taken through a (generally non-symmetric) eigendecomposition of S1*S2.
double frechet_oracle(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1,
                      const Eigen::VectorXd& mu2, const Eigen::MatrixXd& s2) {
    const Eigen::MatrixXd prod = s1 * s2;
    Eigen::EigenSolver<Eigen::MatrixXd> es(prod);
    double sqrt_trace = 0.0;
    for (Eigen::Index i = 0; i < prod.rows(); ++i) {
        const std::complex<double> lam = es.eigenvalues()(i);
        sqrt_trace += std::sqrt(std::max(0.0, lam.real()));
    }
    const double d2 =
        (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * sqrt_trace;
    return std::sqrt(std::max(0.0, d2));
}

} // namespace

TEST_CASE("fit_gaussian reproduces the hand-worked two-point example") {
    Eigen::MatrixXd X(2, 2);
    X << 0.0, 0.0, 2.0, 2.0;
    const ConditionGaussian g = fit_gaussian(X, "pair");

    CHECK(g.mu(0) == 1.0);
    CHECK(g.mu(1) == 1.0);
    // Unbiased divisor N-1 = 1: outer products sum to [[2,2],[2,2]].
    CHECK(g.sigma(0, 0) == 2.0);
    CHECK(g.sigma(0, 1) == 2.0);
    CHECK(g.sigma(1, 0) == 2.0);
    CHECK(g.sigma(1, 1) == 2.0);
    CHECK(g.sample_count == 2);
    CHECK(g.degenerate);  // 2 samples < dim + 1 = 3

    CHECK_THROWS_AS((void)fit_gaussian(Eigen::MatrixXd::Zero(1, 2)), std::invalid_argument);
}

TEST_CASE("fit_gaussian flags degenerate fits") {
    RngStream rng(41);
    const Eigen::MatrixXd X = rng.normal_matrix(10, 3);
    CHECK_FALSE(fit_gaussian(X).degenerate);
    CHECK(fit_gaussian(X.topRows(3)).degenerate);  // count == dim < dim + 1
    CHECK(fit_gaussian(Eigen::MatrixXd::Ones(10, 3)).degenerate);  // zero covariance
}

TEST_CASE("fitted covariance is exactly symmetric") {
    RngStream rng(43);
    const ConditionGaussian g = fit_gaussian(rng.normal_matrix(200, 6));
    CHECK((g.sigma - g.sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("log_pdf matches the closed form for a standard normal") {
    const ConditionGaussian g =
        make_gaussian("std", Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
    // -log(sqrt(2 pi)) at the mean.
    CHECK(log_pdf(Eigen::VectorXd::Zero(1), g, 0.0) ==
          doctest::Approx(-0.9189385332046727).epsilon(1e-12));
    Eigen::VectorXd x(1);
    x << 2.0;
    CHECK(log_pdf(x, g, 0.0) == doctest::Approx(-0.9189385332046727 - 2.0).epsilon(1e-12));
}

TEST_CASE("log_pdf matches a naive dense oracle on random 5-D fits") {
    RngStream rng(47);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd sigma = testutil::random_spd(5, 1000 + trial);
        const Eigen::VectorXd mu = rng.normal_vector(5);
        const ConditionGaussian g = make_gaussian("rand", mu, sigma);
        GaussianDensity d(g, 0.0);
        for (int k = 0; k < 5; ++k) {
            const Eigen::VectorXd x = mu + rng.normal_vector(5);
            CHECK(d.log_pdf(x) ==
                  doctest::Approx(log_pdf_oracle(x, mu, sigma)).epsilon(1e-9));
        }
    }
}

TEST_CASE("log_pdf_rows equals the per-row evaluation") {
    RngStream rng(53);
    const ConditionGaussian g = fit_gaussian(rng.normal_matrix(100, 4));
    GaussianDensity d(g, 1e-9);
    const Eigen::MatrixXd X = rng.normal_matrix(25, 4);
    const Eigen::VectorXd batch = d.log_pdf_rows(X);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        CHECK(batch(i) == doctest::Approx(d.log_pdf(X.row(i))).epsilon(1e-12));
}

TEST_CASE("a singular covariance needs ridge; a negative ridge is rejected") {
    const ConditionGaussian flat =
        make_gaussian("flat", Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2));
    CHECK_THROWS_AS(GaussianDensity(flat, 0.0), numeric_error);
    GaussianDensity ok(flat, 1e-6);
    CHECK(std::isfinite(ok.log_pdf(Eigen::VectorXd::Zero(2))));
    CHECK_THROWS_AS(GaussianDensity(flat, -1.0), std::invalid_argument);
}

TEST_CASE("classify picks the highest density and breaks ties low") {
    Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(1);
    Eigen::VectorXd mu1 = Eigen::VectorXd::Constant(1, 3.0);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(1, 1);
    const std::vector<ConditionGaussian> gs = {make_gaussian("near", mu0, eye),
                                               make_gaussian("far", mu1, eye)};

    CHECK(classify(Eigen::VectorXd::Constant(1, 1.0), gs, 0.0) == 0);
    CHECK(classify(Eigen::VectorXd::Constant(1, 2.0), gs, 0.0) == 1);
    // Equidistant between equal Gaussians: tie resolves to the lowest index.
    CHECK(classify(Eigen::VectorXd::Constant(1, 1.5), gs, 0.0) == 0);

    RngStream rng(59);
    Eigen::MatrixXd X(10, 1);
    for (Eigen::Index i = 0; i < 10; ++i) X(i, 0) = rng.uniform() * 3.0;
    const auto batch = classify_rows(X, gs, 0.0);
    for (Eigen::Index i = 0; i < 10; ++i)
        CHECK(batch[static_cast<std::size_t>(i)] == classify(X.row(i), gs, 0.0));

    CHECK_THROWS_AS((void)classify(mu0, {}, 0.0), std::invalid_argument);
}

TEST_CASE("default_ridge scales the mean of trace/n across conditions") {
    ConditionGaussian a =
        make_gaussian("a", Eigen::VectorXd::Zero(2), 2.0 * Eigen::MatrixXd::Identity(2, 2));
    ConditionGaussian b =
        make_gaussian("b", Eigen::VectorXd::Zero(2), 6.0 * Eigen::MatrixXd::Identity(2, 2));
    CHECK(default_ridge(a, 0.5) == doctest::Approx(1.0).epsilon(1e-12));   // 0.5 * 4/2
    CHECK(default_ridge({a, b}, 0.5) == doctest::Approx(2.0).epsilon(1e-12));  // mean(2, 6)
    CHECK_THROWS_AS((void)default_ridge(std::vector<ConditionGaussian>{}, 0.5),
                    std::invalid_argument);
}

TEST_CASE("frechet_distance matches the closed form in one dimension") {
    // Means 0 and 3, variances 1 and 4: d^2 = 9 + (1-2)^2 = 10.
    const ConditionGaussian a =
        make_gaussian("a", Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
    const ConditionGaussian b = make_gaussian("b", Eigen::VectorXd::Constant(1, 3.0),
                                              4.0 * Eigen::MatrixXd::Identity(1, 1));
    CHECK(frechet_distance(a, b) == doctest::Approx(std::sqrt(10.0)).epsilon(1e-12));
    CHECK(frechet_distance(b, a) == doctest::Approx(std::sqrt(10.0)).epsilon(1e-12));
}

TEST_CASE("frechet_distance matches a naive eigendecomposition oracle") {
    RngStream rng(61);
    for (int trial = 0; trial < 25; ++trial) {
        const Eigen::MatrixXd s1 = testutil::random_spd(3, 2000 + 2 * trial);
        const Eigen::MatrixXd s2 = testutil::random_spd(3, 2001 + 2 * trial);
        const Eigen::VectorXd mu1 = rng.normal_vector(3);
        const Eigen::VectorXd mu2 = rng.normal_vector(3);
        const ConditionGaussian a = make_gaussian("a", mu1, s1);
        const ConditionGaussian b = make_gaussian("b", mu2, s2);
        const double want = frechet_oracle(mu1, s1, mu2, s2);
        CHECK(frechet_distance(a, b) == doctest::Approx(want).epsilon(1e-8));
    }
}

TEST_CASE("frechet_distance of a fit with itself is numerically zero") {
    RngStream rng(67);
    const ConditionGaussian g = fit_gaussian(rng.normal_matrix(500, 4));
    CHECK(frechet_distance(g, g) < 1e-9);
}

TEST_CASE("frechet_distance handles rank-deficient covariances") {
    // S1 = diag(1, 0) against S2 = I: d^2 = 1 + 2 - 2*tr(diag(1,0)) = 1.
    Eigen::MatrixXd s1 = Eigen::MatrixXd::Zero(2, 2);
    s1(0, 0) = 1.0;
    const ConditionGaussian a = make_gaussian("a", Eigen::VectorXd::Zero(2), s1);
    const ConditionGaussian b =
        make_gaussian("b", Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
    CHECK(frechet_distance(a, b) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("frechet_distance rejects mismatched and asymmetric inputs") {
    const ConditionGaussian a =
        make_gaussian("a", Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
    const ConditionGaussian b =
        make_gaussian("b", Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
    CHECK_THROWS_AS((void)frechet_distance(a, b), std::invalid_argument);

    ConditionGaussian crooked = a;
    crooked.sigma(0, 1) = 0.5;  // symmetry violated on one side only
    CHECK_THROWS_AS((void)frechet_distance(crooked, a), std::invalid_argument);
}

TEST_CASE("fd_matrix is symmetric with a zero diagonal and true nearest picks") {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    auto at = [&](double x, double y) {
        Eigen::VectorXd mu(2);
        mu << x, y;
        return mu;
    };
    const std::vector<ConditionGaussian> gs = {
        make_gaussian("left", at(0, 0), eye),
        make_gaussian("mid", at(1, 0), eye),
        make_gaussian("right", at(5, 0), eye),
    };
    const FDMatrix m = fd_matrix(gs);
    REQUIRE(m.ids == std::vector<std::string>{"left", "mid", "right"});
    CHECK((m.values.diagonal().array() == 0.0).all());
    CHECK(testutil::max_abs_diff(m.values, m.values.transpose()) == 0.0);
    CHECK(m.values(0, 1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.nearest == std::vector<std::size_t>{1, 0, 1});
}

TEST_CASE("pca splits variance evenly on isotropic data") {
    RngStream rng(71);
    const Eigen::MatrixXd X = rng.normal_matrix(20000, 5);
    const PCAResult r = pca_project(X, 3);
    REQUIRE(r.projection.components.rows() == 3);
    REQUIRE(r.projection.components.cols() == 5);
    REQUIRE(r.projected.rows() == X.rows());

    for (Eigen::Index i = 0; i < 3; ++i)
        CHECK(r.projection.explained_variance_ratio(i) == doctest::Approx(0.2).epsilon(0.12));

    const Eigen::MatrixXd gram =
        r.projection.components * r.projection.components.transpose();
    CHECK(testutil::max_abs_diff(gram, Eigen::MatrixXd::Identity(3, 3)) < 1e-12);
}

TEST_CASE("pca recovers a planted direction with a canonical sign") {
    RngStream rng(73);
    const Eigen::Index n = 4000;
    Eigen::MatrixXd X(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = rng.normal() * 10.0;
        X(i, 0) = 0.6 * t + 0.01 * rng.normal();
        X(i, 1) = 0.8 * t + 0.01 * rng.normal();
    }
    const PCAResult r = pca_project(X, 1);
    // Largest-magnitude entry is made positive, so the component is
    // (0.6, 0.8) rather than its negation.
    CHECK(r.projection.components(0, 0) == doctest::Approx(0.6).epsilon(1e-3));
    CHECK(r.projection.components(0, 1) == doctest::Approx(0.8).epsilon(1e-3));
    CHECK(r.projection.explained_variance_ratio(0) > 0.999);

    // Projection is the centered data against the components.
    const Eigen::MatrixXd centered = X.rowwise() - r.projection.mean.transpose();
    CHECK(testutil::max_abs_diff(r.projected,
                                 centered * r.projection.components.transpose()) < 1e-12);

    CHECK_THROWS_AS((void)pca_project(X, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)pca_project(X, 3), std::invalid_argument);
}

TEST_CASE("sample_condition_points ties the P rows to the W rows") {
    auto [mapping, synthesis] = init_models(6, 3, 5, 4, 3, 109);
    RngStream rng(79);
    const Eigen::VectorXd c = rng.normal_vector(3);

    RngStream s1(991), s2(991);
    const Eigen::MatrixXd W = sample_condition_points(mapping, c, 200, LatentSpace::W, s1);
    const Eigen::MatrixXd P = sample_condition_points(mapping, c, 200, LatentSpace::P, s2);
    REQUIRE(W.rows() == 200);
    CHECK((P.array() == p_transform_rows(W, PDirection::WtoP).array()).all());

    RngStream s3(991);
    CHECK_THROWS_AS((void)sample_condition_points(mapping, c, 10, LatentSpace::Z, s3),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)sample_condition_points(mapping, c, 0, LatentSpace::W, s3),
                    std::invalid_argument);
}
