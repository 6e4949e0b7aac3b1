#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/SVD>

#include "clat/error.hpp"
#include "clat/mapping.hpp"
#include "clat/rng.hpp"
#include "test_util.hpp"

using namespace clat;
using testutil::TempDir;

namespace {

double lrelu1(double x, double slope) { return x >= 0.0 ? x : slope * x; }

// Scalar-loop oracle for the conditional mapping: concatenate, normalize to
// unit RMS, then dense layer + leaky activation per layer, no Eigen products.
Eigen::VectorXd map_oracle(const MappingModel& m, const Eigen::VectorXd& z,
                           const Eigen::VectorXd& c) {
    std::vector<double> h(static_cast<std::size_t>(z.size() + c.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) h[static_cast<std::size_t>(i)] = z(i);
    for (Eigen::Index i = 0; i < c.size(); ++i)
        h[static_cast<std::size_t>(z.size() + i)] = c(i);

    double sq = 0.0;
    for (double x : h) sq += x * x;
    const double rms = std::sqrt(sq / static_cast<double>(h.size()));
    const double denom = rms > 1e-300 ? rms : 1e-300;
    for (double& x : h) x /= denom;

    for (const auto& layer : m.layers) {
        std::vector<double> next(static_cast<std::size_t>(layer.weight.rows()));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            double acc = layer.bias(r);
            for (Eigen::Index col = 0; col < layer.weight.cols(); ++col)
                acc += layer.weight(r, col) * h[static_cast<std::size_t>(col)];
            next[static_cast<std::size_t>(r)] = lrelu1(acc, m.leaky_slope);
        }
        h = std::move(next);
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(h.size()));
    for (std::size_t i = 0; i < h.size(); ++i) out(static_cast<Eigen::Index>(i)) = h[i];
    return out;
}

Eigen::VectorXd synth_oracle(const SynthesisModel& m, const Eigen::VectorXd& w) {
    std::vector<double> h(static_cast<std::size_t>(w.size()));
    for (Eigen::Index i = 0; i < w.size(); ++i) h[static_cast<std::size_t>(i)] = w(i);
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        const auto& layer = m.layers[li];
        const bool last = li + 1 == m.layers.size();
        std::vector<double> next(static_cast<std::size_t>(layer.weight.rows()));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            double acc = layer.bias(r);
            for (Eigen::Index col = 0; col < layer.weight.cols(); ++col)
                acc += layer.weight(r, col) * h[static_cast<std::size_t>(col)];
            next[static_cast<std::size_t>(r)] = last ? acc : lrelu1(acc, m.leaky_slope);
        }
        h = std::move(next);
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(h.size()));
    for (std::size_t i = 0; i < h.size(); ++i) out(static_cast<Eigen::Index>(i)) = h[i];
    return out;
}

} // namespace

TEST_CASE("initialization scales weights by 1/sqrt(fan_in) with zero biases") {
    auto [mapping, synthesis] = init_models(256, 256, 256, 64, 3, 77);

    REQUIRE(mapping.layers.size() == 3);
    const auto& first = mapping.layers[0];
    REQUIRE(first.weight.rows() == 256);
    REQUIRE(first.weight.cols() == 512);

    const auto n = static_cast<double>(first.weight.size());
    const double mean = first.weight.sum() / n;
    const double var = (first.weight.array() - mean).square().sum() / n;
    const double expect_std = 1.0 / std::sqrt(512.0);
    CHECK(std::abs(mean) < 5.0 * expect_std / std::sqrt(n));
    CHECK(std::sqrt(var) == doctest::Approx(expect_std).epsilon(0.02));

    for (const auto& l : mapping.layers) CHECK((l.bias.array() == 0.0).all());
    for (const auto& l : synthesis.layers) CHECK((l.bias.array() == 0.0).all());

    // Same seed, same weights; different seed, different weights.
    auto [m2, s2] = init_models(256, 256, 256, 64, 3, 77);
    CHECK((m2.layers[0].weight.array() == first.weight.array()).all());
    auto [m3, s3] = init_models(256, 256, 256, 64, 3, 78);
    CHECK(testutil::max_abs_diff(m3.layers[0].weight, first.weight) > 0.0);

    CHECK_THROWS_AS((void)init_models(0, 4, 4, 4, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)init_models(4, 4, 4, 4, 0, 1), std::invalid_argument);
}

TEST_CASE("map_conditional agrees with the scalar-loop oracle") {
    auto [mapping, synthesis] = init_models(6, 4, 5, 3, 4, 101);
    RngStream rng(202);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd z = rng.normal_vector(6);
        const Eigen::VectorXd c = rng.normal_vector(4);
        const Eigen::VectorXd want = map_oracle(mapping, z, c);
        const LatentVector got = map_conditional(mapping, {LatentSpace::Z, z}, c);
        CHECK(got.space == LatentSpace::W);
        REQUIRE(got.data.size() == 5);
        CHECK(testutil::max_abs_diff(got.data, want) < 1e-13);
    }
}

TEST_CASE("map_conditional handles the all-zero input without dividing by zero") {
    auto [mapping, synthesis] = init_models(6, 4, 5, 3, 4, 103);
    const LatentVector w = map_conditional(
        mapping, {LatentSpace::Z, Eigen::VectorXd::Zero(6)}, Eigen::VectorXd::Zero(4));
    CHECK(w.data.allFinite());
    CHECK((w.data.array() == 0.0).all());  // zero input, zero biases
}

TEST_CASE("map_conditional validates space, widths, and finiteness") {
    auto [mapping, synthesis] = init_models(6, 4, 5, 3, 2, 104);
    RngStream rng(1);
    const Eigen::VectorXd c = rng.normal_vector(4);

    CHECK_THROWS_AS((void)map_conditional(mapping, {LatentSpace::W, rng.normal_vector(6)}, c),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)map_conditional(mapping, {LatentSpace::Z, rng.normal_vector(7)}, c),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        (void)map_conditional(mapping, {LatentSpace::Z, rng.normal_vector(6)},
                              Eigen::VectorXd::Constant(4, std::nan(""))),
        std::invalid_argument);
}

TEST_CASE("batched mapping matches the single-vector path") {
    auto [mapping, synthesis] = init_models(8, 3, 6, 4, 3, 105);
    RngStream rng(2);
    const Eigen::MatrixXd Z = rng.normal_matrix(17, 8);
    const Eigen::VectorXd c = rng.normal_vector(3);
    const Eigen::MatrixXd W = map_conditional_batch(mapping, Z, c);
    REQUIRE(W.rows() == 17);
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        const LatentVector one = map_conditional(mapping, {LatentSpace::Z, Z.row(i)}, c);
        CHECK((one.data.transpose() - W.row(i)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("the W to P transform uses slope 5 and inverts exactly") {
    // Positive values pass through; negative values stretch by 5.
    LatentVector w{LatentSpace::W, Eigen::Vector3d(2.0, -0.2, 0.0)};
    const LatentVector p = p_transform(w, PDirection::WtoP);
    CHECK(p.space == LatentSpace::P);
    CHECK(p.data(0) == 2.0);
    CHECK(p.data(1) == -1.0);
    CHECK(p.data(2) == 0.0);

    const LatentVector back = p_transform(p, PDirection::PtoW);
    CHECK(back.space == LatentSpace::W);
    CHECK(back.data(0) == 2.0);
    CHECK(back.data(2) == 0.0);

    // Round trip over a wide range of magnitudes.
    RngStream rng(3);
    Eigen::MatrixXd rows(1000, 4);
    for (Eigen::Index i = 0; i < rows.size(); ++i)
        rows(i / 4, i % 4) = rng.normal() * std::pow(10.0, rng.uniform_int(-6, 6));
    const Eigen::MatrixXd there = p_transform_rows(rows, PDirection::WtoP);
    const Eigen::MatrixXd home = p_transform_rows(there, PDirection::PtoW);
    CHECK(((home - rows).cwiseAbs().array() <= 1e-12 * rows.cwiseAbs().array().max(1.0)).all());

    CHECK_THROWS_AS((void)p_transform(p, PDirection::WtoP), std::invalid_argument);
    CHECK_THROWS_AS((void)p_transform(w, PDirection::PtoW), std::invalid_argument);
}

TEST_CASE("synthesize matches the scalar oracle and the spectral bound") {
    auto [mapping, synthesis] = init_models(6, 4, 5, 7, 3, 106);
    RngStream rng(4);

    double bound = 1.0;
    for (const auto& l : synthesis.layers) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(l.weight);
        bound *= svd.singularValues()(0);
    }

    for (int trial = 0; trial < 20; ++trial) {
        const LatentVector w{LatentSpace::W, rng.normal_vector(5)};
        const Eigen::VectorXd img = synthesize(synthesis, w);
        REQUIRE(img.size() == 7);
        CHECK(testutil::max_abs_diff(img, synth_oracle(synthesis, w.data)) < 1e-13);
        // Leaky activations are 1-Lipschitz and biases are zero, so the
        // product of spectral norms bounds the output norm.
        CHECK(img.norm() <= bound * w.data.norm() * (1.0 + 1e-12));
    }

    const Eigen::MatrixXd W = rng.normal_matrix(9, 5);
    const Eigen::MatrixXd imgs = synthesize_batch(synthesis, W);
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        const Eigen::VectorXd one = synthesize(synthesis, {LatentSpace::W, W.row(i)});
        CHECK((one.transpose() - imgs.row(i)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("synthesize_grad agrees with central finite differences") {
    auto [mapping, synthesis] = init_models(6, 4, 5, 7, 3, 107);
    RngStream rng(5);
    const double h = 1e-5;

    for (int trial = 0; trial < 10; ++trial) {
        LatentVector w{LatentSpace::W, rng.normal_vector(5)};
        const Eigen::VectorXd upstream = rng.normal_vector(7);
        const Eigen::VectorXd grad = synthesize_grad(synthesis, w, upstream);
        REQUIRE(grad.size() == 5);

        for (Eigen::Index i = 0; i < 5; ++i) {
            LatentVector plus = w, minus = w;
            plus.data(i) += h;
            minus.data(i) -= h;
            const double numeric = (upstream.dot(synthesize(synthesis, plus)) -
                                    upstream.dot(synthesize(synthesis, minus))) /
                                   (2.0 * h);
            const double rel =
                std::abs(grad(i) - numeric) / std::max(1.0, std::abs(numeric));
            CHECK(rel < 1e-4);
        }
    }
}

TEST_CASE("models survive a save/load round trip bit for bit") {
    TempDir dir;
    auto [mapping, synthesis] = init_models(6, 4, 5, 7, 3, 108);

    save_mapping(dir / "mapping.bin", mapping);
    const MappingModel m2 = load_mapping(dir / "mapping.bin");
    CHECK(m2.z_dim == mapping.z_dim);
    CHECK(m2.c_dim == mapping.c_dim);
    CHECK(m2.w_dim == mapping.w_dim);
    CHECK(m2.leaky_slope == mapping.leaky_slope);
    REQUIRE(m2.layers.size() == mapping.layers.size());
    for (std::size_t i = 0; i < mapping.layers.size(); ++i) {
        CHECK((m2.layers[i].weight.array() == mapping.layers[i].weight.array()).all());
        CHECK((m2.layers[i].bias.array() == mapping.layers[i].bias.array()).all());
    }

    save_synthesis(dir / "synthesis.bin", synthesis);
    const SynthesisModel s2 = load_synthesis(dir / "synthesis.bin");
    CHECK(s2.image_dim == synthesis.image_dim);
    RngStream rng(6);
    const LatentVector w{LatentSpace::W, rng.normal_vector(5)};
    CHECK((synthesize(s2, w).array() == synthesize(synthesis, w).array()).all());

    // A synthesis container is not a mapping container.
    CHECK_THROWS_AS((void)load_mapping(dir / "synthesis.bin"), data_error);
    CHECK_THROWS_AS((void)load_synthesis(dir / "mapping.bin"), data_error);
}
