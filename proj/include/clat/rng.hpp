#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace clat {

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

// splitmix64 finalizer; spreads low-entropy seeds over the full 64-bit range.
std::uint64_t splitmix64(std::uint64_t x);

// Deterministic random stream. Every stage of a run pulls from a named
// substream of one root seed, so a stage can be recomputed in isolation and
// adding draws to one stage never perturbs another.
//
// The distributions are implemented here instead of with <random> adaptors:
// std::normal_distribution and friends are implementation-defined, and output
// files are required to be byte-stable across toolchains.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    // Derived stream for a named stage. Depends only on the construction
    // seed, never on draws already made.
    RngStream substream(std::string_view name) const;
    RngStream substream(std::string_view name, std::uint64_t index) const;

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();
    double uniform();                                        // [0, 1)
    double normal();                                         // standard normal
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
    bool bernoulli(double p);

    // k distinct indices from [0, n), in selection order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    Eigen::VectorXd normal_vector(Eigen::Index n);
    // Filled row by row, so row i of a batch holds the i-th consecutive draws.
    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace clat
