#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "clat/mapping.hpp"
#include "clat/rng.hpp"

namespace clat {

struct CenterOfMass {
    Eigen::VectorXd w_bar;
    // Absent means global: the all-wildcard (zero) condition vector.
    std::optional<Eigen::VectorXd> condition;
    std::int64_t sample_count = 0;
    std::uint64_t seed = 0;
};

// Monte-Carlo mean of map_conditional(z, c) over n_samples standard-normal z.
// Kahan-compensated accumulation; the same seed and count reproduce the
// result bit-exactly.
CenterOfMass center_of_mass(const MappingModel& m, const std::optional<Eigen::VectorXd>& cvec,
                            std::int64_t n_samples, RngStream& rng);

// psi * w + (1 - psi) * w_bar. Any real psi is accepted; psi > 1
// extrapolates away from the center.
LatentVector truncate_latent(const LatentVector& w, const CenterOfMass& center, double psi);

struct TransformationVector {
    Eigen::VectorXd t;
    Eigen::VectorXd c_from;
    Eigen::VectorXd c_to;
    std::int64_t sample_count = 0;
};

// Mean over shared z of map(z, c_to) - map(z, c_from). Because the same z
// stream feeds both terms, this equals the difference of the conditional
// centers computed from that stream, and swapping the arguments negates the
// result exactly.
TransformationVector transformation_vector(const MappingModel& m, const Eigen::VectorXd& c_from,
                                           const Eigen::VectorXd& c_to, std::int64_t n_samples,
                                           RngStream& rng);

LatentVector apply_transformation(const LatentVector& w, const TransformationVector& t);

// (1 - lambda) * map(z, c_from) + lambda * map(z, c_to), lambda in [0, 1].
LatentVector conditional_interpolate(const MappingModel& m, const LatentVector& z,
                                     const Eigen::VectorXd& c_from, const Eigen::VectorXd& c_to,
                                     double lambda);

struct InversionResult {
    LatentVector w;
    // Loss after each accepted step; entry 0 is the initial loss. Rejected
    // steps halve the step size and append nothing, so the trace is
    // non-increasing by construction.
    std::vector<double> loss_trace;
    int halvings = 0;
    double final_step = 0.0;
};

// Gradient descent on |g(w) - target|^2. A step that would increase the loss
// is rejected and the step size halved, up to max_halvings; after that the
// search stops early.
InversionResult invert_latent(const SynthesisModel& m, const Eigen::VectorXd& target,
                              const LatentVector& init_w, int steps, double step_size,
                              int max_halvings = 20);

void save_center(const std::filesystem::path& path, const CenterOfMass& c);
CenterOfMass load_center(const std::filesystem::path& path);
void save_transformation(const std::filesystem::path& path, const TransformationVector& t);
TransformationVector load_transformation(const std::filesystem::path& path);

} // namespace clat
