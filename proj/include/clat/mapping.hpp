#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace clat {

enum class LatentSpace { Z, W, P };

std::string to_string(LatentSpace s);
LatentSpace latent_space_from_string(const std::string& s);

// A latent vector tagged with the space it lives in. Operations check the
// tag; cross-space use is an error, not a silent reinterpretation.
struct LatentVector {
    LatentSpace space = LatentSpace::Z;
    Eigen::VectorXd data;
};

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
};

inline constexpr double kLeakySlope = 0.2;
// Slope of the W -> P transform; the exact inverse of kLeakySlope.
inline constexpr double kPSlope = 5.0;

// Batch size shared by every sampling loop. Mean-style reductions are only
// reproducible to the last bit if producer and consumer batch identically.
inline constexpr Eigen::Index kSampleBatch = 8192;

// Conditional mapping network: leaky-ReLU MLP over the RMS-normalized
// concatenation of z and the condition vector. The activation follows every
// layer including the last, so the W -> P transform inverts it exactly.
struct MappingModel {
    Eigen::Index z_dim = 0;
    Eigen::Index c_dim = 0;
    Eigen::Index w_dim = 0;
    double leaky_slope = kLeakySlope;
    std::vector<DenseLayer> layers;

    Eigen::Index depth() const { return static_cast<Eigen::Index>(layers.size()); }
};

// Toy image decoder: leaky-ReLU hidden layers, linear output.
struct SynthesisModel {
    Eigen::Index w_dim = 0;
    Eigen::Index image_dim = 0;
    double leaky_slope = kLeakySlope;
    std::vector<DenseLayer> layers;

    Eigen::Index depth() const { return static_cast<Eigen::Index>(layers.size()); }
};

// Seeded scaled-normal initialization, std 1/sqrt(fan_in), zero biases.
std::pair<MappingModel, SynthesisModel> init_models(Eigen::Index z_dim, Eigen::Index c_dim,
                                                    Eigen::Index w_dim, Eigen::Index image_dim,
                                                    Eigen::Index depth, std::uint64_t seed,
                                                    Eigen::Index synth_depth = 3);

LatentVector map_conditional(const MappingModel& m, const LatentVector& z,
                             const Eigen::VectorXd& cvec);
// Rows of Z are independent z samples; returns one W row per input row.
Eigen::MatrixXd map_conditional_batch(const MappingModel& m, const Eigen::MatrixXd& Z,
                                      const Eigen::VectorXd& cvec);

enum class PDirection { WtoP, PtoW };

LatentVector p_transform(const LatentVector& v, PDirection dir);
// Untagged helper for sample matrices; rows are vectors in the source space.
Eigen::MatrixXd p_transform_rows(const Eigen::MatrixXd& rows, PDirection dir);

Eigen::VectorXd synthesize(const SynthesisModel& m, const LatentVector& w);
Eigen::MatrixXd synthesize_batch(const SynthesisModel& m, const Eigen::MatrixXd& W);

// Gradient of <upstream, g(w)> with respect to w, by analytic backward pass.
Eigen::VectorXd synthesize_grad(const SynthesisModel& m, const LatentVector& w,
                                const Eigen::VectorXd& upstream);

void save_mapping(const std::filesystem::path& path, const MappingModel& m);
MappingModel load_mapping(const std::filesystem::path& path);
void save_synthesis(const std::filesystem::path& path, const SynthesisModel& m);
SynthesisModel load_synthesis(const std::filesystem::path& path);

} // namespace clat
