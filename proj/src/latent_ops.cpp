#include "clat/latent_ops.hpp"

#include <cmath>

#include "clat/container.hpp"
#include "clat/error.hpp"

namespace clat {

namespace {

// Column-wise Kahan accumulator over sample rows.
class KahanMean {
public:
    explicit KahanMean(Eigen::Index dim)
        : sum_(Eigen::VectorXd::Zero(dim)), comp_(Eigen::VectorXd::Zero(dim)) {}

    void add_rows(const Eigen::MatrixXd& rows) {
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            for (Eigen::Index j = 0; j < rows.cols(); ++j) {
                const double y = rows(r, j) - comp_(j);
                const double t = sum_(j) + y;
                comp_(j) = (t - sum_(j)) - y;
                sum_(j) = t;
            }
        }
        count_ += rows.rows();
    }

    Eigen::VectorXd mean() const { return sum_ / static_cast<double>(count_); }

private:
    Eigen::VectorXd sum_;
    Eigen::VectorXd comp_;
    std::int64_t count_ = 0;
};

} // namespace

CenterOfMass center_of_mass(const MappingModel& m, const std::optional<Eigen::VectorXd>& cvec,
                            std::int64_t n_samples, RngStream& rng) {
    if (n_samples < 1) throw std::invalid_argument("center_of_mass: n_samples < 1");
    const Eigen::VectorXd c = cvec ? *cvec : Eigen::VectorXd::Zero(m.c_dim);

    CenterOfMass out;
    out.condition = cvec;
    out.sample_count = n_samples;
    out.seed = rng.seed();

    KahanMean acc(m.w_dim);
    for (std::int64_t start = 0; start < n_samples; start += kSampleBatch) {
        const auto len = static_cast<Eigen::Index>(
            std::min<std::int64_t>(kSampleBatch, n_samples - start));
        acc.add_rows(map_conditional_batch(m, rng.normal_matrix(len, m.z_dim), c));
    }
    out.w_bar = acc.mean();
    return out;
}

LatentVector truncate_latent(const LatentVector& w, const CenterOfMass& center, double psi) {
    if (w.space != LatentSpace::W)
        throw std::invalid_argument("truncate_latent expects a W-space vector, got " +
                                    to_string(w.space));
    if (w.data.size() != center.w_bar.size())
        throw std::invalid_argument("truncate_latent: vector has length " +
                                    std::to_string(w.data.size()) + ", center has " +
                                    std::to_string(center.w_bar.size()));
    if (!std::isfinite(psi)) throw std::invalid_argument("truncate_latent: psi is not finite");
    // psi*w + (1-psi)*w_bar rather than w_bar + psi*(w - w_bar): same affine
    // map, but the endpoints psi=1 -> w and psi=0 -> w_bar come out exact.
    return {LatentSpace::W, psi * w.data + (1.0 - psi) * center.w_bar};
}

TransformationVector transformation_vector(const MappingModel& m, const Eigen::VectorXd& c_from,
                                           const Eigen::VectorXd& c_to, std::int64_t n_samples,
                                           RngStream& rng) {
    if (n_samples < 1) throw std::invalid_argument("transformation_vector: n_samples < 1");

    TransformationVector out;
    out.c_from = c_from;
    out.c_to = c_to;
    out.sample_count = n_samples;

    KahanMean acc(m.w_dim);
    for (std::int64_t start = 0; start < n_samples; start += kSampleBatch) {
        const auto len = static_cast<Eigen::Index>(
            std::min<std::int64_t>(kSampleBatch, n_samples - start));
        const Eigen::MatrixXd z = rng.normal_matrix(len, m.z_dim);
        acc.add_rows(map_conditional_batch(m, z, c_to) - map_conditional_batch(m, z, c_from));
    }
    out.t = acc.mean();
    return out;
}

LatentVector apply_transformation(const LatentVector& w, const TransformationVector& t) {
    if (w.space != LatentSpace::W)
        throw std::invalid_argument("apply_transformation expects a W-space vector, got " +
                                    to_string(w.space));
    if (w.data.size() != t.t.size())
        throw std::invalid_argument("apply_transformation: vector has length " +
                                    std::to_string(w.data.size()) + ", transformation has " +
                                    std::to_string(t.t.size()));
    return {LatentSpace::W, w.data + t.t};
}

LatentVector conditional_interpolate(const MappingModel& m, const LatentVector& z,
                                     const Eigen::VectorXd& c_from, const Eigen::VectorXd& c_to,
                                     double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::invalid_argument("conditional_interpolate: lambda outside [0, 1]");
    const LatentVector wa = map_conditional(m, z, c_from);
    const LatentVector wb = map_conditional(m, z, c_to);
    return {LatentSpace::W, (1.0 - lambda) * wa.data + lambda * wb.data};
}

InversionResult invert_latent(const SynthesisModel& m, const Eigen::VectorXd& target,
                              const LatentVector& init_w, int steps, double step_size,
                              int max_halvings) {
    if (steps < 0) throw std::invalid_argument("invert_latent: steps < 0");
    if (!(step_size > 0.0)) throw std::invalid_argument("invert_latent: step_size must be > 0");
    if (max_halvings < 0) throw std::invalid_argument("invert_latent: max_halvings < 0");
    if (target.size() != m.image_dim)
        throw std::invalid_argument("invert_latent: target has length " +
                                    std::to_string(target.size()) + ", model emits " +
                                    std::to_string(m.image_dim));

    InversionResult res;
    res.w = init_w;

    Eigen::VectorXd residual = synthesize(m, res.w) - target;
    double loss = residual.squaredNorm();
    if (!std::isfinite(loss)) throw numeric_error("invert_latent: non-finite loss at start");
    res.loss_trace.push_back(loss);

    double step = step_size;
    for (int it = 0; it < steps; ++it) {
        const Eigen::VectorXd grad = 2.0 * synthesize_grad(m, res.w, residual);
        const LatentVector candidate{LatentSpace::W,
                                     Eigen::VectorXd(res.w.data - step * grad)};
        const Eigen::VectorXd cand_residual = synthesize(m, candidate) - target;
        const double cand_loss = cand_residual.squaredNorm();
        if (std::isfinite(cand_loss) && cand_loss <= loss) {
            res.w = candidate;
            residual = cand_residual;
            loss = cand_loss;
            res.loss_trace.push_back(loss);
        } else {
            if (res.halvings >= max_halvings) break;
            ++res.halvings;
            step *= 0.5;
        }
    }
    res.final_step = step;
    return res;
}

void save_center(const std::filesystem::path& path, const CenterOfMass& c) {
    Blob blob;
    blob.meta["type"] = "center";
    blob.meta["sample_count"] = c.sample_count;
    blob.meta["seed"] = c.seed;
    blob.meta["conditional"] = c.condition.has_value();
    blob.blocks.emplace_back("w_bar", c.w_bar.transpose());
    if (c.condition) blob.blocks.emplace_back("condition", c.condition->transpose());
    write_container(path, blob);
}

CenterOfMass load_center(const std::filesystem::path& path) {
    const Blob blob = read_container(path);
    if (blob.meta.value("type", "") != "center")
        throw data_error("'" + path.string() + "' is not a center-of-mass file");
    CenterOfMass c;
    c.sample_count = blob.meta.at("sample_count").get<std::int64_t>();
    c.seed = blob.meta.at("seed").get<std::uint64_t>();
    c.w_bar = blob.block("w_bar").transpose();
    if (blob.meta.value("conditional", false))
        c.condition = Eigen::VectorXd(blob.block("condition").transpose());
    return c;
}

void save_transformation(const std::filesystem::path& path, const TransformationVector& t) {
    Blob blob;
    blob.meta["type"] = "transformation";
    blob.meta["sample_count"] = t.sample_count;
    blob.blocks.emplace_back("t", t.t.transpose());
    blob.blocks.emplace_back("c_from", t.c_from.transpose());
    blob.blocks.emplace_back("c_to", t.c_to.transpose());
    write_container(path, blob);
}

TransformationVector load_transformation(const std::filesystem::path& path) {
    const Blob blob = read_container(path);
    if (blob.meta.value("type", "") != "transformation")
        throw data_error("'" + path.string() + "' is not a transformation-vector file");
    TransformationVector t;
    t.sample_count = blob.meta.at("sample_count").get<std::int64_t>();
    t.t = blob.block("t").transpose();
    t.c_from = blob.block("c_from").transpose();
    t.c_to = blob.block("c_to").transpose();
    return t;
}

} // namespace clat
