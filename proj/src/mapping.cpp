#include "clat/mapping.hpp"

#include <cmath>

#include "clat/container.hpp"
#include "clat/error.hpp"
#include "clat/rng.hpp"

namespace clat {

std::string to_string(LatentSpace s) {
    switch (s) {
        case LatentSpace::Z: return "Z";
        case LatentSpace::W: return "W";
        case LatentSpace::P: return "P";
    }
    throw std::invalid_argument("unhandled LatentSpace");
}

LatentSpace latent_space_from_string(const std::string& s) {
    if (s == "Z") return LatentSpace::Z;
    if (s == "W") return LatentSpace::W;
    if (s == "P") return LatentSpace::P;
    throw data_error("unknown latent space '" + s + "'");
}

namespace {

Eigen::MatrixXd leaky(Eigen::MatrixXd h, double slope) {
    h = (h.array() >= 0.0).select(h, slope * h);
    return h;
}

DenseLayer init_layer(RngStream& rng, Eigen::Index out, Eigen::Index in) {
    DenseLayer layer;
    layer.weight = rng.normal_matrix(out, in) / std::sqrt(static_cast<double>(in));
    layer.bias = Eigen::VectorXd::Zero(out);
    return layer;
}

void check_layers(const std::vector<DenseLayer>& layers, Eigen::Index in_dim,
                  Eigen::Index out_dim, const std::string& what) {
    Eigen::Index width = in_dim;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.weight.cols() != width || l.bias.size() != l.weight.rows())
            throw data_error(what + ": layer " + std::to_string(i) + " has inconsistent shape");
        if (!l.weight.allFinite() || !l.bias.allFinite())
            throw data_error(what + ": layer " + std::to_string(i) + " has non-finite weights");
        width = l.weight.rows();
    }
    if (width != out_dim) throw data_error(what + ": output width does not match");
}

void save_layers(Blob& blob, const std::vector<DenseLayer>& layers) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        blob.blocks.emplace_back("layer" + std::to_string(i) + ".weight", layers[i].weight);
        blob.blocks.emplace_back("layer" + std::to_string(i) + ".bias",
                                 layers[i].bias.transpose());
    }
}

std::vector<DenseLayer> load_layers(const Blob& blob, Eigen::Index depth) {
    std::vector<DenseLayer> layers;
    for (Eigen::Index i = 0; i < depth; ++i) {
        DenseLayer l;
        l.weight = blob.block("layer" + std::to_string(i) + ".weight");
        l.bias = blob.block("layer" + std::to_string(i) + ".bias").transpose();
        layers.push_back(std::move(l));
    }
    return layers;
}

} // namespace

std::pair<MappingModel, SynthesisModel> init_models(Eigen::Index z_dim, Eigen::Index c_dim,
                                                    Eigen::Index w_dim, Eigen::Index image_dim,
                                                    Eigen::Index depth, std::uint64_t seed,
                                                    Eigen::Index synth_depth) {
    if (z_dim < 1 || c_dim < 1 || w_dim < 1 || image_dim < 1)
        throw std::invalid_argument("init_models: all dimensions must be >= 1");
    if (depth < 1 || synth_depth < 1)
        throw std::invalid_argument("init_models: depth must be >= 1");

    RngStream root(seed);

    MappingModel mapping;
    mapping.z_dim = z_dim;
    mapping.c_dim = c_dim;
    mapping.w_dim = w_dim;
    RngStream mrng = root.substream("mapping-init");
    Eigen::Index width = z_dim + c_dim;
    for (Eigen::Index i = 0; i < depth; ++i) {
        mapping.layers.push_back(init_layer(mrng, w_dim, width));
        width = w_dim;
    }

    SynthesisModel synthesis;
    synthesis.w_dim = w_dim;
    synthesis.image_dim = image_dim;
    RngStream srng = root.substream("synthesis-init");
    width = w_dim;
    for (Eigen::Index i = 0; i < synth_depth; ++i) {
        synthesis.layers.push_back(init_layer(srng, image_dim, width));
        width = image_dim;
    }

    return {std::move(mapping), std::move(synthesis)};
}

Eigen::MatrixXd map_conditional_batch(const MappingModel& m, const Eigen::MatrixXd& Z,
                                      const Eigen::VectorXd& cvec) {
    if (Z.cols() != m.z_dim)
        throw std::invalid_argument("map_conditional: z has width " + std::to_string(Z.cols()) +
                                    ", model expects " + std::to_string(m.z_dim));
    if (cvec.size() != m.c_dim)
        throw std::invalid_argument("map_conditional: condition vector has length " +
                                    std::to_string(cvec.size()) + ", model expects " +
                                    std::to_string(m.c_dim));
    if (!Z.allFinite() || !cvec.allFinite())
        throw std::invalid_argument("map_conditional: non-finite input");

    const Eigen::Index n = Z.rows();
    Eigen::MatrixXd h(n, m.z_dim + m.c_dim);
    h.leftCols(m.z_dim) = Z;
    h.rightCols(m.c_dim) = cvec.transpose().replicate(n, 1);

    // Scale each concatenated row to unit RMS before the first layer.
    const Eigen::ArrayXd rms =
        (h.rowwise().squaredNorm().array() / static_cast<double>(h.cols())).sqrt();
    h.array().colwise() /= rms.max(1e-300);

    for (const auto& layer : m.layers) {
        h *= layer.weight.transpose();
        h.rowwise() += layer.bias.transpose();
        h = leaky(std::move(h), m.leaky_slope);
    }
    return h;
}

LatentVector map_conditional(const MappingModel& m, const LatentVector& z,
                             const Eigen::VectorXd& cvec) {
    if (z.space != LatentSpace::Z)
        throw std::invalid_argument("map_conditional expects a Z-space vector, got " +
                                    to_string(z.space));
    const Eigen::MatrixXd w = map_conditional_batch(m, z.data.transpose(), cvec);
    return {LatentSpace::W, w.row(0).transpose()};
}

Eigen::MatrixXd p_transform_rows(const Eigen::MatrixXd& rows, PDirection dir) {
    const double slope = dir == PDirection::WtoP ? kPSlope : kLeakySlope;
    return (rows.array() >= 0.0).select(rows, slope * rows);
}

LatentVector p_transform(const LatentVector& v, PDirection dir) {
    const LatentSpace expect = dir == PDirection::WtoP ? LatentSpace::W : LatentSpace::P;
    const LatentSpace target = dir == PDirection::WtoP ? LatentSpace::P : LatentSpace::W;
    if (v.space != expect)
        throw std::invalid_argument("p_transform expects a " + to_string(expect) +
                                    "-space vector, got " + to_string(v.space));
    return {target, p_transform_rows(v.data.transpose(), dir).row(0).transpose()};
}

Eigen::MatrixXd synthesize_batch(const SynthesisModel& m, const Eigen::MatrixXd& W) {
    if (W.cols() != m.w_dim)
        throw std::invalid_argument("synthesize: w has width " + std::to_string(W.cols()) +
                                    ", model expects " + std::to_string(m.w_dim));
    if (!W.allFinite()) throw std::invalid_argument("synthesize: non-finite input");

    Eigen::MatrixXd h = W;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        h *= m.layers[i].weight.transpose();
        h.rowwise() += m.layers[i].bias.transpose();
        if (i + 1 < m.layers.size()) h = leaky(std::move(h), m.leaky_slope);
    }
    return h;
}

Eigen::VectorXd synthesize(const SynthesisModel& m, const LatentVector& w) {
    if (w.space != LatentSpace::W)
        throw std::invalid_argument("synthesize expects a W-space vector, got " +
                                    to_string(w.space));
    return synthesize_batch(m, w.data.transpose()).row(0).transpose();
}

Eigen::VectorXd synthesize_grad(const SynthesisModel& m, const LatentVector& w,
                                const Eigen::VectorXd& upstream) {
    if (w.space != LatentSpace::W)
        throw std::invalid_argument("synthesize_grad expects a W-space vector, got " +
                                    to_string(w.space));
    if (w.data.size() != m.w_dim)
        throw std::invalid_argument("synthesize_grad: w has length " +
                                    std::to_string(w.data.size()) + ", model expects " +
                                    std::to_string(m.w_dim));
    if (upstream.size() != m.image_dim)
        throw std::invalid_argument("synthesize_grad: upstream has length " +
                                    std::to_string(upstream.size()) + ", model expects " +
                                    std::to_string(m.image_dim));

    const std::size_t depth = m.layers.size();
    std::vector<Eigen::VectorXd> pre(depth);
    Eigen::VectorXd h = w.data;
    for (std::size_t i = 0; i < depth; ++i) {
        pre[i] = m.layers[i].weight * h + m.layers[i].bias;
        h = i + 1 < depth
                ? Eigen::VectorXd((pre[i].array() >= 0.0).select(pre[i], m.leaky_slope * pre[i]))
                : pre[i];
    }

    Eigen::VectorXd grad = upstream;
    for (std::size_t i = depth; i-- > 0;) {
        if (i + 1 < depth)
            grad.array() *= (pre[i].array() >= 0.0).select(
                Eigen::ArrayXd::Ones(pre[i].size()), m.leaky_slope);
        grad = m.layers[i].weight.transpose() * grad;
    }
    return grad;
}

namespace {

void save_model_file(const std::filesystem::path& path, const std::string& type,
                     ordered_json dims, const std::vector<DenseLayer>& layers,
                     double leaky_slope) {
    Blob blob;
    blob.meta = std::move(dims);
    blob.meta["type"] = type;
    blob.meta["depth"] = layers.size();
    blob.meta["leaky_slope"] = leaky_slope;
    save_layers(blob, layers);
    write_container(path, blob);
}

Blob load_model_file(const std::filesystem::path& path, const std::string& type) {
    Blob blob = read_container(path);
    const std::string actual = blob.meta.value("type", "");
    if (actual != type)
        throw data_error("'" + path.string() + "' holds a '" + actual + "' model, expected '" +
                         type + "'");
    return blob;
}

} // namespace

void save_mapping(const std::filesystem::path& path, const MappingModel& m) {
    save_model_file(path, "mapping",
                    {{"z_dim", m.z_dim}, {"c_dim", m.c_dim}, {"w_dim", m.w_dim}}, m.layers,
                    m.leaky_slope);
}

MappingModel load_mapping(const std::filesystem::path& path) {
    const Blob blob = load_model_file(path, "mapping");
    MappingModel m;
    m.z_dim = blob.meta.at("z_dim").get<Eigen::Index>();
    m.c_dim = blob.meta.at("c_dim").get<Eigen::Index>();
    m.w_dim = blob.meta.at("w_dim").get<Eigen::Index>();
    m.leaky_slope = blob.meta.at("leaky_slope").get<double>();
    m.layers = load_layers(blob, blob.meta.at("depth").get<Eigen::Index>());
    check_layers(m.layers, m.z_dim + m.c_dim, m.w_dim, path.string());
    return m;
}

void save_synthesis(const std::filesystem::path& path, const SynthesisModel& m) {
    save_model_file(path, "synthesis", {{"w_dim", m.w_dim}, {"image_dim", m.image_dim}},
                    m.layers, m.leaky_slope);
}

SynthesisModel load_synthesis(const std::filesystem::path& path) {
    const Blob blob = load_model_file(path, "synthesis");
    SynthesisModel m;
    m.w_dim = blob.meta.at("w_dim").get<Eigen::Index>();
    m.image_dim = blob.meta.at("image_dim").get<Eigen::Index>();
    m.leaky_slope = blob.meta.at("leaky_slope").get<double>();
    m.layers = load_layers(blob, blob.meta.at("depth").get<Eigen::Index>());
    check_layers(m.layers, m.w_dim, m.image_dim, path.string());
    return m;
}

} // namespace clat
