#include "clat/condition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "clat/error.hpp"

namespace clat {

std::string to_string(SubKind k) {
    switch (k) {
        case SubKind::categorical: return "categorical";
        case SubKind::distribution: return "distribution";
        case SubKind::text_embedding: return "text-embedding";
    }
    throw std::invalid_argument("unhandled SubKind");
}

SubKind sub_kind_from_string(const std::string& s) {
    if (s == "categorical") return SubKind::categorical;
    if (s == "distribution") return SubKind::distribution;
    if (s == "text-embedding") return SubKind::text_embedding;
    throw data_error("unknown sub-condition kind '" + s + "'");
}

std::optional<Eigen::Index> SubConditionDescriptor::vocab_index(const std::string& label) const {
    for (std::size_t i = 0; i < vocab.size(); ++i)
        if (vocab[i] == label) return static_cast<Eigen::Index>(i);
    return std::nullopt;
}

Eigen::Index ConditionSchema::total_dim() const {
    Eigen::Index total = 0;
    for (const auto& s : subconditions) total += s.dim;
    return total;
}

Eigen::Index ConditionSchema::offset_of(std::size_t sub) const {
    if (sub >= subconditions.size())
        throw std::invalid_argument("offset_of: sub-condition index out of range");
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < sub; ++i) off += subconditions[i].dim;
    return off;
}

std::size_t ConditionSchema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < subconditions.size(); ++i)
        if (subconditions[i].name == name) return i;
    throw data_error("schema has no sub-condition named '" + name + "'");
}

const SubConditionDescriptor& ConditionSchema::sub(const std::string& name) const {
    return subconditions[index_of(name)];
}

ordered_json ConditionSchema::to_json() const {
    ordered_json j;
    j["subconditions"] = ordered_json::array();
    for (const auto& s : subconditions) {
        j["subconditions"].push_back({{"name", s.name},
                                      {"kind", to_string(s.kind)},
                                      {"dim", s.dim},
                                      {"vocab", s.vocab}});
    }
    return j;
}

ConditionSchema ConditionSchema::from_json(const ordered_json& j) {
    if (!j.contains("subconditions") || !j["subconditions"].is_array())
        throw data_error("schema JSON lacks a subconditions list");
    ConditionSchema schema;
    for (const auto& e : j["subconditions"]) {
        SubConditionDescriptor d;
        d.name = e.at("name").get<std::string>();
        d.kind = sub_kind_from_string(e.at("kind").get<std::string>());
        d.dim = e.at("dim").get<Eigen::Index>();
        d.vocab = e.value("vocab", std::vector<std::string>{});
        if (d.dim < 1) throw data_error("sub-condition '" + d.name + "' has dim < 1");
        if (d.kind != SubKind::text_embedding &&
            static_cast<Eigen::Index>(d.vocab.size()) != d.dim)
            throw data_error("sub-condition '" + d.name + "' vocab size does not match dim");
        schema.subconditions.push_back(std::move(d));
    }
    return schema;
}

namespace {

struct RawColumns {
    std::map<std::string, std::map<std::string, std::int64_t>> categorical;  // name -> label counts
    std::map<std::string, std::set<std::string>> dist_outcomes;              // name -> outcome labels
    std::map<std::string, std::map<std::string, std::int64_t>> dist_argmax;  // name -> argmax counts
    std::set<std::string> text_names;
};

void check_kind_clash(const RawColumns& cols, const std::string& name, const char* kind) {
    const int uses = (cols.categorical.count(name) ? 1 : 0) +
                     (cols.dist_outcomes.count(name) ? 1 : 0) +
                     (cols.text_names.count(name) ? 1 : 0);
    if (uses > 1)
        throw data_error("sub-condition '" + name + "' is used as " + kind +
                         " but already appears with another kind");
}

} // namespace

IngestResult ingest_metadata(const std::vector<DatasetRecord>& records,
                             std::int64_t min_count, Eigen::Index text_dim) {
    if (records.empty()) throw data_error("ingest_metadata: no records");
    if (text_dim < 1) throw std::invalid_argument("ingest_metadata: text_dim < 1");

    RawColumns cols;
    for (const auto& r : records) {
        if (r.sample_id.empty()) throw data_error("ingest_metadata: record without an id");
        for (const auto& [name, label] : r.categorical) {
            cols.categorical[name][label] += 1;
            check_kind_clash(cols, name, "categorical");
        }
        for (const auto& [name, weights] : r.distribution) {
            double total = 0.0;
            std::string argmax;
            double best = -1.0;
            for (const auto& [outcome, w] : weights) {
                if (!std::isfinite(w))
                    throw data_error("record '" + r.sample_id + "': non-finite weight for '" +
                                     name + "/" + outcome + "'");
                if (w < 0.0)
                    throw data_error("record '" + r.sample_id + "': negative weight for '" +
                                     name + "/" + outcome + "'");
                total += w;
                cols.dist_outcomes[name].insert(outcome);
                if (w > best) {
                    best = w;
                    argmax = outcome;
                }
            }
            if (total <= 0.0)
                throw data_error("record '" + r.sample_id + "': zero total mass for '" + name + "'");
            cols.dist_argmax[name][argmax] += 1;
            check_kind_clash(cols, name, "distribution");
        }
        for (const auto& [name, tokens] : r.text) {
            (void)tokens;
            cols.text_names.insert(name);
            check_kind_clash(cols, name, "text");
        }
    }

    IngestResult result;
    for (const auto& [name, counts] : cols.categorical) {
        SubConditionDescriptor d;
        d.name = name;
        d.kind = SubKind::categorical;
        d.vocab.push_back(kUnknownLabel);
        std::int64_t folded = 0;
        for (const auto& [label, count] : counts) {
            // Literal Unknown labels stay folded: the fold target is not a
            // survivor slot.
            if (label != kUnknownLabel && count >= min_count)
                d.vocab.push_back(label);
            else
                folded += count;
        }
        std::sort(d.vocab.begin() + 1, d.vocab.end());
        d.dim = static_cast<Eigen::Index>(d.vocab.size());
        auto& sup = result.support[name];
        sup[kUnknownLabel] = folded;
        for (const auto& [label, count] : counts)
            if (d.vocab_index(label).value_or(0) != 0) sup[label] = count;
        result.schema.subconditions.push_back(std::move(d));
    }
    for (const auto& [name, outcomes] : cols.dist_outcomes) {
        SubConditionDescriptor d;
        d.name = name;
        d.kind = SubKind::distribution;
        d.vocab.assign(outcomes.begin(), outcomes.end());  // std::set iterates sorted
        d.dim = static_cast<Eigen::Index>(d.vocab.size());
        result.support[name] = cols.dist_argmax[name];
        result.schema.subconditions.push_back(std::move(d));
    }
    for (const auto& name : cols.text_names) {
        SubConditionDescriptor d;
        d.name = name;
        d.kind = SubKind::text_embedding;
        d.dim = text_dim;
        result.support[name] = {};
        result.schema.subconditions.push_back(std::move(d));
    }
    return result;
}

Eigen::VectorXd embed_tokens(const std::vector<std::string>& tokens, Eigen::Index dim) {
    if (dim < 1) throw std::invalid_argument("embed_tokens: dim < 1");
    if (tokens.empty()) throw std::invalid_argument("embed_tokens: empty token list");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
    for (const auto& tok : tokens) {
        const std::uint64_t h = fnv1a64(tok);
        const auto idx = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim));
        v(idx) += ((h >> 32) & 1) ? 1.0 : -1.0;
    }
    const double norm = v.norm();
    if (norm == 0.0) {
        // Opposite-sign hash collisions can cancel exactly; fall back to the
        // first token's coordinate so the result stays unit norm.
        v(static_cast<Eigen::Index>(fnv1a64(tokens.front()) % static_cast<std::uint64_t>(dim))) = 1.0;
        return v;
    }
    return v / norm;
}

Eigen::VectorXd encode_subcondition(const SubConditionDescriptor& d, const ConditionValue& v) {
    if (std::holds_alternative<Wildcard>(v)) return Eigen::VectorXd::Zero(d.dim);

    switch (d.kind) {
        case SubKind::categorical: {
            const auto* cv = std::get_if<CategoricalValue>(&v);
            if (!cv)
                throw std::invalid_argument("sub-condition '" + d.name +
                                            "' is categorical; value kind does not match");
            if (cv->index < 0 || cv->index >= d.dim)
                throw std::invalid_argument("sub-condition '" + d.name + "': label index " +
                                            std::to_string(cv->index) + " out of range");
            Eigen::VectorXd out = Eigen::VectorXd::Zero(d.dim);
            out(cv->index) = 1.0;
            return out;
        }
        case SubKind::distribution: {
            const auto* dv = std::get_if<DistributionValue>(&v);
            if (!dv)
                throw std::invalid_argument("sub-condition '" + d.name +
                                            "' is a distribution; value kind does not match");
            if (dv->weights.size() != d.dim)
                throw std::invalid_argument("sub-condition '" + d.name + "': expected " +
                                            std::to_string(d.dim) + " weights, got " +
                                            std::to_string(dv->weights.size()));
            if (!dv->weights.allFinite() || (dv->weights.array() < 0.0).any())
                throw std::invalid_argument("sub-condition '" + d.name +
                                            "': weights must be finite and non-negative");
            const double total = dv->weights.sum();
            if (total <= 0.0)
                throw std::invalid_argument("sub-condition '" + d.name + "': zero total mass");
            return dv->weights / total;
        }
        case SubKind::text_embedding: {
            const auto* tv = std::get_if<TextValue>(&v);
            if (!tv)
                throw std::invalid_argument("sub-condition '" + d.name +
                                            "' is a text embedding; value kind does not match");
            if (tv->tokens.empty())
                throw std::invalid_argument("sub-condition '" + d.name + "': empty token list");
            return embed_tokens(tv->tokens, d.dim);
        }
    }
    throw std::invalid_argument("unhandled SubKind");
}

Eigen::VectorXd assemble_condition_vector(const ConditionSchema& schema, const MultiCondition& c) {
    if (c.values.size() != schema.subconditions.size())
        throw std::invalid_argument("assemble_condition_vector: condition has " +
                                    std::to_string(c.values.size()) + " values for " +
                                    std::to_string(schema.subconditions.size()) +
                                    " sub-conditions");
    Eigen::VectorXd out(schema.total_dim());
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < schema.subconditions.size(); ++i) {
        const auto& d = schema.subconditions[i];
        out.segment(off, d.dim) = encode_subcondition(d, c.values[i]);
        off += d.dim;
    }
    return out;
}

MultiCondition apply_wildcard(const ConditionSchema& schema, const MultiCondition& c,
                              const std::vector<std::string>& names) {
    if (c.values.size() != schema.subconditions.size())
        throw std::invalid_argument("apply_wildcard: condition does not match schema");
    MultiCondition out = c;
    for (const auto& name : names) out.values[schema.index_of(name)] = Wildcard{};
    return out;
}

MultiCondition stochastic_mask(const ConditionSchema& schema, const MultiCondition& c,
                               std::size_t k, double p, RngStream& rng) {
    if (c.values.size() != schema.subconditions.size())
        throw std::invalid_argument("stochastic_mask: condition does not match schema");
    if (k > schema.subconditions.size())
        throw std::invalid_argument("stochastic_mask: k exceeds sub-condition count");
    MultiCondition out = c;
    for (const std::size_t i : rng.sample_without_replacement(schema.subconditions.size(), k))
        if (rng.bernoulli(p)) out.values[i] = Wildcard{};
    return out;
}

std::vector<std::int64_t> condition_shape(const ConditionSchema& schema) {
    std::vector<std::int64_t> shape;
    shape.reserve(schema.subconditions.size());
    for (const auto& s : schema.subconditions) shape.push_back(s.dim);
    return shape;
}

MultiCondition record_to_condition(const ConditionSchema& schema, const DatasetRecord& r) {
    MultiCondition c;
    c.values.reserve(schema.subconditions.size());
    for (const auto& d : schema.subconditions) {
        switch (d.kind) {
            case SubKind::categorical: {
                const auto it = r.categorical.find(d.name);
                if (it == r.categorical.end()) {
                    c.values.emplace_back(Wildcard{});
                } else {
                    const auto idx = d.vocab_index(it->second);
                    c.values.emplace_back(CategoricalValue{idx.value_or(0)});  // 0 = Unknown
                }
                break;
            }
            case SubKind::distribution: {
                const auto it = r.distribution.find(d.name);
                if (it == r.distribution.end()) {
                    c.values.emplace_back(Wildcard{});
                } else {
                    Eigen::VectorXd w = Eigen::VectorXd::Zero(d.dim);
                    for (const auto& [outcome, weight] : it->second) {
                        const auto idx = d.vocab_index(outcome);
                        if (!idx)
                            throw data_error("record '" + r.sample_id + "': unknown outcome '" +
                                             outcome + "' for sub-condition '" + d.name + "'");
                        w(*idx) = weight;
                    }
                    c.values.emplace_back(DistributionValue{std::move(w)});
                }
                break;
            }
            case SubKind::text_embedding: {
                const auto it = r.text.find(d.name);
                if (it == r.text.end())
                    c.values.emplace_back(Wildcard{});
                else
                    c.values.emplace_back(TextValue{it->second});
                break;
            }
        }
    }
    return c;
}

std::vector<DatasetRecord> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path.string() + "'");
    std::vector<DatasetRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw data_error(path.string() + ":" + std::to_string(lineno) +
                             ": malformed JSON: " + e.what());
        }
        try {
            DatasetRecord r;
            r.sample_id = j.at("id").get<std::string>();
            if (r.sample_id.empty())
                throw data_error(path.string() + ":" + std::to_string(lineno) + ": empty id");
            if (j.contains("categorical"))
                r.categorical = j["categorical"].get<std::map<std::string, std::string>>();
            if (j.contains("distribution"))
                r.distribution =
                    j["distribution"].get<std::map<std::string, std::map<std::string, double>>>();
            if (j.contains("text"))
                r.text = j["text"].get<std::map<std::string, std::vector<std::string>>>();
            r.image_id = j.value("image", r.sample_id);
            records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw data_error(path.string() + ":" + std::to_string(lineno) +
                             ": record missing or mistyped field: " + e.what());
        }
    }
    return records;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<DatasetRecord>& records) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open '" + path.string() + "' for writing");
    for (const auto& r : records) {
        ordered_json j;
        j["id"] = r.sample_id;
        if (!r.categorical.empty()) j["categorical"] = r.categorical;
        if (!r.distribution.empty()) j["distribution"] = r.distribution;
        if (!r.text.empty()) j["text"] = r.text;
        if (!r.image_id.empty() && r.image_id != r.sample_id) j["image"] = r.image_id;
        out << j.dump() << '\n';
    }
    if (!out) throw data_error("short write to '" + path.string() + "'");
}

} // namespace clat
