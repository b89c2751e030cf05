#include "genius/steer/steering.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "genius/error.hpp"

namespace genius::steer {

Selection Selection::only(std::set<int> indices) {
    for (int i : indices) {
        if (i < 0) throw ContractError("selection indices must be non-negative");
    }
    return Selection(false, std::move(indices));
}

Selection Selection::parse(std::string_view spec) {
    if (spec == "all") return all();
    if (spec.empty() || spec == "none") return none();
    std::set<int> indices;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const auto comma = spec.find(',', pos);
        const auto piece = spec.substr(pos, comma == std::string_view::npos ? spec.size() - pos : comma - pos);
        int value = 0;
        const auto [ptr, ec] = std::from_chars(piece.data(), piece.data() + piece.size(), value);
        if (piece.empty() || ec != std::errc() || ptr != piece.data() + piece.size() || value < 0) {
            throw ContractError("invalid selection \"" + std::string(spec) +
                                "\": expected all, none or a list of non-negative integers");
        }
        indices.insert(value);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return only(std::move(indices));
}

std::string Selection::to_string() const {
    if (all_) return "all";
    if (indices_.empty()) return "none";
    std::string out;
    for (int i : indices_) {
        if (!out.empty()) out += ",";
        out += std::to_string(i);
    }
    return out;
}

void SteeringConfig::validate() const {
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw ContractError("steering lambda must be finite and >= 0");
    }
    if (!std::isfinite(epsilon) || !(epsilon > 0.0)) {
        throw ContractError("steering epsilon must be finite and > 0");
    }
}

TokenMatrix inject_bias(const TokenMatrix& logits, const Vector& fmap, double lambda) {
    if (fmap.size() != logits.cols()) {
        throw ContractError("inject_bias: bias length " + std::to_string(fmap.size()) +
                            " does not match key count " + std::to_string(logits.cols()));
    }
    if (lambda < 0.0) {
        throw ContractError("inject_bias: lambda must be >= 0");
    }
    if (lambda == 0.0) {
        return logits;
    }
    TokenMatrix out = logits;
    out.rowwise() += (lambda * fmap).transpose();
    return out;
}

Vector pad_bias(const Vector& context_bias, Eigen::Index total_keys) {
    if (total_keys < context_bias.size()) {
        throw ContractError("pad_bias: fewer keys than context tokens");
    }
    Vector out = Vector::Zero(total_keys);
    out.head(context_bias.size()) = context_bias;
    return out;
}

void AttentionTrace::add(const TraceKey& key, TokenMatrix weights) {
    if (fragments_.contains(key)) {
        throw ContractError("trace already holds layer " + std::to_string(key.layer) + " head " +
                            std::to_string(key.head) + " step " + std::to_string(key.step));
    }
    if (!fragments_.empty()) {
        const auto& first = fragments_.begin()->second;
        if (first.rows() != weights.rows() || first.cols() != weights.cols()) {
            throw ContractError("trace fragments must share one shape");
        }
    }
    for (Eigen::Index r = 0; r < weights.rows(); ++r) {
        if (std::abs(weights.row(r).sum() - 1.0) > 1e-9 || weights.row(r).minCoeff() < 0.0) {
            throw ContractError("trace rows must be probability distributions");
        }
    }
    fragments_.emplace(key, std::move(weights));
}

SteeredAttention steered_attention(const TokenMatrix& queries, const TokenMatrix& keys,
                                   const TokenMatrix& values, const Vector& fmap,
                                   const SteeringConfig& config, int layer, int step, int head) {
    config.validate();
    if (queries.cols() != keys.cols() || queries.cols() == 0) {
        throw ContractError("steered_attention: queries and keys must share a positive width");
    }
    if (keys.rows() != values.rows() || keys.rows() == 0) {
        throw ContractError("steered_attention: keys and values must have the same non-zero row count");
    }
    SteeredAttention res;
    TokenMatrix logits = queries * keys.transpose();
    res.steered = config.applies(layer, step, head) && config.lambda != 0.0;
    if (res.steered) {
        logits = inject_bias(logits, fmap, config.lambda);
    } else if (fmap.size() != keys.rows()) {
        throw ContractError("steered_attention: bias length does not match key count");
    }
    logits /= std::sqrt(static_cast<double>(queries.cols()));
    res.weights = numkit::softmax_rows(logits);
    res.output = res.weights * values;
    return res;
}

Vector Heatmap::key_profile() const {
    return weights.colwise().mean().transpose();
}

Heatmap reduce_trace(const AttentionTrace& trace, const Selection& layers, const Selection& heads,
                     const Selection& steps) {
    if (trace.empty()) {
        throw ContractError("reduce_trace: trace is empty");
    }
    Heatmap map;
    for (const auto& [key, w] : trace.fragments()) {
        if (!layers.contains(key.layer) || !heads.contains(key.head) || !steps.contains(key.step)) {
            continue;
        }
        if (map.fragments == 0) {
            map.weights = TokenMatrix::Zero(w.rows(), w.cols());
        }
        map.weights += w;
        ++map.fragments;
    }
    if (map.fragments == 0) {
        throw ContractError("reduce_trace: selection matches no trace fragment");
    }
    map.weights /= static_cast<double>(map.fragments);
    return map;
}

void write_heatmap_csv(std::ostream& out, const Heatmap& map) {
    out << "query";
    for (Eigen::Index c = 0; c < map.weights.cols(); ++c) {
        out << ",key_" << c;
    }
    out << "\n";
    char buf[32];
    for (Eigen::Index r = 0; r < map.weights.rows(); ++r) {
        out << r;
        for (Eigen::Index c = 0; c < map.weights.cols(); ++c) {
            std::snprintf(buf, sizeof buf, ",%.6f", map.weights(r, c));
            out << buf;
        }
        out << "\n";
    }
}

void write_heatmap_pgm(std::ostream& out, const Heatmap& map) {
    out << "P2\n" << map.weights.cols() << " " << map.weights.rows() << "\n255\n";
    for (Eigen::Index r = 0; r < map.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < map.weights.cols(); ++c) {
            const double w = std::clamp(map.weights(r, c), 0.0, 1.0);
            out << (c ? " " : "") << static_cast<int>(std::lround(255.0 * w));
        }
        out << "\n";
    }
}

void export_trace(const AttentionTrace& trace, const std::filesystem::path& stem,
                  const Selection& layers, const Selection& heads, const Selection& steps) {
    const Heatmap map = reduce_trace(trace, layers, heads, steps);
    auto open = [](const std::filesystem::path& p) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw IoError("cannot write " + p.string());
        return f;
    };
    {
        auto f = open(std::filesystem::path(stem).concat(".csv"));
        write_heatmap_csv(f, map);
    }
    {
        auto f = open(std::filesystem::path(stem).concat(".pgm"));
        write_heatmap_pgm(f, map);
    }
}

}  // namespace genius::steer
