#include "genius/steer/relevance.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "genius/error.hpp"

namespace genius::steer {

double cosine(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw ContractError("cosine: dimension mismatch");
    }
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
        throw DomainError("cosine: zero-norm embedding");
    }
    return a.dot(b) / (na * nb);
}

std::vector<double> RelevanceMap::included_scores() const {
    std::vector<double> out;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        if (included[j]) out.push_back(scores[j]);
    }
    return out;
}

RelevanceMap relevance_map(const KeywordPlan& plan, const TokenMatrix& token_embeddings,
                           const KeywordEmbeddings& keyword_embeddings,
                           const std::vector<TokenSource>& sources) {
    const auto n = static_cast<std::size_t>(token_embeddings.rows());
    if (sources.size() != n) {
        throw ContractError("relevance_map: one source entry per token required");
    }
    for (const auto& [focus, vecs] : keyword_embeddings) {
        for (const auto& v : vecs) {
            if (v.size() != token_embeddings.cols()) {
                throw ContractError("relevance_map: keyword embedding for \"" + focus +
                                    "\" has the wrong dimension");
            }
        }
    }

    // Image-level keyword of every base image: mean of its token embeddings.
    std::map<int, Vector> image_mean;
    std::map<int, int> image_tokens;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& src = sources[j];
        if (src.kind != TokenKind::Image) continue;
        if (src.image < 1 || src.image > plan.image_count()) {
            throw ContractError("relevance_map: token refers to unknown " + KeywordPlan::key(src.image));
        }
        if (!plan.is_base(src.image)) continue;
        auto [it, inserted] = image_mean.try_emplace(src.image, Vector::Zero(token_embeddings.cols()));
        it->second += token_embeddings.row(static_cast<Eigen::Index>(j)).transpose();
        ++image_tokens[src.image];
    }
    for (auto& [img, v] : image_mean) {
        v /= static_cast<double>(image_tokens[img]);
    }

    RelevanceMap map;
    map.scores.assign(n, 0.0);
    map.included.assign(n, false);
    map.sources = sources;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& src = sources[j];
        if (src.kind != TokenKind::Image || plan.is_irrelevant(src.image)) {
            continue;
        }
        const Vector token = token_embeddings.row(static_cast<Eigen::Index>(j)).transpose();
        if (plan.is_base(src.image)) {
            map.scores[j] = cosine(image_mean.at(src.image), token);
        } else {
            const std::string& focus = plan.focus_for(src.image);
            const auto it = keyword_embeddings.find(focus);
            if (it == keyword_embeddings.end() || it->second.empty()) {
                throw ContractError("relevance_map: no embedding for focus \"" + focus + "\"");
            }
            double best = -1.0;
            for (const auto& kw : it->second) {
                best = std::max(best, cosine(kw, token));
            }
            map.scores[j] = best;
        }
        map.included[j] = true;
    }
    return map;
}

std::vector<double> standardize(std::span<const double> scores, double epsilon) {
    if (scores.empty()) {
        throw ContractError("standardize: no scores");
    }
    if (!(epsilon > 0.0)) {
        throw ContractError("standardize: epsilon must be positive");
    }
    // Mean is accumulated as an offset from the first score so constant
    // input yields deviations of exactly zero.
    const double anchor = scores.front();
    double shift = 0.0;
    for (double s : scores) shift += s - anchor;
    const double mean = anchor + shift / static_cast<double>(scores.size());

    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    const double sigma = std::sqrt(var / static_cast<double>(scores.size()));

    std::vector<double> out;
    out.reserve(scores.size());
    for (double s : scores) out.push_back((s - mean) / (sigma + epsilon));
    return out;
}

Vector bias_map(const RelevanceMap& relevance, double epsilon) {
    Vector bias = Vector::Zero(static_cast<Eigen::Index>(relevance.size()));
    const auto included = relevance.included_scores();
    if (included.empty()) {
        return bias;
    }
    const auto fmap = standardize(included, epsilon);
    std::size_t k = 0;
    for (std::size_t j = 0; j < relevance.size(); ++j) {
        if (relevance.included[j]) {
            bias(static_cast<Eigen::Index>(j)) = fmap[k++];
        }
    }
    return bias;
}

HashEmbedder::HashEmbedder(Eigen::Index dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim <= 0) {
        throw ContractError("HashEmbedder: dimension must be positive");
    }
}

Vector HashEmbedder::embed(std::string_view text) const {
    Vector out = Vector::Zero(dim_);
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
        for (unsigned char c : word) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        numkit::Rng rng(numkit::mix_seed(seed_, h));
        out += rng.normal_vector(dim_);
        word.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            word.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

KeywordEmbeddings HashEmbedder::embed_plan(const KeywordPlan& plan) const {
    KeywordEmbeddings out;
    for (const auto& focus : plan.focus) {
        if (focus.empty() || focus == "all" || out.contains(focus)) continue;
        std::vector<Vector> vecs;
        for (const auto& kw : split_keywords(focus)) {
            vecs.push_back(embed(kw));
        }
        out.emplace(focus, std::move(vecs));
    }
    return out;
}

}  // namespace genius::steer
