/// @file relevance.hpp
/// @brief Relevance of context tokens to the distilled keywords, and the
/// standardized bias derived from it.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "genius/numkit/numkit.hpp"
#include "genius/steer/keywords.hpp"

namespace genius::steer {

using numkit::TokenMatrix;
using numkit::Vector;

enum class TokenKind { Text, Image };

/// Where a context token came from. `image` is the 1-based image number.
struct TokenSource {
    TokenKind kind = TokenKind::Text;
    int image = 0;

    static TokenSource text() { return {TokenKind::Text, 0}; }
    static TokenSource of_image(int number) { return {TokenKind::Image, number}; }
};

/// Per-token relevance S. Tokens with `included == false` (text tokens and
/// tokens of irrelevant images) take no part in standardization and get no bias.
struct RelevanceMap {
    std::vector<double> scores;
    std::vector<TokenSource> sources;
    std::vector<bool> included;

    std::size_t size() const { return scores.size(); }
    std::vector<double> included_scores() const;
};

/// Focus string -> one or more keyword embeddings.
using KeywordEmbeddings = std::map<std::string, std::vector<Vector>>;

/// S_j = max over the token's keywords of cosine(keyword, token_j).
///
/// Image tokens use the keywords of their image's focus. Base ("all") images
/// use the mean embedding of their own tokens as the image-level keyword.
/// Irrelevant images and text tokens score 0 and are excluded.
/// Throws DomainError on zero-norm embeddings and ContractError on shape
/// mismatches or a missing keyword embedding.
RelevanceMap relevance_map(const KeywordPlan& plan, const TokenMatrix& token_embeddings,
                           const KeywordEmbeddings& keyword_embeddings,
                           const std::vector<TokenSource>& sources);

/// F(S)_j = (S_j - mean) / (population stddev + epsilon).
/// Constant input maps to exact zeros. Throws ContractError on empty input or epsilon <= 0.
std::vector<double> standardize(std::span<const double> scores, double epsilon);

/// Standardized bias over all tokens of the map, 0 for excluded tokens.
Vector bias_map(const RelevanceMap& relevance, double epsilon);

/// Deterministic bag-of-words text embedding for offline runs.
///
/// Each lower-cased word seeds a Gaussian vector; a text embeds to the sum of
/// its word vectors.
class HashEmbedder {
public:
    HashEmbedder(Eigen::Index dim, std::uint64_t seed);

    Eigen::Index dim() const { return dim_; }
    Vector embed(std::string_view text) const;
    /// One embedding per comma-separated keyword of every non-empty, non-"all" focus.
    KeywordEmbeddings embed_plan(const KeywordPlan& plan) const;

private:
    Eigen::Index dim_;
    std::uint64_t seed_;
};

double cosine(const Vector& a, const Vector& b);

}  // namespace genius::steer
