/// @file demo.hpp
/// @brief Seeded toy forward pass for the steering demo: a few attention
/// layers over image and text context tokens, run once unsteered and once
/// with bias injection.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genius/steer/relevance.hpp"
#include "genius/steer/steering.hpp"

namespace genius::steer {

struct DemoOptions {
    std::uint64_t seed = 7;
    int d_model = 16;
    int layers = 4;
    int heads = 2;
    int steps = 3;             // generation steps, each re-runs all layers
    int images = 2;
    int tokens_per_image = 6;
    int text_tokens = 4;
    int queries = 4;           // generation tokens
    int top_k = 3;             // keys counted as "top relevance"
    /// Planner answer, one entry per image.
    std::string keywords = R"({"<image 1>": "red car", "<image 2>": ""})";

    void validate() const;  // ContractError on non-positive sizes
};

struct DemoResult {
    KeywordPlan plan;
    RelevanceMap relevance;         // context tokens only
    std::vector<TokenSource> sources;
    Vector context_bias;            // standardized, 0 for excluded tokens
    std::vector<int> top_keys;      // highest bias first, positive bias only
    AttentionTrace before;          // lambda forced to 0
    AttentionTrace after;           // the given config
    int steered_fragments = 0;
    double mass_before = 0.0;       // mean attention on top_keys per query row
    double mass_after = 0.0;
};

/// Context layout: image 1 tokens, image 2 tokens, ..., then text tokens.
/// Half of the tokens of every image with a specific focus are planted near
/// the embedding of its keywords.
DemoResult run_steer_demo(const DemoOptions& options, const SteeringConfig& config);

/// Mean over fragments and query rows of the weight on `keys`.
double attention_mass(const AttentionTrace& trace, const std::vector<int>& keys);

}  // namespace genius::steer
