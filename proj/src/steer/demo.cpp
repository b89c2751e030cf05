#include "genius/steer/demo.hpp"

#include <algorithm>
#include <numeric>

#include "genius/error.hpp"
#include "genius/steer/keywords.hpp"

namespace genius::steer {

namespace {

using numkit::Matrix;

Matrix weight(std::uint64_t seed, int layer, int head, int which, Eigen::Index d) {
    numkit::Rng rng(numkit::mix_seed(seed, static_cast<std::uint64_t>(1000 * layer + 10 * head + which)));
    return rng.normal_matrix(d, d, 1.0 / std::sqrt(static_cast<double>(d)));
}

}  // namespace

void DemoOptions::validate() const {
    for (int v : {d_model, layers, heads, steps, images, tokens_per_image, queries}) {
        if (v <= 0) throw ContractError("steer demo sizes must be positive");
    }
    if (text_tokens < 0 || top_k < 0) throw ContractError("steer demo counts must be non-negative");
}

double attention_mass(const AttentionTrace& trace, const std::vector<int>& keys) {
    double total = 0.0;
    long rows = 0;
    for (const auto& [key, w] : trace.fragments()) {
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (int k : keys) total += w(r, k);
            ++rows;
        }
    }
    return rows == 0 ? 0.0 : total / static_cast<double>(rows);
}

DemoResult run_steer_demo(const DemoOptions& o, const SteeringConfig& config) {
    o.validate();
    config.validate();
    DemoResult res;
    res.plan = parse_keyword_response(o.keywords, o.images);

    const Eigen::Index d = o.d_model;
    const HashEmbedder embedder(d, o.seed);
    const KeywordEmbeddings kw = embedder.embed_plan(res.plan);
    numkit::Rng rng(o.seed);

    const Eigen::Index n_ctx = static_cast<Eigen::Index>(o.images) * o.tokens_per_image + o.text_tokens;
    TokenMatrix ctx(n_ctx, d);
    Eigen::Index row = 0;
    for (int img = 1; img <= o.images; ++img) {
        Vector anchor = Vector::Zero(d);
        const std::string& focus = res.plan.focus_for(img);
        if (!res.plan.is_base(img) && !res.plan.is_irrelevant(img)) {
            for (const Vector& v : kw.at(focus)) anchor += v;
            anchor *= 3.0 / anchor.norm();
        }
        for (int t = 0; t < o.tokens_per_image; ++t, ++row) {
            Vector tok = rng.normal_vector(d, 0.5);
            if (t % 2 == 0) tok += anchor;
            ctx.row(row) = tok.transpose();
            res.sources.push_back(TokenSource::of_image(img));
        }
    }
    for (int t = 0; t < o.text_tokens; ++t, ++row) {
        ctx.row(row) = rng.normal_vector(d).transpose();
        res.sources.push_back(TokenSource::text());
    }

    res.relevance = relevance_map(res.plan, ctx, kw, res.sources);
    res.context_bias = bias_map(res.relevance, config.epsilon);

    std::vector<int> order(static_cast<std::size_t>(n_ctx));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return res.context_bias(a) > res.context_bias(b); });
    for (int k : order) {
        if (static_cast<int>(res.top_keys.size()) >= o.top_k || res.context_bias(k) <= 0.0) break;
        res.top_keys.push_back(k);
    }

    const TokenMatrix gen0 = rng.normal_tokens(o.queries, d);
    std::vector<TokenMatrix> step_noise;
    for (int s = 0; s < o.steps; ++s) step_noise.push_back(rng.normal_tokens(o.queries, d, 0.1));
    const Vector fmap = pad_bias(res.context_bias, n_ctx + o.queries);

    auto forward = [&](const SteeringConfig& cfg, AttentionTrace& trace, int* steered) {
        for (int s = 0; s < o.steps; ++s) {
            TokenMatrix gen = gen0 + step_noise[static_cast<std::size_t>(s)];
            for (int l = 0; l < o.layers; ++l) {
                TokenMatrix all(n_ctx + o.queries, d);
                all << ctx, gen;
                const TokenMatrix normed = numkit::rms_normalize_rows(all);
                TokenMatrix update = TokenMatrix::Zero(o.queries, d);
                for (int h = 0; h < o.heads; ++h) {
                    const TokenMatrix q = normed.bottomRows(o.queries) * weight(o.seed, l, h, 0, d);
                    const TokenMatrix k = normed * weight(o.seed, l, h, 1, d);
                    const TokenMatrix v = all * weight(o.seed, l, h, 2, d);
                    auto att = steered_attention(q, k, v, fmap, cfg, l, s, h);
                    update += att.output;
                    if (steered != nullptr && att.steered) ++*steered;
                    trace.add({l, h, s}, std::move(att.weights));
                }
                gen += update / static_cast<double>(o.heads);
            }
        }
    };
    SteeringConfig off = config;
    off.lambda = 0.0;
    forward(off, res.before, nullptr);
    forward(config, res.after, &res.steered_fragments);
    res.mass_before = attention_mass(res.before, res.top_keys);
    res.mass_after = attention_mass(res.after, res.top_keys);
    return res;
}

}  // namespace genius::steer
