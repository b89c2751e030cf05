/// @file decoder.hpp
/// @brief One mixture-of-transformer decoder block with separate understanding
/// and generation experts sharing a single attention operation.
///
/// Conventions:
///  - Context and query tokens are row vectors; an expert projects a token
///    row x to x * W with W of shape d_model x d_attn.
///  - The layer map works on column vectors: Up is d_model x d_model and
///    acts as Up * v.
///  - There is one attention head and d_attn == d_model so the residual
///    connection type-checks.

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "genius/numkit/numkit.hpp"

namespace genius::mot {

using numkit::Matrix;
using numkit::TokenMatrix;
using numkit::Vector;

/// Query/key/value projections of one expert.
struct ExpertProjections {
    Matrix wq;
    Matrix wk;
    Matrix wv;

    Eigen::Index d_model() const { return wq.rows(); }
    Eigen::Index d_attn() const { return wq.cols(); }
    /// Throws ContractError unless all three are d_model x d_attn with d_attn > 0.
    void validate() const;
};

/// Elementwise map applied after the Up projection.
enum class Activation { Identity, Silu, Tanh, Gelu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);
double apply(Activation a, double x);
Vector apply(Activation a, const Vector& v);

struct DecoderLayerParams {
    ExpertProjections und;
    ExpertProjections gen;
    Matrix up;
    Vector b;
    Activation activation = Activation::Identity;
    /// Optional projection applied to f(Up N(A)); identity when absent.
    std::optional<Matrix> down;

    Eigen::Index d_model() const { return up.rows(); }
    void validate() const;
};

/// Encoded context: understanding-expert rows (text and images) and
/// generation-expert rows (images). Either block may have zero rows.
struct Context {
    TokenMatrix und;
    TokenMatrix gen;

    static Context empty(Eigen::Index d_model);
    Eigen::Index size() const { return und.rows() + gen.rows(); }
    Eigen::Index d_model() const { return std::max(und.cols(), gen.cols()); }

    /// First `und_rows` understanding rows and first `gen_rows` generation rows.
    Context prefix(Eigen::Index und_rows, Eigen::Index gen_rows) const;
    /// Row-wise concatenation of both blocks.
    Context concat(const Context& other) const;
};

/// Softmax weights and output of the shared attention for a single query.
struct AttentionResult {
    Vector output;
    /// Weights over keys ordered [und rows, gen rows, query's own key].
    Vector weights;
    /// Pre-softmax logits q . k (not yet divided by sqrt(d_attn)).
    Vector logits;
};

/// Mixture attention for one query token g.
///
/// Every token is RMS normalized and then projected by its expert. The query
/// attends over the concatenated context keys plus its own key:
///   softmax(G_q [U_k ; G_k]^T / sqrt(d_attn)) [U_v ; G_v].
/// `context_bias`, when given, is added to the raw logits of the context keys
/// (not the query's own key) before scaling; its length must equal ctx.size().
AttentionResult moe_attention(const Context& ctx, const Vector& g,
                              const DecoderLayerParams& params,
                              const Vector* context_bias = nullptr);

/// MoE_attn output only.
Vector moe_attn(const Context& ctx, const Vector& g, const DecoderLayerParams& params);

/// A(u, g) = MoE_attn(u, g) + g.
Vector attn_fn(const Context& ctx, const Vector& g, const DecoderLayerParams& params);

/// Layer map applied to a precomputed attention output a:
///   a + Down(f(Up N(a))) + b.
Vector layer_map(const Vector& attn_out, const Matrix& up, const Vector& b,
                 Activation activation, const std::optional<Matrix>& down = std::nullopt);

/// L_{Up,b}(u, g) = A(u, g) + f(Up N(A(u, g))) + b.
Vector layer_forward(const Context& ctx, const Vector& g, const DecoderLayerParams& params);

/// Same as layer_forward but with Up and b replaced.
Vector layer_forward_with(const Context& ctx, const Vector& g, const DecoderLayerParams& params,
                          const Matrix& up, const Vector& b);

/// Seeded random block: projections and Up with entries N(0, 1/d_model), b = 0.
DecoderLayerParams random_params(numkit::Rng& rng, Eigen::Index d_model,
                                 Activation activation = Activation::Identity);

/// Seeded random context with N(0, 1) entries.
Context random_context(numkit::Rng& rng, Eigen::Index d_model, Eigen::Index und_rows,
                       Eigen::Index gen_rows);

}  // namespace genius::mot
