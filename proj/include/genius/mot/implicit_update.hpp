/// @file implicit_update.hpp
/// @brief Context-to-parameter equivalences for the decoder block.
///
/// Conditioning the block on a larger context u instead of a reduced context
/// u' is reproduced exactly by a rank-one change of Up plus a shift of b.
/// Growing the context one segment at a time turns that change into a
/// sequence of gradient-descent steps on a linear trace loss.

#pragma once

#include <vector>

#include "genius/mot/decoder.hpp"

namespace genius::mot {

struct PerturbationPair {
    Matrix delta_up;
    Vector delta_b;
};

/// Parameter change that makes the block on `reduced` reproduce the block on `full`:
///   delta_b  = A(u, g) - A(u', g)
///   delta_up = Up (N(A(u, g)) - N(A(u', g))) N(A(u', g))^T / |N(A(u', g))|^2
/// Throws DomainError when either attention output is zero.
PerturbationPair perturbation_for(const Context& full, const Context& reduced, const Vector& g,
                                  const DecoderLayerParams& params);

/// Ordered context segments; prefix(i) stacks the first i of them.
struct PrefixChain {
    std::vector<Context> segments;
    Vector g;

    std::size_t length() const { return segments.size(); }
    /// prefix(0) is the empty context.
    Context prefix(std::size_t i) const;
};

/// State after absorbing i segments.
struct ChainState {
    Matrix up;
    Vector b;
    Vector attn;  ///< A(u^(i), g)
};

/// Quantities of the step from prefix i to prefix i + 1.
struct ChainStep {
    Vector normalized_delta;  ///< N(A(u^(i), g)) - N(A(u^(i+1), g))
    Matrix grad;              ///< Up (normalized_delta) N(A(g))^T
    Vector bias_delta;        ///< A(u^(i), g) - A(u^(i+1), g)
};

struct DescentChain {
    double learning_rate = 0.0;  ///< 1 / |N(A(g))|^2
    Vector anchor;               ///< N(A(g)), the normalized empty-context attention
    std::vector<ChainState> states;  ///< length n + 1, states[0] = (Up, b)
    std::vector<ChainStep> steps;    ///< length n
};

/// Builds Up_i, b_i for every prefix of the chain together with the per-step
/// gradients. States satisfy Up_{i+1} = Up_i - h * grad_i and
/// b_{i+1} = b_i - bias_delta_i.
DescentChain implicit_descent_chain(const PrefixChain& chain, const DecoderLayerParams& params);

/// L_i(X) = tr(grad^T X); its gradient with respect to X is grad itself.
double trace_loss(const Matrix& grad, const Matrix& x);

}  // namespace genius::mot
