#include "genius/mot/implicit_update.hpp"

#include "genius/error.hpp"

namespace genius::mot {

PerturbationPair perturbation_for(const Context& full, const Context& reduced, const Vector& g,
                                  const DecoderLayerParams& params) {
    const Vector a_full = attn_fn(full, g, params);
    const Vector a_reduced = attn_fn(reduced, g, params);
    const Vector n_full = numkit::rms_normalize(a_full);
    const Vector n_reduced = numkit::rms_normalize(a_reduced);

    PerturbationPair p;
    p.delta_b = a_full - a_reduced;
    const Vector up_delta = params.up * (n_full - n_reduced);
    p.delta_up = up_delta * n_reduced.transpose() / n_reduced.squaredNorm();
    return p;
}

Context PrefixChain::prefix(std::size_t i) const {
    if (i > segments.size()) {
        throw ContractError("prefix index beyond chain length");
    }
    Context out = Context::empty(g.size());
    for (std::size_t k = 0; k < i; ++k) {
        out = out.concat(segments[k]);
    }
    return out;
}

DescentChain implicit_descent_chain(const PrefixChain& chain, const DecoderLayerParams& params) {
    const std::size_t n = chain.length();
    std::vector<Vector> attn(n + 1);
    std::vector<Vector> normed(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        attn[i] = attn_fn(chain.prefix(i), chain.g, params);
        normed[i] = numkit::rms_normalize(attn[i]);
    }

    DescentChain out;
    out.anchor = normed[0];
    out.learning_rate = 1.0 / out.anchor.squaredNorm();

    out.states.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        ChainState s;
        const Vector up_shift = params.up * (normed[i] - normed[0]);
        s.up = params.up + out.learning_rate * up_shift * out.anchor.transpose();
        s.b = params.b + attn[i] - attn[0];
        s.attn = attn[i];
        out.states.push_back(std::move(s));
    }

    out.steps.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ChainStep step;
        step.normalized_delta = normed[i] - normed[i + 1];
        step.grad = (params.up * step.normalized_delta) * out.anchor.transpose();
        step.bias_delta = attn[i] - attn[i + 1];
        out.steps.push_back(std::move(step));
    }
    return out;
}

double trace_loss(const Matrix& grad, const Matrix& x) {
    if (grad.rows() != x.rows() || grad.cols() != x.cols()) {
        throw ContractError("trace_loss: shape mismatch");
    }
    return (grad.transpose() * x).trace();
}

}  // namespace genius::mot
