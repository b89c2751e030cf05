#include "genius/mot/decoder.hpp"

#include <cmath>
#include <string>

#include "genius/error.hpp"

namespace genius::mot {

namespace {

void require_dims(const Context& ctx, const Vector& g, const DecoderLayerParams& params) {
    params.validate();
    const Eigen::Index d = params.d_model();
    if (g.size() != d) {
        throw ContractError("query encoding has dimension " + std::to_string(g.size()) +
                            ", expected " + std::to_string(d));
    }
    if ((ctx.und.rows() > 0 && ctx.und.cols() != d) || (ctx.gen.rows() > 0 && ctx.gen.cols() != d)) {
        throw ContractError("context encodings must have d_model columns");
    }
}

// Projects rows of `tokens` (already RMS normalized) into keys/values and
// writes them into rows [offset, offset + tokens.rows()).
void project_into(const TokenMatrix& normed, const ExpertProjections& expert, Matrix& keys,
                  Matrix& values, Eigen::Index offset) {
    if (normed.rows() == 0) {
        return;
    }
    keys.middleRows(offset, normed.rows()) = normed * expert.wk;
    values.middleRows(offset, normed.rows()) = normed * expert.wv;
}

}  // namespace

void ExpertProjections::validate() const {
    if (wq.cols() <= 0 || wq.rows() <= 0) {
        throw ContractError("expert projections must be non-empty");
    }
    if (wk.rows() != wq.rows() || wv.rows() != wq.rows() || wk.cols() != wq.cols() ||
        wv.cols() != wq.cols()) {
        throw ContractError("expert q/k/v projections must share shape d_model x d_attn");
    }
}

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Silu: return "silu";
        case Activation::Tanh: return "tanh";
        case Activation::Gelu: return "gelu";
    }
    return "identity";
}

Activation parse_activation(std::string_view name) {
    if (name == "identity") return Activation::Identity;
    if (name == "silu") return Activation::Silu;
    if (name == "tanh") return Activation::Tanh;
    if (name == "gelu") return Activation::Gelu;
    throw ContractError("unknown activation: " + std::string(name));
}

double apply(Activation a, double x) {
    switch (a) {
        case Activation::Identity: return x;
        case Activation::Silu: return x / (1.0 + std::exp(-x));
        case Activation::Tanh: return std::tanh(x);
        case Activation::Gelu: {
            constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
            return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
        }
    }
    return x;
}

Vector apply(Activation a, const Vector& v) {
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out(i) = apply(a, v(i));
    }
    return out;
}

void DecoderLayerParams::validate() const {
    und.validate();
    gen.validate();
    const Eigen::Index d = up.rows();
    if (up.cols() != d || d == 0) {
        throw ContractError("Up must be a non-empty square d_model x d_model matrix");
    }
    if (b.size() != d) {
        throw ContractError("bias b must have dimension d_model");
    }
    if (und.d_model() != d || gen.d_model() != d) {
        throw ContractError("expert projections must take d_model inputs");
    }
    if (und.d_attn() != d || gen.d_attn() != d) {
        throw ContractError("single-head block requires d_attn == d_model");
    }
    if (down && (down->rows() != d || down->cols() != d)) {
        throw ContractError("Down must be d_model x d_model");
    }
}

Context Context::empty(Eigen::Index d_model) {
    return Context{TokenMatrix(0, d_model), TokenMatrix(0, d_model)};
}

Context Context::prefix(Eigen::Index und_rows, Eigen::Index gen_rows) const {
    if (und_rows < 0 || gen_rows < 0 || und_rows > und.rows() || gen_rows > gen.rows()) {
        throw ContractError("context prefix out of range");
    }
    const Eigen::Index d = d_model();
    Context out{TokenMatrix(und_rows, d), TokenMatrix(gen_rows, d)};
    if (und_rows > 0) out.und = und.topRows(und_rows);
    if (gen_rows > 0) out.gen = gen.topRows(gen_rows);
    return out;
}

Context Context::concat(const Context& other) const {
    const Eigen::Index d = std::max(d_model(), other.d_model());
    auto stack = [d](const TokenMatrix& a, const TokenMatrix& b) {
        if ((a.rows() > 0 && a.cols() != d) || (b.rows() > 0 && b.cols() != d)) {
            throw ContractError("cannot concatenate contexts of different widths");
        }
        TokenMatrix out(a.rows() + b.rows(), d);
        if (a.rows() > 0) out.topRows(a.rows()) = a;
        if (b.rows() > 0) out.bottomRows(b.rows()) = b;
        return out;
    };
    return Context{stack(und, other.und), stack(gen, other.gen)};
}

AttentionResult moe_attention(const Context& ctx, const Vector& g, const DecoderLayerParams& params,
                              const Vector* context_bias) {
    require_dims(ctx, g, params);
    const Eigen::Index n_ctx = ctx.size();
    if (context_bias != nullptr && context_bias->size() != n_ctx) {
        throw ContractError("context bias length must equal the number of context keys");
    }
    const Eigen::Index d_attn = params.gen.d_attn();

    const Vector g_norm = numkit::rms_normalize(g);
    const Vector query = params.gen.wq.transpose() * g_norm;

    Matrix keys(n_ctx + 1, d_attn);
    Matrix values(n_ctx + 1, d_attn);
    project_into(numkit::rms_normalize_rows(ctx.und), params.und, keys, values, 0);
    project_into(numkit::rms_normalize_rows(ctx.gen), params.gen, keys, values, ctx.und.rows());
    keys.row(n_ctx) = (params.gen.wk.transpose() * g_norm).transpose();
    values.row(n_ctx) = (params.gen.wv.transpose() * g_norm).transpose();

    AttentionResult res;
    res.logits = keys * query;
    Vector scaled = res.logits;
    if (context_bias != nullptr && n_ctx > 0) {
        scaled.head(n_ctx) += *context_bias;
    }
    scaled /= std::sqrt(static_cast<double>(d_attn));
    res.weights = numkit::softmax(scaled);
    res.output = values.transpose() * res.weights;
    return res;
}

Vector moe_attn(const Context& ctx, const Vector& g, const DecoderLayerParams& params) {
    return moe_attention(ctx, g, params).output;
}

Vector attn_fn(const Context& ctx, const Vector& g, const DecoderLayerParams& params) {
    return moe_attn(ctx, g, params) + g;
}

Vector layer_map(const Vector& attn_out, const Matrix& up, const Vector& b, Activation activation,
                 const std::optional<Matrix>& down) {
    Vector mlp = apply(activation, Vector(up * numkit::rms_normalize(attn_out)));
    if (down) {
        mlp = *down * mlp;
    }
    return attn_out + mlp + b;
}

Vector layer_forward(const Context& ctx, const Vector& g, const DecoderLayerParams& params) {
    return layer_map(attn_fn(ctx, g, params), params.up, params.b, params.activation, params.down);
}

Vector layer_forward_with(const Context& ctx, const Vector& g, const DecoderLayerParams& params,
                          const Matrix& up, const Vector& b) {
    if (up.rows() != params.up.rows() || up.cols() != params.up.cols() || b.size() != params.b.size()) {
        throw ContractError("replacement Up/b shapes do not match the block");
    }
    return layer_map(attn_fn(ctx, g, params), up, b, params.activation, params.down);
}

DecoderLayerParams random_params(numkit::Rng& rng, Eigen::Index d_model, Activation activation) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_model));
    auto expert = [&] {
        ExpertProjections e;
        e.wq = rng.normal_matrix(d_model, d_model, scale);
        e.wk = rng.normal_matrix(d_model, d_model, scale);
        e.wv = rng.normal_matrix(d_model, d_model, scale);
        return e;
    };
    DecoderLayerParams p;
    p.und = expert();
    p.gen = expert();
    p.up = rng.normal_matrix(d_model, d_model, scale);
    p.b = Vector::Zero(d_model);
    p.activation = activation;
    return p;
}

Context random_context(numkit::Rng& rng, Eigen::Index d_model, Eigen::Index und_rows,
                       Eigen::Index gen_rows) {
    Context ctx{rng.normal_tokens(und_rows, d_model), rng.normal_tokens(gen_rows, d_model)};
    return ctx;
}

}  // namespace genius::mot
