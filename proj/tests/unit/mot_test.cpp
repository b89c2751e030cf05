#include <gtest/gtest.h>

#include "genius/error.hpp"
#include "genius/mot/decoder.hpp"
#include "genius/mot/implicit_update.hpp"
#include "genius/mot/verify.hpp"
#include "naive_decoder.hpp"

namespace genius::mot {
namespace {

using testing::max_abs_diff;
using testing::to_row;

TEST(MoeAttn, EmptyContextReturnsOwnValue) {
    numkit::Rng rng(1);
    const auto params = random_params(rng, 8);
    const Vector g = rng.normal_vector(8);
    const Vector out = moe_attn(Context::empty(8), g, params);
    const Vector own_value = params.gen.wv.transpose() * numkit::rms_normalize(g);
    EXPECT_LE(numkit::max_abs(out - own_value), 1e-14);
}

TEST(MoeAttn, EqualLogitsAverageValues) {
    numkit::Rng rng(2);
    auto params = random_params(rng, 6);
    params.gen.wq.setZero();  // every logit becomes 0
    const Context ctx = random_context(rng, 6, 2, 1);
    const Vector g = rng.normal_vector(6);

    Vector mean = Vector::Zero(6);
    for (Eigen::Index r = 0; r < 2; ++r) {
        mean += params.und.wv.transpose() * numkit::rms_normalize(ctx.und.row(r).transpose());
    }
    mean += params.gen.wv.transpose() * numkit::rms_normalize(ctx.gen.row(0).transpose());
    mean += params.gen.wv.transpose() * numkit::rms_normalize(g);
    mean /= 4.0;
    EXPECT_LE(numkit::max_abs(moe_attn(ctx, g, params) - mean), 1e-14);
}

TEST(MoeAttn, MatchesNaiveOracleSeed7) {
    numkit::Rng rng(7);
    const auto params = random_params(rng, 8);
    const Context ctx = random_context(rng, 8, 2, 2);
    const Vector g = rng.normal_vector(8);
    EXPECT_LE(max_abs_diff(moe_attn(ctx, g, params), testing::naive_moe_attn(ctx, to_row(g), params)),
              1e-13);
}

TEST(MoeAttn, WeightsAreRowStochastic) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        numkit::Rng rng(seed);
        const auto params = random_params(rng, 8);
        const Context ctx = random_context(rng, 8, rng.uniform_int(0, 5), rng.uniform_int(0, 5));
        const auto res = moe_attention(ctx, rng.normal_vector(8), params);
        ASSERT_EQ(res.weights.size(), ctx.size() + 1);
        ASSERT_NEAR(res.weights.sum(), 1.0, 1e-12);
        ASSERT_GE(res.weights.minCoeff(), 0.0);
    }
}

TEST(MoeAttn, DimensionMismatchIsContractError) {
    numkit::Rng rng(3);
    const auto params = random_params(rng, 8);
    EXPECT_THROW(moe_attn(Context::empty(8), rng.normal_vector(7), params), ContractError);
    const Context bad = random_context(rng, 5, 1, 0);
    EXPECT_THROW(moe_attn(bad, rng.normal_vector(8), params), ContractError);
}

TEST(AttnFn, ResidualOnlyWhenGenValueIsZero) {
    numkit::Rng rng(4);
    auto params = random_params(rng, 8);
    params.gen.wv.setZero();
    const Vector g = rng.normal_vector(8);
    EXPECT_EQ(attn_fn(Context::empty(8), g, params), g);
}

TEST(AttnFn, DeterministicAndMatchesOracle) {
    numkit::Rng rng(5);
    const auto params = random_params(rng, 8);
    const Context ctx = random_context(rng, 8, 3, 1);
    const Vector g = rng.normal_vector(8);
    EXPECT_EQ(attn_fn(ctx, g, params), attn_fn(ctx, g, params));
    EXPECT_LE(max_abs_diff(attn_fn(ctx, g, params), testing::naive_attn_fn(ctx, to_row(g), params)),
              1e-13);
}

TEST(LayerForward, VanishingMlpReturnsAttention) {
    numkit::Rng rng(6);
    auto params = random_params(rng, 8);
    params.up.setZero();
    const Context ctx = random_context(rng, 8, 2, 2);
    const Vector g = rng.normal_vector(8);
    EXPECT_EQ(layer_forward(ctx, g, params), attn_fn(ctx, g, params));
}

TEST(LayerForward, BiasShiftShiftsOutput) {
    numkit::Rng rng(8);
    auto params = random_params(rng, 8, Activation::Silu);
    const Context ctx = random_context(rng, 8, 2, 2);
    const Vector g = rng.normal_vector(8);
    const Vector base = layer_forward(ctx, g, params);
    const Vector c = rng.normal_vector(8);
    params.b += c;
    EXPECT_LE(numkit::max_abs(layer_forward(ctx, g, params) - (base + c)), 1e-14);
}

TEST(LayerForward, MatchesNaiveOracleForEveryActivation) {
    for (const auto act : {Activation::Identity, Activation::Silu, Activation::Tanh, Activation::Gelu}) {
        numkit::Rng rng(9);
        auto params = random_params(rng, 8, act);
        params.b = rng.normal_vector(8);
        const Context ctx = random_context(rng, 8, 3, 2);
        const Vector g = rng.normal_vector(8);
        EXPECT_LE(max_abs_diff(layer_forward(ctx, g, params), testing::naive_layer(ctx, to_row(g), params)),
                  1e-12)
            << to_string(act);
    }
}

TEST(LayerForward, ZeroAttentionIsDomainError) {
    numkit::Rng rng(10);
    auto params = random_params(rng, 4);
    params.gen.wv.setZero();
    EXPECT_THROW(layer_forward(Context::empty(4), Vector::Zero(4), params), DomainError);
}

TEST(Activation, RoundTripsNames) {
    for (const auto act : {Activation::Identity, Activation::Silu, Activation::Tanh, Activation::Gelu}) {
        EXPECT_EQ(parse_activation(to_string(act)), act);
    }
    EXPECT_THROW(parse_activation("relu6"), ContractError);
}

TEST(PerturbationFor, IdenticalContextsGiveZero) {
    numkit::Rng rng(11);
    const auto params = random_params(rng, 8);
    const Context ctx = random_context(rng, 8, 3, 2);
    const auto p = perturbation_for(ctx, ctx, rng.normal_vector(8), params);
    EXPECT_EQ(numkit::max_abs(p.delta_up), 0.0);
    EXPECT_EQ(numkit::max_abs(p.delta_b), 0.0);
}

TEST(PerturbationFor, Seed11ReproducesFullContext) {
    numkit::Rng rng(11);
    const auto params = random_params(rng, 16);
    const Context full = random_context(rng, 16, 3, 3);
    const Context reduced = full.prefix(2, 1);
    ASSERT_EQ(full.size(), 6);
    ASSERT_EQ(reduced.size(), 3);
    const Vector g = rng.normal_vector(16);
    const auto p = perturbation_for(full, reduced, g, params);
    EXPECT_LE(numkit::numerical_rank(p.delta_up, 1e-10), 1);

    const Vector lhs = layer_forward_with(reduced, g, params, params.up + p.delta_up, params.b + p.delta_b);
    const Vector rhs = layer_forward(full, g, params);
    EXPECT_LE(numkit::max_abs(lhs - rhs), 1e-9);
    // Same check against the loop-based oracle on the right-hand side.
    EXPECT_LE(max_abs_diff(lhs, testing::naive_layer(full, to_row(g), params)), 1e-9);
}

TEST(PerturbationFor, HoldsForEveryActivationAndDownProjection) {
    for (const auto act : {Activation::Identity, Activation::Silu, Activation::Tanh, Activation::Gelu}) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            numkit::Rng rng(seed);
            auto params = random_params(rng, 12, act);
            params.b = rng.normal_vector(12);
            if (seed % 2 == 1) {
                params.down = rng.normal_matrix(12, 12, 0.3);
            }
            const Context full = random_context(rng, 12, 4, 3);
            const Context reduced = full.prefix(1, 2);
            const Vector g = rng.normal_vector(12);
            const auto p = perturbation_for(full, reduced, g, params);
            const Vector lhs =
                layer_forward_with(reduced, g, params, params.up + p.delta_up, params.b + p.delta_b);
            ASSERT_LE(numkit::max_abs(lhs - layer_forward(full, g, params)), 1e-9)
                << to_string(act) << " seed " << seed;
            ASSERT_LE(numkit::numerical_rank(p.delta_up, 1e-10), 1);
        }
    }
}

TEST(VerifyEquivalence, IdenticalContextsHaveZeroError) {
    EquivalenceOptions opt;
    opt.trials = 1;
    opt.identical_contexts = true;
    const auto report = verify_equivalence(opt);
    ASSERT_EQ(report.trials.size(), 1u);
    EXPECT_EQ(report.trials[0].max_error, 0.0);
    EXPECT_TRUE(report.passed());
}

TEST(VerifyEquivalence, TwoHundredIdentityTrialsPass) {
    EquivalenceOptions opt;
    opt.activations = {Activation::Identity};
    const auto report = verify_equivalence(opt);
    EXPECT_EQ(report.trials.size(), 200u);
    EXPECT_TRUE(report.passed()) << report.max_error();
    for (const auto& t : report.trials) {
        EXPECT_LE(t.full_rows, 12);
        EXPECT_LT(t.reduced_rows, t.full_rows);
    }
}

TEST(VerifyEquivalence, CorruptedPerturbationFails) {
    EquivalenceOptions opt;
    opt.trials = 20;
    opt.corrupt_scale = 1.01;
    const auto report = verify_equivalence(opt);
    EXPECT_FALSE(report.passed());
    EXPECT_FALSE(report.failing_seeds().empty());
}

TEST(VerifyEquivalence, RejectsZeroTrials) {
    EquivalenceOptions opt;
    opt.trials = 0;
    EXPECT_THROW(verify_equivalence(opt), ContractError);
}

PrefixChain random_chain(numkit::Rng& rng, Eigen::Index d, int n) {
    PrefixChain chain;
    for (int i = 0; i < n; ++i) {
        chain.segments.push_back(random_context(rng, d, rng.uniform_int(0, 2), rng.uniform_int(1, 2)));
    }
    chain.g = rng.normal_vector(d);
    return chain;
}

TEST(ImplicitDescent, StationaryChainFreezesParameters) {
    numkit::Rng rng(12);
    const auto params = random_params(rng, 8);
    PrefixChain chain;
    chain.g = rng.normal_vector(8);
    // Generation-expert copies of g carry g's own key and value, so every
    // prefix attends to identical keys and produces the same output.
    for (int i = 0; i < 5; ++i) {
        chain.segments.push_back(Context{TokenMatrix(0, 8), TokenMatrix(chain.g.transpose())});
    }
    const auto dc = implicit_descent_chain(chain, params);
    for (const auto& step : dc.steps) {
        EXPECT_LE(numkit::max_abs(step.grad), 1e-13);
        EXPECT_LE(numkit::max_abs(step.bias_delta), 1e-13);
    }
    for (const auto& state : dc.states) {
        EXPECT_LE(numkit::max_abs(state.up - params.up), 1e-13);
        EXPECT_LE(numkit::max_abs(state.b - params.b), 1e-13);
    }
}

TEST(ImplicitDescent, StepsAreGradientDescentOnTraceLoss) {
    numkit::Rng rng(13);
    const auto params = random_params(rng, 16);
    const PrefixChain chain = random_chain(rng, 16, 6);
    const auto dc = implicit_descent_chain(chain, params);
    ASSERT_EQ(dc.states.size(), 7u);
    ASSERT_EQ(dc.steps.size(), 6u);
    const double h = dc.learning_rate;
    EXPECT_NEAR(h, 1.0 / numkit::rms_normalize(attn_fn(Context::empty(16), chain.g, params)).squaredNorm(),
                1e-15);
    for (std::size_t i = 0; i < 6; ++i) {
        const auto& step = dc.steps[i];
        EXPECT_LE(numkit::max_abs(dc.states[i + 1].up - dc.states[i].up + h * step.grad), 1e-9);
        EXPECT_LE(numkit::max_abs(dc.states[i + 1].b - dc.states[i].b + step.bias_delta), 1e-9);
        EXPECT_LE(numkit::numerical_rank(step.grad, 1e-10), 1);

        const Matrix fd = numkit::finite_diff_grad(
            [&](const Matrix& x) { return trace_loss(step.grad, x); }, dc.states[i].up, 1e-6);
        EXPECT_LE(entrywise_relative_error(fd, step.grad), 1e-5);
    }
}

TEST(ImplicitDescent, BiasShiftsTelescope) {
    numkit::Rng rng(14);
    const auto params = random_params(rng, 16);
    const PrefixChain chain = random_chain(rng, 16, 6);
    const auto dc = implicit_descent_chain(chain, params);
    Vector total = Vector::Zero(16);
    for (const auto& step : dc.steps) total -= step.bias_delta;
    const Vector expected = attn_fn(chain.prefix(6), chain.g, params) - attn_fn(Context::empty(16), chain.g, params);
    EXPECT_LE(numkit::max_abs(total - expected), 1e-10);
}

TEST(ImplicitDescent, EveryStateReproducesItsPrefixFromEmptyContext) {
    numkit::Rng rng(15);
    auto params = random_params(rng, 16, Activation::Tanh);
    const PrefixChain chain = random_chain(rng, 16, 6);
    const auto dc = implicit_descent_chain(chain, params);
    for (std::size_t i = 0; i < dc.states.size(); ++i) {
        const Vector lhs =
            layer_forward_with(Context::empty(16), chain.g, params, dc.states[i].up, dc.states[i].b);
        EXPECT_LE(numkit::max_abs(lhs - layer_forward(chain.prefix(i), chain.g, params)), 1e-9);
    }
}

TEST(VerifyDescent, FiftyChainsPass) {
    const auto report = verify_descent(DescentOptions{});
    EXPECT_EQ(report.chains.size(), 50u);
    EXPECT_TRUE(report.passed());
    double worst_grad = 0.0;
    for (const auto& c : report.chains) worst_grad = std::max(worst_grad, c.gradient_error);
    EXPECT_LE(worst_grad, 1e-5);
}

TEST(EntrywiseRelativeError, UsesFloorForTinyEntries) {
    Matrix exact(1, 2);
    exact << 1.0, 0.0;
    Matrix approx(1, 2);
    approx << 1.0, 1e-9;
    EXPECT_NEAR(entrywise_relative_error(approx, exact), 1e-6, 1e-18);
}

}  // namespace
}  // namespace genius::mot
