/// @file verify.hpp
/// @brief Seeded numerical verification suites for the context/parameter
/// equivalence and the prefix-wise implicit descent.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "genius/mot/implicit_update.hpp"

namespace genius::mot {

struct EquivalenceOptions {
    int trials = 200;
    Eigen::Index d_model = 16;
    Eigen::Index max_context_rows = 12;
    std::uint64_t seed = 20260101;
    std::vector<Activation> activations{Activation::Identity, Activation::Silu};
    double tolerance = 1e-9;
    /// Multiplies delta_up before the check; anything other than 1 is a negative control.
    double corrupt_scale = 1.0;
    /// Forces u' = u in every trial.
    bool identical_contexts = false;
};

struct EquivalenceTrial {
    int index = 0;
    std::uint64_t seed = 0;
    Eigen::Index d_model = 0;
    Eigen::Index full_rows = 0;
    Eigen::Index reduced_rows = 0;
    double max_error = 0.0;      ///< worst |L'(u') - L(u)|_inf over the activations
    int delta_up_rank = 0;       ///< numerical rank at 1e-10
    double singular_ratio = 0.0; ///< sigma_2 / sigma_1 of delta_up
    bool pass = false;
};

struct EquivalenceReport {
    EquivalenceOptions options;
    std::vector<EquivalenceTrial> trials;
    double seconds = 0.0;

    bool passed() const;
    double max_error() const;
    std::vector<std::uint64_t> failing_seeds() const;
};

/// Runs `options.trials` independent seeded trials of the rank-one equivalence.
EquivalenceReport verify_equivalence(const EquivalenceOptions& options);

struct DescentOptions {
    int chains = 50;
    int chain_length = 6;
    Eigen::Index d_model = 16;
    Eigen::Index max_segment_rows = 2;
    std::uint64_t seed = 20260202;
    std::vector<Activation> activations{Activation::Identity, Activation::Silu};
    double tolerance = 1e-9;
    double telescoping_tolerance = 1e-10;
    double fd_step = 1e-6;
    double fd_relative_tolerance = 1e-5;
};

struct DescentChainRecord {
    int index = 0;
    std::uint64_t seed = 0;
    Eigen::Index d_model = 0;
    int length = 0;
    double up_step_error = 0.0;      ///< max_i |Up_{i+1} - Up_i + h grad_i|_inf
    double b_step_error = 0.0;       ///< max_i |b_{i+1} - b_i + delta_i|_inf
    double telescoping_error = 0.0;  ///< |sum_i (b_{i+1} - b_i) - (A(u^(n)) - A(g))|_inf
    double equivalence_error = 0.0;  ///< max_i |L_{Up_i,b_i}(empty) - L_{Up,b}(u^(i))|_inf
    double gradient_error = 0.0;     ///< worst relative error of the finite-difference gradient
    double max_singular_ratio = 0.0; ///< worst sigma_2 / sigma_1 over the grads
    int max_rank = 0;
    bool pass = false;
};

struct DescentReport {
    DescentOptions options;
    std::vector<DescentChainRecord> chains;
    double seconds = 0.0;

    bool passed() const;
    std::vector<std::uint64_t> failing_seeds() const;
};

/// Builds seeded prefix chains and checks the descent identities, the
/// telescoping sum of bias shifts and the trace-gradient identity.
DescentReport verify_descent(const DescentOptions& options);

/// Entrywise relative error max |approx - exact| / max(|exact|, floor), where
/// floor = 1e-3 * max|exact| keeps entries that are zero up to rounding from
/// dominating.
double entrywise_relative_error(const Matrix& approx, const Matrix& exact);

/// Human-readable summaries, one line per trial plus a verdict line.
void write_text(std::ostream& out, const EquivalenceReport& report);
void write_text(std::ostream& out, const DescentReport& report);

/// One JSON object per line per trial/chain.
void write_records(std::ostream& out, const EquivalenceReport& report);
void write_records(std::ostream& out, const DescentReport& report);

}  // namespace genius::mot
