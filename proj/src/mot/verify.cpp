#include "genius/mot/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>

#include <nlohmann/json.hpp>

#include "genius/error.hpp"

namespace genius::mot {

namespace {

constexpr double kRankTolerance = 1e-10;

double elapsed_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

std::string activation_list(const std::vector<Activation>& acts) {
    std::string out;
    for (const auto a : acts) {
        if (!out.empty()) out += ",";
        out += to_string(a);
    }
    return out;
}

EquivalenceTrial run_equivalence_trial(const EquivalenceOptions& opt, int index) {
    EquivalenceTrial t;
    t.index = index;
    t.seed = numkit::mix_seed(opt.seed, static_cast<std::uint64_t>(index));
    t.d_model = opt.d_model;
    numkit::Rng rng(t.seed);

    const Eigen::Index half = std::max<Eigen::Index>(1, opt.max_context_rows / 2);
    Eigen::Index und_rows = rng.uniform_int(0, static_cast<int>(half));
    Eigen::Index gen_rows = rng.uniform_int(0, static_cast<int>(opt.max_context_rows - half));
    if (und_rows + gen_rows == 0) {
        gen_rows = 1;
    }
    DecoderLayerParams params = random_params(rng, opt.d_model);
    const Context full = random_context(rng, opt.d_model, und_rows, gen_rows);
    const Vector g = rng.normal_vector(opt.d_model);

    Context reduced = full;
    if (!opt.identical_contexts) {
        // Strictly smaller prefix of the full context.
        Eigen::Index keep_und = rng.uniform_int(0, static_cast<int>(und_rows));
        Eigen::Index keep_gen = rng.uniform_int(0, static_cast<int>(gen_rows));
        if (keep_und == und_rows && keep_gen == gen_rows) {
            if (keep_gen > 0) {
                --keep_gen;
            } else {
                --keep_und;
            }
        }
        reduced = full.prefix(keep_und, keep_gen);
    }
    t.full_rows = full.size();
    t.reduced_rows = reduced.size();

    const PerturbationPair pert = perturbation_for(full, reduced, g, params);
    t.delta_up_rank = numkit::numerical_rank(pert.delta_up, kRankTolerance);
    t.singular_ratio = numkit::second_singular_ratio(pert.delta_up);

    const Matrix up_shifted = params.up + opt.corrupt_scale * pert.delta_up;
    const Vector b_shifted = params.b + pert.delta_b;
    for (const auto act : opt.activations) {
        params.activation = act;
        const Vector lhs = layer_forward_with(reduced, g, params, up_shifted, b_shifted);
        const Vector rhs = layer_forward(full, g, params);
        t.max_error = std::max(t.max_error, numkit::max_abs(lhs - rhs));
    }
    t.pass = t.max_error <= opt.tolerance && t.delta_up_rank <= 1;
    return t;
}

DescentChainRecord run_descent_chain(const DescentOptions& opt, int index) {
    DescentChainRecord rec;
    rec.index = index;
    rec.seed = numkit::mix_seed(opt.seed, static_cast<std::uint64_t>(index));
    rec.d_model = opt.d_model;
    rec.length = opt.chain_length;
    numkit::Rng rng(rec.seed);

    DecoderLayerParams params = random_params(rng, opt.d_model);
    PrefixChain chain;
    for (int s = 0; s < opt.chain_length; ++s) {
        Eigen::Index und_rows = rng.uniform_int(0, static_cast<int>(opt.max_segment_rows));
        Eigen::Index gen_rows = rng.uniform_int(0, static_cast<int>(opt.max_segment_rows));
        if (und_rows + gen_rows == 0) {
            und_rows = 1;
        }
        chain.segments.push_back(random_context(rng, opt.d_model, und_rows, gen_rows));
    }
    chain.g = rng.normal_vector(opt.d_model);

    const DescentChain dc = implicit_descent_chain(chain, params);
    const double h = dc.learning_rate;
    Vector b_total = Vector::Zero(opt.d_model);
    for (std::size_t i = 0; i < dc.steps.size(); ++i) {
        const ChainStep& step = dc.steps[i];
        const ChainState& cur = dc.states[i];
        const ChainState& next = dc.states[i + 1];
        rec.up_step_error =
            std::max(rec.up_step_error, numkit::max_abs(next.up - cur.up + h * step.grad));
        rec.b_step_error =
            std::max(rec.b_step_error, numkit::max_abs(next.b - cur.b + step.bias_delta));
        b_total += next.b - cur.b;

        rec.max_rank = std::max(rec.max_rank, numkit::numerical_rank(step.grad, kRankTolerance));
        rec.max_singular_ratio =
            std::max(rec.max_singular_ratio, numkit::second_singular_ratio(step.grad));

        const Matrix& grad = step.grad;
        const Matrix fd = numkit::finite_diff_grad(
            [&grad](const Matrix& x) { return trace_loss(grad, x); }, cur.up, opt.fd_step);
        rec.gradient_error = std::max(rec.gradient_error, entrywise_relative_error(fd, grad));
    }
    rec.telescoping_error =
        numkit::max_abs(b_total - (dc.states.back().attn - dc.states.front().attn));

    const Context empty = Context::empty(opt.d_model);
    for (const auto act : opt.activations) {
        params.activation = act;
        for (std::size_t i = 0; i < dc.states.size(); ++i) {
            const Vector lhs = layer_forward_with(empty, chain.g, params, dc.states[i].up, dc.states[i].b);
            const Vector rhs = layer_forward(chain.prefix(i), chain.g, params);
            rec.equivalence_error = std::max(rec.equivalence_error, numkit::max_abs(lhs - rhs));
        }
    }

    rec.pass = rec.up_step_error <= opt.tolerance && rec.b_step_error <= opt.tolerance &&
               rec.telescoping_error <= opt.telescoping_tolerance &&
               rec.equivalence_error <= opt.tolerance &&
               rec.gradient_error <= opt.fd_relative_tolerance && rec.max_rank <= 1;
    return rec;
}

}  // namespace

bool EquivalenceReport::passed() const {
    return !trials.empty() &&
           std::all_of(trials.begin(), trials.end(), [](const auto& t) { return t.pass; });
}

double EquivalenceReport::max_error() const {
    double worst = 0.0;
    for (const auto& t : trials) worst = std::max(worst, t.max_error);
    return worst;
}

std::vector<std::uint64_t> EquivalenceReport::failing_seeds() const {
    std::vector<std::uint64_t> out;
    for (const auto& t : trials) {
        if (!t.pass) out.push_back(t.seed);
    }
    return out;
}

EquivalenceReport verify_equivalence(const EquivalenceOptions& options) {
    if (options.trials < 1) {
        throw ContractError("verify_equivalence: trials must be >= 1");
    }
    if (options.activations.empty()) {
        throw ContractError("verify_equivalence: at least one activation required");
    }
    const auto start = std::chrono::steady_clock::now();
    EquivalenceReport report;
    report.options = options;
    report.trials.reserve(static_cast<std::size_t>(options.trials));
    for (int i = 0; i < options.trials; ++i) {
        report.trials.push_back(run_equivalence_trial(options, i));
    }
    report.seconds = elapsed_since(start);
    return report;
}

bool DescentReport::passed() const {
    return !chains.empty() &&
           std::all_of(chains.begin(), chains.end(), [](const auto& c) { return c.pass; });
}

std::vector<std::uint64_t> DescentReport::failing_seeds() const {
    std::vector<std::uint64_t> out;
    for (const auto& c : chains) {
        if (!c.pass) out.push_back(c.seed);
    }
    return out;
}

DescentReport verify_descent(const DescentOptions& options) {
    if (options.chains < 1 || options.chain_length < 1) {
        throw ContractError("verify_descent: chains and chain_length must be >= 1");
    }
    const auto start = std::chrono::steady_clock::now();
    DescentReport report;
    report.options = options;
    for (int i = 0; i < options.chains; ++i) {
        report.chains.push_back(run_descent_chain(options, i));
    }
    report.seconds = elapsed_since(start);
    return report;
}

double entrywise_relative_error(const Matrix& approx, const Matrix& exact) {
    if (approx.rows() != exact.rows() || approx.cols() != exact.cols()) {
        throw ContractError("entrywise_relative_error: shape mismatch");
    }
    const double scale = numkit::max_abs(exact);
    if (scale == 0.0) {
        return numkit::max_abs(approx);
    }
    const double floor = 1e-3 * scale;
    double worst = 0.0;
    for (Eigen::Index c = 0; c < exact.cols(); ++c) {
        for (Eigen::Index r = 0; r < exact.rows(); ++r) {
            const double denom = std::max(std::abs(exact(r, c)), floor);
            worst = std::max(worst, std::abs(approx(r, c) - exact(r, c)) / denom);
        }
    }
    return worst;
}

void write_text(std::ostream& out, const EquivalenceReport& report) {
    const auto& o = report.options;
    out << "rank-one equivalence: trials=" << o.trials << " d_model=" << o.d_model
        << " max_context_rows=" << o.max_context_rows << " seed=" << o.seed
        << " activations=" << activation_list(o.activations) << " tolerance=" << sci(o.tolerance);
    if (o.corrupt_scale != 1.0) {
        out << " corrupt_scale=" << o.corrupt_scale;
    }
    out << "\n";
    for (const auto& t : report.trials) {
        out << "trial " << t.index << " seed=" << t.seed << " rows=" << t.full_rows << "->"
            << t.reduced_rows << " max_err=" << sci(t.max_error) << " rank=" << t.delta_up_rank
            << " sv_ratio=" << sci(t.singular_ratio) << (t.pass ? " PASS" : " FAIL") << "\n";
    }
    out << "result: " << (report.passed() ? "PASS" : "FAIL") << " max_err=" << sci(report.max_error());
    const auto failing = report.failing_seeds();
    if (!failing.empty()) {
        out << " failing_seeds=";
        for (std::size_t i = 0; i < failing.size(); ++i) {
            out << (i ? "," : "") << failing[i];
        }
    }
    out << "\n";
}

void write_text(std::ostream& out, const DescentReport& report) {
    const auto& o = report.options;
    out << "implicit descent: chains=" << o.chains << " length=" << o.chain_length
        << " d_model=" << o.d_model << " seed=" << o.seed
        << " activations=" << activation_list(o.activations) << " tolerance=" << sci(o.tolerance)
        << " fd_step=" << sci(o.fd_step) << "\n";
    for (const auto& c : report.chains) {
        out << "chain " << c.index << " seed=" << c.seed << " up_step=" << sci(c.up_step_error)
            << " b_step=" << sci(c.b_step_error) << " telescoping=" << sci(c.telescoping_error)
            << " equivalence=" << sci(c.equivalence_error) << " grad_rel=" << sci(c.gradient_error)
            << " rank=" << c.max_rank << " sv_ratio=" << sci(c.max_singular_ratio)
            << (c.pass ? " PASS" : " FAIL") << "\n";
    }
    out << "result: " << (report.passed() ? "PASS" : "FAIL");
    const auto failing = report.failing_seeds();
    if (!failing.empty()) {
        out << " failing_seeds=";
        for (std::size_t i = 0; i < failing.size(); ++i) {
            out << (i ? "," : "") << failing[i];
        }
    }
    out << "\n";
}

void write_records(std::ostream& out, const EquivalenceReport& report) {
    for (const auto& t : report.trials) {
        nlohmann::ordered_json j;
        j["suite"] = "equivalence";
        j["trial"] = t.index;
        j["seed"] = t.seed;
        j["d_model"] = t.d_model;
        j["full_rows"] = t.full_rows;
        j["reduced_rows"] = t.reduced_rows;
        j["max_error"] = t.max_error;
        j["rank"] = t.delta_up_rank;
        j["sv_ratio"] = t.singular_ratio;
        j["pass"] = t.pass;
        out << j.dump() << "\n";
    }
}

void write_records(std::ostream& out, const DescentReport& report) {
    for (const auto& c : report.chains) {
        nlohmann::ordered_json j;
        j["suite"] = "descent";
        j["chain"] = c.index;
        j["seed"] = c.seed;
        j["d_model"] = c.d_model;
        j["length"] = c.length;
        j["up_step_error"] = c.up_step_error;
        j["b_step_error"] = c.b_step_error;
        j["telescoping_error"] = c.telescoping_error;
        j["equivalence_error"] = c.equivalence_error;
        j["gradient_error"] = c.gradient_error;
        j["rank"] = c.max_rank;
        j["sv_ratio"] = c.max_singular_ratio;
        j["pass"] = c.pass;
        out << j.dump() << "\n";
    }
}

}  // namespace genius::mot
