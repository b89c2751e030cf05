#include "genius/app/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>

#include "genius/data/sample.hpp"
#include "genius/error.hpp"
#include "genius/judge/backend.hpp"
#include "genius/judge/judge.hpp"
#include "genius/mot/verify.hpp"
#include "genius/scoring/agreement.hpp"
#include "genius/scoring/scoring.hpp"
#include "genius/steer/demo.hpp"

namespace genius::app {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

/// Bad option value detected after parsing; maps to kExitUsage.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <class F>
auto as_usage(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const genius::Error& e) {
        throw UsageError(e.what());
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) throw UsageError(what);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot write " + p.string());
    return f;
}

template <class Fn>
void write_to(const fs::path& p, Fn&& fn) {
    auto f = open_out(p);
    fn(f);
    if (!f) throw IoError("write failed: " + p.string());
}

void make_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

ordered_json opt_number(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

// ---------------------------------------------------------------- scoring policy

struct PolicyArgs {
    std::string weights = "6,3.5,0.5";
    std::string missing_vc = "renormalize";
    std::string overall = "sample";
    std::string group = "task";
};

scoring::WeightVector parse_weights(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        const double x = std::strtod(item.c_str(), &end);
        require(!item.empty() && end != nullptr && *end == '\0', "--weights: \"" + item + "\" is not a number");
        v.push_back(x);
    }
    require(v.size() == 3, "--weights expects three comma-separated values RC,VC,AQ");
    scoring::WeightVector w{v[0], v[1], v[2]};
    as_usage([&] { w.validate(); return 0; });
    return w;
}

std::pair<scoring::ScoringPolicy, scoring::GroupKey> make_policy(const PolicyArgs& a) {
    scoring::ScoringPolicy p(parse_weights(a.weights));
    p.missing_vc = as_usage([&] { return scoring::parse_missing_vc(a.missing_vc); });
    p.overall = as_usage([&] { return scoring::parse_overall_mode(a.overall); });
    return {p, as_usage([&] { return scoring::parse_group_key(a.group); })};
}

void add_policy_options(CLI::App* sub, PolicyArgs& a) {
    sub->add_option("--group", a.group, "Report grouping: task, dimension or model");
    sub->add_option("--weights", a.weights, "Overall weights RC,VC,AQ");
    sub->add_option("--missing-vc", a.missing_vc, "Samples without VC: renormalize or zero");
    sub->add_option("--overall", a.overall, "Overall pooling: sample or task-mean");
}

ordered_json policy_json(const scoring::ScoringPolicy& p, scoring::GroupKey key) {
    return {{"group", scoring::to_string(key)},
            {"weights", {p.weights.rc, p.weights.vc, p.weights.aq}},
            {"missing_vc", scoring::to_string(p.missing_vc)},
            {"overall", scoring::to_string(p.overall)}};
}

ordered_json row_json(const scoring::GroupRow& r) {
    return {{"key", r.key},           {"samples", r.samples},   {"rc_pct", r.rc_pct},
            {"vc_pct", opt_number(r.vc_pct)}, {"aq_pct", r.aq_pct}, {"overall", r.overall}};
}

/// report.txt/.csv and leaderboard.txt/.csv; returns the aggregate.
scoring::Aggregate write_reports(const std::vector<judge::SampleVerdict>& verdicts, const scoring::ScoringPolicy& p,
                                 scoring::GroupKey key, const fs::path& dir, ordered_json& summary) {
    const auto agg = scoring::aggregate_by(verdicts, key, p);
    const auto board = scoring::leaderboard(verdicts, p);
    write_to(dir / "report.txt", [&](std::ostream& o) { scoring::write_aggregate_text(o, agg); });
    write_to(dir / "report.csv", [&](std::ostream& o) { scoring::write_aggregate_csv(o, agg); });
    write_to(dir / "leaderboard.txt", [&](std::ostream& o) { scoring::write_leaderboard_text(o, board); });
    write_to(dir / "leaderboard.csv", [&](std::ostream& o) { scoring::write_leaderboard_csv(o, board); });
    ordered_json rows = ordered_json::array();
    for (const auto& r : agg.rows) rows.push_back(row_json(r));
    summary["rows"] = rows;
    summary["total"] = row_json(agg.total);
    return agg;
}

// ---------------------------------------------------------------- verify-theorems

struct VerifyArgs {
    int trials = 200;
    int chains = 50;
    int chain_length = 6;
    int d_model = 16;
    int max_rows = 12;
    std::string seed;  // empty: suite defaults
    bool corrupt = false;
    double corrupt_scale = 1.01;
    int workers = 2;
    std::string out = "runs/verify";
};

ordered_json seeds_json(const std::vector<std::uint64_t>& s) { return ordered_json(s); }

int cmd_verify(const VerifyArgs& a, ordered_json& summary, std::ostream& out, std::ostream& err) {
    require(a.trials > 0 && a.chains > 0 && a.chain_length > 0, "--trials, --chains and --chain-length must be positive");
    require(a.d_model > 0 && a.max_rows > 0, "--d-model and --max-rows must be positive");
    require(std::isfinite(a.corrupt_scale) && a.corrupt_scale > 0.0, "--corrupt-scale must be positive");
    require(a.workers > 0, "--workers must be positive");

    mot::EquivalenceOptions eo;
    mot::DescentOptions dopt;
    eo.trials = a.trials;
    eo.d_model = a.d_model;
    eo.max_context_rows = a.max_rows;
    dopt.chains = a.chains;
    dopt.chain_length = a.chain_length;
    dopt.d_model = a.d_model;
    if (!a.seed.empty()) {
        char* end = nullptr;
        const unsigned long long s = std::strtoull(a.seed.c_str(), &end, 10);
        require(*end == '\0' && a.seed[0] != '-', "--seed must be a non-negative integer");
        eo.seed = s;
        dopt.seed = s + 1;
    }
    if (a.corrupt) eo.corrupt_scale = a.corrupt_scale;
    const fs::path dir(a.out);
    make_dir(dir);

    mot::EquivalenceReport r1;
    mot::DescentReport r2;
    if (a.workers > 1) {
        auto fut = std::async(std::launch::async, [&] { return mot::verify_descent(dopt); });
        r1 = mot::verify_equivalence(eo);
        r2 = fut.get();
    } else {
        r1 = mot::verify_equivalence(eo);
        r2 = mot::verify_descent(dopt);
    }

    write_to(dir / "equivalence.txt", [&](std::ostream& o) { mot::write_text(o, r1); });
    write_to(dir / "equivalence.jsonl", [&](std::ostream& o) { mot::write_records(o, r1); });
    write_to(dir / "descent.txt", [&](std::ostream& o) { mot::write_text(o, r2); });
    write_to(dir / "descent.jsonl", [&](std::ostream& o) { mot::write_records(o, r2); });

    double ratio1 = 0.0;
    for (const auto& t : r1.trials) ratio1 = std::max(ratio1, t.singular_ratio);
    double up = 0.0, b = 0.0, tele = 0.0, eq = 0.0, grad = 0.0, ratio2 = 0.0;
    for (const auto& c : r2.chains) {
        up = std::max(up, c.up_step_error);
        b = std::max(b, c.b_step_error);
        tele = std::max(tele, c.telescoping_error);
        eq = std::max(eq, c.equivalence_error);
        grad = std::max(grad, c.gradient_error);
        ratio2 = std::max(ratio2, c.max_singular_ratio);
    }
    summary["equivalence"] = {{"trials", a.trials},
                       {"seed", eo.seed},
                       {"d_model", a.d_model},
                       {"max_context_rows", a.max_rows},
                       {"corrupt_scale", eo.corrupt_scale},
                       {"passed", r1.passed()},
                       {"max_error", r1.max_error()},
                       {"max_singular_ratio", ratio1},
                       {"failing_seeds", seeds_json(r1.failing_seeds())}};
    summary["descent"] = {{"chains", a.chains},
                       {"chain_length", a.chain_length},
                       {"seed", dopt.seed},
                       {"d_model", a.d_model},
                       {"passed", r2.passed()},
                       {"max_up_step_error", up},
                       {"max_b_step_error", b},
                       {"max_telescoping_error", tele},
                       {"max_equivalence_error", eq},
                       {"max_gradient_relative_error", grad},
                       {"max_singular_ratio", ratio2},
                       {"failing_seeds", seeds_json(r2.failing_seeds())}};

    out << "equivalence: " << (r1.passed() ? "PASS" : "FAIL") << "  trials=" << a.trials << " max_error=" << r1.max_error()
        << "  (" << fixed(r1.seconds, 3) << " s)\n";
    out << "descent: " << (r2.passed() ? "PASS" : "FAIL") << "  chains=" << a.chains << " max_step_error=" << std::max(up, b)
        << " max_gradient_rel_error=" << grad << "  (" << fixed(r2.seconds, 3) << " s)\n";
    auto list = [&](const char* name, const std::vector<std::uint64_t>& seeds) {
        if (seeds.empty()) return;
        err << name << " failing seeds:";
        for (auto s : seeds) err << ' ' << s;
        err << '\n';
    };
    list("equivalence", r1.failing_seeds());
    list("descent", r2.failing_seeds());
    return r1.passed() && r2.passed() ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- steer-demo

struct SteerArgs {
    steer::DemoOptions demo;
    std::string keywords_file;
    double lambda = 2.0;
    double epsilon = 1e-6;
    std::string layers = "all";
    std::string steps = "all";
    std::string heads = "all";
    std::string out = "runs/steer";
};

int cmd_steer(SteerArgs a, ordered_json& summary, std::ostream& out, std::ostream&) {
    steer::SteeringConfig cfg;
    cfg.lambda = a.lambda;
    cfg.epsilon = a.epsilon;
    cfg.layers = as_usage([&] { return steer::Selection::parse(a.layers); });
    cfg.steps = as_usage([&] { return steer::Selection::parse(a.steps); });
    cfg.heads = as_usage([&] { return steer::Selection::parse(a.heads); });
    as_usage([&] {
        cfg.validate();
        a.demo.validate();
        return 0;
    });
    if (!a.keywords_file.empty()) a.demo.keywords = read_file(a.keywords_file);
    const fs::path dir(a.out);
    make_dir(dir);

    const auto res = steer::run_steer_demo(a.demo, cfg);
    steer::export_trace(res.before, dir / "before");
    steer::export_trace(res.after, dir / "after");
    write_to(dir / "relevance.csv", [&](std::ostream& o) {
        o << "token,source,image,score,included,bias\n";
        for (std::size_t i = 0; i < res.relevance.size(); ++i) {
            const auto& src = res.relevance.sources[i];
            o << i << ',' << (src.kind == steer::TokenKind::Image ? "image" : "text") << ',' << src.image << ','
              << fixed(res.relevance.scores[i], 6) << ',' << (res.relevance.included[i] ? 1 : 0) << ','
              << fixed(res.context_bias(static_cast<Eigen::Index>(i)), 6) << '\n';
        }
    });

    const int fragments = static_cast<int>(res.after.fragments().size());
    bool passed = false;
    std::string check;
    if (res.steered_fragments == 0) {
        check = "traces identical";
        passed = read_file(dir / "before.csv") == read_file(dir / "after.csv") &&
                 read_file(dir / "before.pgm") == read_file(dir / "after.pgm");
    } else {
        check = "top-relevance mass increased";
        passed = !res.top_keys.empty() && res.mass_after > res.mass_before;
    }

    summary["seed"] = a.demo.seed;
    summary["lambda"] = cfg.lambda;
    summary["epsilon"] = cfg.epsilon;
    summary["layers"] = cfg.layers.to_string();
    summary["steps"] = cfg.steps.to_string();
    summary["heads"] = cfg.heads.to_string();
    summary["focus"] = res.plan.focus;
    summary["context_tokens"] = res.relevance.size();
    summary["fragments"] = fragments;
    summary["steered_fragments"] = res.steered_fragments;
    summary["top_keys"] = res.top_keys;
    summary["mass_before"] = res.mass_before;
    summary["mass_after"] = res.mass_after;
    summary["check"] = check;
    summary["passed"] = passed;

    out << "steered fragments: " << res.steered_fragments << " of " << fragments << '\n';
    out << "top-relevance keys:";
    for (int k : res.top_keys) out << ' ' << k;
    out << '\n';
    out << "attention mass on top keys: before " << fixed(res.mass_before, 6) << "  after " << fixed(res.mass_after, 6)
        << '\n';
    out << "check (" << check << "): " << (passed ? "PASS" : "FAIL") << '\n';
    return passed ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
    std::string manifest;
    std::string generations;
    std::string backend = "fixture";
    std::string fixture;
    std::string endpoint;
    std::string path = "/judge";
    int timeout = 120;
    int runs = 3;
    int retries = 2;
    int workers = 4;
    std::string model = "model";
    bool strict_benchmark = false;
    PolicyArgs policy;
    std::string out = "runs/score";
    std::string token_env;  // config file or GENIUS_TOKEN_ENV only
};

int cmd_score(const ScoreArgs& a, ordered_json& summary, std::ostream& out, std::ostream& err) {
    require(!a.manifest.empty(), "--manifest is required");
    require(!a.generations.empty(), "--generations is required");
    require(a.backend == "fixture" || a.backend == "http", "--backend must be fixture or http");
    require(a.backend != "fixture" || !a.fixture.empty(), "--backend fixture needs --fixture");
    require(a.backend != "http" || !a.endpoint.empty(), "--backend http needs --endpoint");
    require(a.timeout > 0, "--timeout must be positive");
    judge::JudgeOptions jo;
    jo.runs = a.runs;
    jo.max_retries = a.retries;
    jo.workers = a.workers;
    jo.model = a.model;
    as_usage([&] {
        jo.validate();
        return 0;
    });
    const auto [policy, key] = make_policy(a.policy);
    const fs::path dir(a.out);
    make_dir(dir);

    data::LoadOptions lo;
    lo.strict_benchmark = a.strict_benchmark;
    const auto manifest = data::load_manifest(a.manifest, lo);

    std::unique_ptr<judge::JudgeBackend> backend;
    if (a.backend == "fixture") {
        backend = std::make_unique<judge::FixtureBackend>(judge::FixtureBackend::load(a.fixture));
    } else {
        judge::HttpConfig hc;
        hc.endpoint = a.endpoint;
        hc.path = a.path;
        hc.token_env = a.token_env;
        hc.timeout_seconds = a.timeout;
        backend = std::make_unique<judge::HttpBackend>(hc);
    }

    summary["manifest"] = a.manifest;
    summary["backend"] = backend->identifier();
    summary["model"] = a.model;
    summary["runs"] = a.runs;
    summary["policy"] = policy_json(policy, key);

    const auto report = judge::judge_many(manifest, a.generations, *backend, jo);
    write_to(dir / "verdicts.jsonl", [&](std::ostream& o) { judge::write_verdicts(o, report.verdicts); });
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';

    int ok_runs = 0;
    for (const auto& v : report.verdicts) ok_runs += v.ok() ? 1 : 0;
    summary["samples"] = manifest.samples.size();
    summary["missing"] = report.missing;
    summary["failed"] = report.failed;
    summary["warnings"] = report.warnings;
    summary["runs_ok"] = ok_runs;
    summary["runs_failed"] = static_cast<int>(report.verdicts.size()) - ok_runs;
    if (ok_runs == 0) {
        err << "no successful judge runs; no report written\n";
        return kExitCheckFailed;
    }
    const auto agg = write_reports(report.verdicts, policy, key, dir, summary);
    scoring::write_aggregate_text(out, agg);
    return report.failed.empty() ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
    std::vector<std::string> verdicts;
    PolicyArgs policy;
    std::string out = "runs/report";
};

int cmd_report(const ReportArgs& a, ordered_json& summary, std::ostream& out, std::ostream&) {
    require(!a.verdicts.empty(), "--verdicts is required");
    const auto [policy, key] = make_policy(a.policy);
    const fs::path dir(a.out);
    make_dir(dir);
    std::vector<judge::SampleVerdict> all;
    for (const auto& p : a.verdicts) {
        auto v = judge::read_verdicts(fs::path(p));
        all.insert(all.end(), v.begin(), v.end());
    }
    summary["verdicts"] = a.verdicts;
    summary["policy"] = policy_json(policy, key);
    const auto agg = write_reports(all, policy, key, dir, summary);
    scoring::write_aggregate_text(out, agg);
    return kExitOk;
}

// ---------------------------------------------------------------- agree

struct AgreeArgs {
    std::string verdicts;
    std::string human;
    std::string out = "runs/agree";
};

int cmd_agree(const AgreeArgs& a, ordered_json& summary, std::ostream& out, std::ostream&) {
    require(!a.verdicts.empty() && !a.human.empty(), "--verdicts and --human are required");
    const fs::path dir(a.out);
    make_dir(dir);
    const auto verdicts = judge::read_verdicts(fs::path(a.verdicts));
    const auto ratings = scoring::read_human_ratings(fs::path(a.human));
    const auto rows = scoring::agreement(verdicts, ratings);
    write_to(dir / "agreement.txt", [&](std::ostream& o) { scoring::write_agreement_text(o, rows); });
    write_to(dir / "agreement.csv", [&](std::ostream& o) {
        o << "metric,pairs,pearson,mae\n";
        for (const auto& r : rows) {
            o << r.metric << ',' << r.pairs << ',' << (r.pearson ? fixed(*r.pearson, 6) : "") << ',' << fixed(r.mae, 6)
              << '\n';
        }
    });
    ordered_json js = ordered_json::array();
    for (const auto& r : rows) {
        js.push_back({{"metric", r.metric}, {"pairs", r.pairs}, {"pearson", opt_number(r.pearson)}, {"mae", r.mae}});
    }
    summary["verdicts"] = a.verdicts;
    summary["human"] = a.human;
    summary["rows"] = js;
    scoring::write_agreement_text(out, rows);
    return kExitOk;
}

// ---------------------------------------------------------------- config and dispatch

std::string env_name(const std::string& lname) {
    std::string s = "GENIUS_";
    for (char c : lname) s += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::string config_scalar(const nlohmann::json& v, const std::string& where) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw UsageError("config: " + where + " must be a string, number or boolean");
}

std::string long_name(const CLI::Option* opt) { return opt->get_lnames().empty() ? "" : opt->get_lnames().front(); }

/// Sets option defaults from the config file. Keys inside a subcommand
/// object apply to that subcommand; top-level keys apply to every
/// subcommand with such an option.
void apply_config(const nlohmann::json& cfg, const std::vector<CLI::App*>& subs) {
    if (!cfg.is_object()) throw UsageError("config: top level must be an object");
    std::map<std::string, CLI::App*> by_name;
    for (CLI::App* s : subs) by_name[s->get_name()] = s;

    auto set = [](CLI::Option* opt, const nlohmann::json& v, const std::string& where) {
        try {
            if (v.is_array()) {
                std::vector<std::string> items;
                for (const auto& x : v) items.push_back(config_scalar(x, where));
                opt->default_val(items);
            } else {
                opt->default_val(config_scalar(v, where));
            }
        } catch (const CLI::Error& e) {
            throw UsageError("config: " + where + ": " + e.what());
        }
    };
    auto find = [](CLI::App* s, const std::string& key) -> CLI::Option* {
        for (CLI::Option* o : s->get_options()) {
            if (long_name(o) == key && key != "help" && key != "config") return o;
        }
        return nullptr;
    };

    for (const auto& [key, value] : cfg.items()) {
        if (key == "token_env") continue;
        if (auto it = by_name.find(key); it != by_name.end()) {
            if (!value.is_object()) throw UsageError("config: \"" + key + "\" must be an object");
            for (const auto& [k, v] : value.items()) {
                if (k == "token_env") continue;
                CLI::Option* opt = find(it->second, k);
                if (opt == nullptr) throw UsageError("config: unknown key \"" + key + "." + k + "\"");
                set(opt, v, key + "." + k);
            }
            continue;
        }
        bool used = false;
        for (CLI::App* s : subs) {
            if (CLI::Option* opt = find(s, key)) {
                set(opt, value, key);
                used = true;
            }
        }
        if (!used) throw UsageError("config: unknown key \"" + key + "\"");
    }
}

std::string prescan_config(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    if (const char* e = std::getenv("GENIUS_CONFIG"); e != nullptr) return e;
    return {};
}

std::string token_env_from(const nlohmann::json& cfg) {
    std::string name;
    if (cfg.is_object()) {
        if (cfg.contains("token_env")) name = config_scalar(cfg["token_env"], "token_env");
        if (cfg.contains("score") && cfg["score"].is_object() && cfg["score"].contains("token_env")) {
            name = config_scalar(cfg["score"]["token_env"], "score.token_env");
        }
    }
    if (const char* e = std::getenv("GENIUS_TOKEN_ENV"); e != nullptr) name = e;
    return name;
}

/// Runs one command, then always writes `<out>/summary.json`.
int execute(const std::string& name, const std::string& out_dir,
            const std::function<int(ordered_json&, std::ostream&, std::ostream&)>& fn, std::ostream& out,
            std::ostream& err) {
    ordered_json summary;
    summary["command"] = name;
    int code = kExitOk;
    std::string error;
    try {
        code = fn(summary, out, err);
    } catch (const UsageError& e) {
        code = kExitUsage;
        error = e.what();
    } catch (const std::exception& e) {
        code = kExitRuntime;
        error = e.what();
    }
    summary["status"] = code == kExitOk ? "ok" : code == kExitCheckFailed ? "failed" : "error";
    summary["exit_code"] = code;
    if (!error.empty()) {
        summary["error"] = error;
        err << "genius " << name << ": " << error << '\n';
    }
    try {
        make_dir(out_dir);
        write_to(fs::path(out_dir) / "summary.json", [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
    } catch (const std::exception& e) {
        err << "genius " << name << ": " << e.what() << '\n';
        if (code == kExitOk) code = kExitRuntime;
    }
    return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Context-steered generation toolkit: theorem checks, steering demo, judging and scoring", "genius"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags > GENIUS_* env > config > defaults)")
        ->envname("GENIUS_CONFIG");

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify-theorems", "Check the context/parameter equivalence and the implicit descent");
    verify->add_option("--trials", va.trials, "Equivalence trials");
    verify->add_option("--chains", va.chains, "Descent chains");
    verify->add_option("--chain-length", va.chain_length, "Segments per chain");
    verify->add_option("--d-model", va.d_model, "Model width");
    verify->add_option("--max-rows", va.max_rows, "Largest context length");
    verify->add_option("--seed", va.seed, "Base seed (descent uses seed+1)");
    verify->add_flag("--corrupt", va.corrupt, "Negative control: scale the rank-one update");
    verify->add_option("--corrupt-scale", va.corrupt_scale, "Scale used by --corrupt");
    verify->add_option("--workers", va.workers, "Run the two suites concurrently when > 1");
    verify->add_option("--out", va.out, "Run directory");

    SteerArgs sa;
    auto* steer_cmd = app.add_subcommand("steer-demo", "Toy forward pass with and without attention steering");
    steer_cmd->add_option("--seed", sa.demo.seed, "Seed");
    steer_cmd->add_option("--d-model", sa.demo.d_model, "Token width");
    steer_cmd->add_option("--layers", sa.demo.layers, "Layers");
    steer_cmd->add_option("--heads", sa.demo.heads, "Heads per layer");
    steer_cmd->add_option("--steps", sa.demo.steps, "Generation steps");
    steer_cmd->add_option("--images", sa.demo.images, "Context images");
    steer_cmd->add_option("--tokens-per-image", sa.demo.tokens_per_image, "Tokens per image");
    steer_cmd->add_option("--text-tokens", sa.demo.text_tokens, "Context text tokens");
    steer_cmd->add_option("--queries", sa.demo.queries, "Generation tokens");
    steer_cmd->add_option("--top-k", sa.demo.top_k, "Keys counted in the concentration statistic");
    steer_cmd->add_option("--keywords", sa.demo.keywords, "Planner answer as JSON text");
    steer_cmd->add_option("--keywords-file", sa.keywords_file, "Planner answer JSON file (overrides --keywords)");
    steer_cmd->add_option("--lambda", sa.lambda, "Steering intensity");
    steer_cmd->add_option("--epsilon", sa.epsilon, "Standardization epsilon");
    steer_cmd->add_option("--steer-layers", sa.layers, "Steered layers: all, none or a list like 0,2");
    steer_cmd->add_option("--steer-steps", sa.steps, "Steered generation steps");
    steer_cmd->add_option("--steer-heads", sa.heads, "Steered heads");
    steer_cmd->add_option("--out", sa.out, "Run directory");

    ScoreArgs sc;
    auto* score = app.add_subcommand("score", "Judge generated images and aggregate the scores");
    score->add_option("--manifest", sc.manifest, "Benchmark manifest (JSON)");
    score->add_option("--generations", sc.generations, "Directory with <id>.png or <id>.ppm");
    score->add_option("--backend", sc.backend, "fixture or http");
    score->add_option("--fixture", sc.fixture, "Fixture responses for --backend fixture");
    score->add_option("--endpoint", sc.endpoint, "scheme://host[:port] for --backend http");
    score->add_option("--path", sc.path, "Request path for --backend http");
    score->add_option("--timeout", sc.timeout, "HTTP timeout in seconds");
    score->add_option("--runs", sc.runs, "Independent judge runs per sample");
    score->add_option("--retries", sc.retries, "Retries per judge call");
    score->add_option("--workers", sc.workers, "Samples judged concurrently");
    score->add_option("--model", sc.model, "Name of the evaluated model");
    score->add_flag("--strict-benchmark", sc.strict_benchmark, "Require the full benchmark split");
    add_policy_options(score, sc.policy);
    score->add_option("--out", sc.out, "Run directory");

    ReportArgs ra;
    auto* report = app.add_subcommand("report", "Aggregate existing verdict files");
    report->add_option("--verdicts", ra.verdicts, "Verdict files (one or more)");
    add_policy_options(report, ra.policy);
    report->add_option("--out", ra.out, "Run directory");

    AgreeArgs aa;
    auto* agree = app.add_subcommand("agree", "Pearson r and MAE between judge and human scores");
    agree->add_option("--verdicts", aa.verdicts, "Verdict file of one model");
    agree->add_option("--human", aa.human, "Human ratings CSV: sample_id,metric,score");
    agree->add_option("--out", aa.out, "Run directory");

    const std::vector<CLI::App*> subs{verify, steer_cmd, score, report, agree};
    for (CLI::App* s : subs) {
        for (CLI::Option* o : s->get_options()) {
            const std::string ln = long_name(o);
            if (!ln.empty() && ln != "help") o->envname(env_name(ln));
        }
    }

    nlohmann::json cfg = nlohmann::json::object();
    try {
        if (const std::string path = prescan_config(args); !path.empty()) {
            cfg = nlohmann::json::parse(read_file(path));
            apply_config(cfg, subs);
        }
        sc.token_env = token_env_from(cfg);
    } catch (const std::exception& e) {
        err << "genius: " << e.what() << '\n';
        return kExitUsage;
    }

    std::vector<std::string> argv_store{"genius"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : argv_store) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    using namespace std::placeholders;
    if (verify->parsed()) return execute("verify-theorems", va.out, std::bind(cmd_verify, va, _1, _2, _3), out, err);
    if (steer_cmd->parsed()) return execute("steer-demo", sa.out, std::bind(cmd_steer, sa, _1, _2, _3), out, err);
    if (score->parsed()) return execute("score", sc.out, std::bind(cmd_score, sc, _1, _2, _3), out, err);
    if (report->parsed()) return execute("report", ra.out, std::bind(cmd_report, ra, _1, _2, _3), out, err);
    return execute("agree", aa.out, std::bind(cmd_agree, aa, _1, _2, _3), out, err);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, out, err);
}

}  // namespace genius::app
