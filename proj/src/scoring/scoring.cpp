#include "genius/scoring/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <tuple>

#include "genius/error.hpp"

namespace genius::scoring {

namespace {

std::string fmt(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v, int digits) { return v ? fmt(*v, digits) : "-"; }

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

GroupRow group_row(std::string key, const std::vector<const SampleScore*>& members, const ScoringPolicy& p) {
    GroupRow row;
    row.key = std::move(key);
    row.samples = static_cast<int>(members.size());
    std::vector<double> rc, vc, aq;
    std::map<data::Task, std::vector<MetricTriple>> by_task;
    std::vector<MetricTriple> triples;
    for (const SampleScore* s : members) {
        const MetricTriple t = s->triple();
        rc.push_back(t.rc_pct);
        if (t.vc_pct) vc.push_back(*t.vc_pct);
        aq.push_back(t.aq_pct);
        triples.push_back(t);
        by_task[s->task].push_back(t);
    }
    row.rc_pct = mean(rc);
    if (!vc.empty()) row.vc_pct = mean(vc);
    row.aq_pct = mean(aq);
    if (p.overall == OverallMode::SampleWeighted) {
        row.overall = weighted_overall(triples, p.weights, p.missing_vc);
    } else {
        std::vector<double> per_task;
        for (const auto& [task, ts] : by_task) per_task.push_back(weighted_overall(ts, p.weights, p.missing_vc));
        row.overall = mean(per_task);
    }
    return row;
}

void require_weight(double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) throw ContractError(std::string("weight ") + name + " must be finite and >= 0");
}

}  // namespace

double percent_of_scores(std::span<const judge::MetricScore> scores) {
    if (scores.empty()) throw DomainError("percentage of an empty score list is undefined");
    double s = 0.0;
    for (const auto& x : scores) s += x.value();
    return s / static_cast<double>(scores.size()) / 2.0 * 100.0;
}

double percent_of_values(std::span<const double> values) {
    if (values.empty()) throw DomainError("percentage of an empty score list is undefined");
    double s = 0.0;
    for (double x : values) {
        if (!std::isfinite(x) || x < 0.0 || x > 2.0) throw ContractError("score mean outside [0, 2]");
        s += x;
    }
    return s / static_cast<double>(values.size()) / 2.0 * 100.0;
}

void MetricTriple::validate() const {
    auto check = [](double v, const char* name) {
        if (!std::isfinite(v) || v < 0.0 || v > 100.0) throw ContractError(std::string(name) + " outside [0, 100]");
    };
    check(rc_pct, "rc_pct");
    if (vc_pct) check(*vc_pct, "vc_pct");
    check(aq_pct, "aq_pct");
}

void WeightVector::validate() const {
    require_weight(rc, "rc");
    require_weight(vc, "vc");
    require_weight(aq, "aq");
    if (rc + vc + aq <= 0.0) throw ContractError("weights must not all be zero");
}

MissingVc parse_missing_vc(std::string_view name) {
    for (auto m : {MissingVc::Renormalize, MissingVc::Zero}) {
        if (to_string(m) == name) return m;
    }
    throw ContractError("unknown missing-VC policy \"" + std::string(name) + "\" (renormalize, zero)");
}

std::string_view to_string(MissingVc m) { return m == MissingVc::Zero ? "zero" : "renormalize"; }

OverallMode parse_overall_mode(std::string_view name) {
    for (auto m : {OverallMode::SampleWeighted, OverallMode::TaskMean}) {
        if (to_string(m) == name) return m;
    }
    throw ContractError("unknown overall mode \"" + std::string(name) + "\" (sample, task-mean)");
}

std::string_view to_string(OverallMode m) { return m == OverallMode::TaskMean ? "task-mean" : "sample"; }

double sample_overall(const MetricTriple& t, const WeightVector& w, MissingVc missing) {
    t.validate();
    w.validate();
    double num = w.rc * t.rc_pct + w.aq * t.aq_pct;
    double den = w.rc + w.aq;
    if (t.vc_pct) {
        num += w.vc * *t.vc_pct;
        den += w.vc;
    } else if (missing == MissingVc::Zero) {
        den += w.vc;
    }
    if (den <= 0.0) throw DomainError("no present metric carries weight");
    return num / den;
}

double weighted_overall(std::span<const MetricTriple> triples, const WeightVector& w, MissingVc missing) {
    if (triples.empty()) throw DomainError("overall of zero samples is undefined");
    double s = 0.0;
    for (const auto& t : triples) s += sample_overall(t, w, missing);
    return s / static_cast<double>(triples.size());
}

MetricTriple SampleScore::triple() const {
    MetricTriple t;
    t.rc_pct = rc / 2.0 * 100.0;
    if (vc) t.vc_pct = *vc / 2.0 * 100.0;
    t.aq_pct = aq / 2.0 * 100.0;
    return t;
}

std::vector<SampleScore> per_sample_scores(std::span<const judge::SampleVerdict> verdicts) {
    struct Acc {
        data::Task task;
        std::size_t hints;
        std::vector<double> rc, vc, aq;
    };
    std::map<std::pair<std::string, std::string>, Acc> acc;
    for (const auto& v : verdicts) {
        const auto key = std::make_pair(v.model, v.sample_id);
        auto it = acc.find(key);
        if (it == acc.end()) {
            it = acc.emplace(key, Acc{v.task, v.vc.size(), {}, {}, {}}).first;
            if (!v.ok()) it->second.hints = static_cast<std::size_t>(-1);
        }
        Acc& a = it->second;
        if (a.task != v.task) throw ContractError("sample " + v.sample_id + " has runs with different tasks");
        if (!v.ok()) continue;
        if (a.hints == static_cast<std::size_t>(-1)) a.hints = v.vc.size();
        if (a.hints != v.vc.size()) throw ContractError("sample " + v.sample_id + " has runs with different VC counts");
        a.rc.push_back(v.rc.value());
        if (!v.vc.empty()) {
            double s = 0.0;
            for (const auto& x : v.vc) s += x.value();
            a.vc.push_back(s / static_cast<double>(v.vc.size()));
        }
        a.aq.push_back(v.aq.value());
    }
    std::vector<SampleScore> out;
    for (const auto& [key, a] : acc) {
        if (a.rc.empty()) continue;
        SampleScore s;
        s.model = key.first;
        s.sample_id = key.second;
        s.task = a.task;
        s.runs = static_cast<int>(a.rc.size());
        s.rc = mean(a.rc);
        if (!a.vc.empty()) s.vc = mean(a.vc);
        s.aq = mean(a.aq);
        out.push_back(std::move(s));
    }
    return out;
}

GroupKey parse_group_key(std::string_view name) {
    for (auto k : {GroupKey::Task, GroupKey::Dimension, GroupKey::Model}) {
        if (to_string(k) == name) return k;
    }
    throw ContractError("unknown grouping key \"" + std::string(name) + "\" (task, dimension, model)");
}

std::string_view to_string(GroupKey k) {
    switch (k) {
        case GroupKey::Task: return "task";
        case GroupKey::Dimension: return "dimension";
        case GroupKey::Model: return "model";
    }
    return "?";
}

Aggregate aggregate_by(std::span<const judge::SampleVerdict> verdicts, GroupKey key, const ScoringPolicy& w) {
    w.weights.validate();
    const auto samples = per_sample_scores(verdicts);
    if (samples.empty()) throw ContractError("no successful verdicts to aggregate");

    // Sort key: taxonomy position for task/dimension, name for model.
    std::map<std::pair<int, std::string>, std::vector<const SampleScore*>> groups;
    std::vector<const SampleScore*> all;
    for (const auto& s : samples) {
        std::pair<int, std::string> k;
        switch (key) {
            case GroupKey::Task: k = {static_cast<int>(s.task), std::string(data::to_string(s.task))}; break;
            case GroupKey::Dimension: {
                const auto d = data::dimension_of(s.task);
                k = {static_cast<int>(d), std::string(data::to_string(d))};
                break;
            }
            case GroupKey::Model: k = {0, s.model}; break;
        }
        groups[k].push_back(&s);
        all.push_back(&s);
    }
    Aggregate a;
    a.key = key;
    for (const auto& [k, members] : groups) a.rows.push_back(group_row(k.second, members, w));
    a.total = group_row("Overall", all, w);
    return a;
}

std::vector<ModelRow> leaderboard(std::span<const judge::SampleVerdict> verdicts, const ScoringPolicy& w) {
    w.weights.validate();
    const auto samples = per_sample_scores(verdicts);
    if (samples.empty()) throw ContractError("no successful verdicts to aggregate");
    std::map<std::string, std::vector<const SampleScore*>> by_model;
    for (const auto& s : samples) by_model[s.model].push_back(&s);
    std::vector<ModelRow> rows;
    for (const auto& [model, members] : by_model) {
        ModelRow row;
        row.model = model;
        row.overall = group_row(model, members, w).overall;
        std::map<data::Task, std::vector<const SampleScore*>> by_task;
        for (const SampleScore* s : members) by_task[s->task].push_back(s);
        for (const auto& [task, ts] : by_task) row.tasks[task] = group_row(std::string(data::to_string(task)), ts, w);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_aggregate_text(std::ostream& out, const Aggregate& a) {
    std::size_t width = 7;
    for (const auto& r : a.rows) width = std::max(width, r.key.size());
    char line[256];
    std::snprintf(line, sizeof line, "%-*s %7s %7s %7s %7s %8s\n", static_cast<int>(width), std::string(to_string(a.key)).c_str(),
                  "samples", "RC", "VC", "AQ", "Overall");
    out << line;
    auto emit = [&](const GroupRow& r) {
        std::snprintf(line, sizeof line, "%-*s %7d %7s %7s %7s %8s\n", static_cast<int>(width), r.key.c_str(), r.samples,
                      fmt(r.rc_pct, 2).c_str(), fmt_opt(r.vc_pct, 2).c_str(), fmt(r.aq_pct, 2).c_str(),
                      fmt(r.overall, 2).c_str());
        out << line;
    };
    for (const auto& r : a.rows) emit(r);
    emit(a.total);
}

void write_aggregate_csv(std::ostream& out, const Aggregate& a) {
    out << to_string(a.key) << ",samples,rc_pct,vc_pct,aq_pct,overall\n";
    auto emit = [&](const GroupRow& r) {
        out << r.key << ',' << r.samples << ',' << fmt(r.rc_pct, 6) << ',' << (r.vc_pct ? fmt(*r.vc_pct, 6) : "") << ','
            << fmt(r.aq_pct, 6) << ',' << fmt(r.overall, 6) << '\n';
    };
    for (const auto& r : a.rows) emit(r);
    emit(a.total);
}

void write_leaderboard_text(std::ostream& out, const std::vector<ModelRow>& rows) {
    std::size_t width = 6;
    for (const auto& r : rows) width = std::max(width, r.model.size());
    out << std::string(width, ' ') << "          ";
    for (data::Task t : data::kTasks) {
        std::string name(data::to_string(t));
        name.resize(20, ' ');
        out << ' ' << name;
    }
    out << '\n';
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-*s %9s", static_cast<int>(width), "Method", "Overall");
    out << buf;
    for (std::size_t i = 0; i < data::kTasks.size(); ++i) {
        std::snprintf(buf, sizeof buf, " %6s %6s %6s", "RC", "VC", "AQ");
        out << buf;
    }
    out << '\n';
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-*s %9s", static_cast<int>(width), r.model.c_str(), fmt(r.overall, 2).c_str());
        out << buf;
        for (data::Task t : data::kTasks) {
            auto it = r.tasks.find(t);
            if (it == r.tasks.end()) {
                std::snprintf(buf, sizeof buf, " %6s %6s %6s", "-", "-", "-");
            } else {
                std::snprintf(buf, sizeof buf, " %6s %6s %6s", fmt(it->second.rc_pct, 2).c_str(),
                              fmt_opt(it->second.vc_pct, 2).c_str(), fmt(it->second.aq_pct, 2).c_str());
            }
            out << buf;
        }
        out << '\n';
    }
}

void write_leaderboard_csv(std::ostream& out, const std::vector<ModelRow>& rows) {
    out << "model,overall";
    for (data::Task t : data::kTasks) {
        for (const char* m : {"rc", "vc", "aq"}) out << ',' << data::to_string(t) << '_' << m;
    }
    out << '\n';
    for (const auto& r : rows) {
        out << r.model << ',' << fmt(r.overall, 6);
        for (data::Task t : data::kTasks) {
            auto it = r.tasks.find(t);
            if (it == r.tasks.end()) {
                out << ",,,";
            } else {
                out << ',' << fmt(it->second.rc_pct, 6) << ',' << (it->second.vc_pct ? fmt(*it->second.vc_pct, 6) : "")
                    << ',' << fmt(it->second.aq_pct, 6);
            }
        }
        out << '\n';
    }
}

}  // namespace genius::scoring
