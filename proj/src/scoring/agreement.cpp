#include "genius/scoring/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "genius/error.hpp"

namespace genius::scoring {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, std::size_t min_len, const char* what) {
    if (x.size() != y.size()) throw ContractError(std::string(what) + ": length mismatch");
    if (x.size() < min_len) throw ContractError(std::string(what) + ": needs at least " + std::to_string(min_len) + " points");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ContractError(std::string(what) + ": non-finite input");
    }
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, 2, "pearson");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson is undefined for zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double mae(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y, 1, "mae");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
    return s / static_cast<double>(x.size());
}

std::vector<HumanRating> read_human_ratings(std::istream& in) {
    std::vector<HumanRating> out;
    std::string line;
    int lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        const std::string where = "ratings line " + std::to_string(lineno);
        if (!header) {
            if (cells != std::vector<std::string>{"sample_id", "metric", "score"}) {
                throw ParseError(where + ": expected header sample_id,metric,score");
            }
            header = true;
            continue;
        }
        if (cells.size() != 3 || cells[0].empty()) throw ParseError(where + ": expected 3 fields");
        HumanRating r;
        r.sample_id = cells[0];
        try {
            r.metric = judge::parse_metric(cells[1]);
        } catch (const ContractError& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (cells[2] != "0" && cells[2] != "1" && cells[2] != "2") {
            throw ParseError(where + ": score \"" + cells[2] + "\" is not 0, 1 or 2");
        }
        r.score = judge::MetricScore(cells[2][0] - '0');
        out.push_back(std::move(r));
    }
    if (!header) throw ParseError("ratings file is empty");
    return out;
}

std::vector<HumanRating> read_human_ratings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read ratings " + path.string());
    return read_human_ratings(in);
}

std::vector<AgreementRow> agreement(std::span<const judge::SampleVerdict> verdicts,
                                    std::span<const HumanRating> ratings) {
    std::set<std::string> models;
    // (sample, metric) -> per-run values on the 0..2 scale
    std::map<std::pair<std::string, judge::Metric>, std::vector<double>> judged;
    for (const auto& v : verdicts) {
        models.insert(v.model);
        if (!v.ok()) continue;
        judged[{v.sample_id, judge::Metric::RuleCompliance}].push_back(v.rc.value());
        judged[{v.sample_id, judge::Metric::AestheticQuality}].push_back(v.aq.value());
        if (!v.vc.empty()) {
            double s = 0.0;
            for (const auto& x : v.vc) s += x.value();
            judged[{v.sample_id, judge::Metric::VisualConsistency}].push_back(s / static_cast<double>(v.vc.size()));
        }
    }
    if (models.size() > 1) throw ContractError("agreement needs verdicts from a single model");
    std::map<std::pair<std::string, judge::Metric>, std::vector<double>> human;
    for (const auto& r : ratings) human[{r.sample_id, r.metric}].push_back(r.score.value());

    std::set<std::string> judged_ids, human_ids;
    for (const auto& [k, _] : judged) judged_ids.insert(k.first);
    for (const auto& [k, _] : human) human_ids.insert(k.first);
    bool shared = false;
    for (const auto& id : judged_ids) shared = shared || human_ids.contains(id);
    if (!shared) throw ContractError("judge verdicts and human ratings share no sample id");

    std::map<judge::Metric, std::pair<std::vector<double>, std::vector<double>>> pairs;
    for (const auto& [k, hv] : human) {
        auto it = judged.find(k);
        if (it == judged.end()) continue;
        pairs[k.second].first.push_back(mean(it->second));
        pairs[k.second].second.push_back(mean(hv));
    }

    auto row = [](std::string name, const std::vector<double>& j, const std::vector<double>& h) {
        AgreementRow r;
        r.metric = std::move(name);
        r.pairs = static_cast<int>(j.size());
        r.mae = mae(j, h);
        try {
            if (j.size() >= 2) r.pearson = pearson(j, h);
        } catch (const DomainError&) {
        }
        return r;
    };
    std::vector<AgreementRow> out;
    std::vector<double> all_j, all_h;
    for (judge::Metric m : judge::kMetrics) {
        auto it = pairs.find(m);
        if (it == pairs.end()) continue;
        out.push_back(row(std::string(judge::metric_key(m)), it->second.first, it->second.second));
        all_j.insert(all_j.end(), it->second.first.begin(), it->second.first.end());
        all_h.insert(all_h.end(), it->second.second.begin(), it->second.second.end());
    }
    if (all_j.empty()) throw ContractError("no (sample, metric) pair is rated by both the judge and humans");
    out.push_back(row("overall", all_j, all_h));
    return out;
}

void write_agreement_text(std::ostream& out, const std::vector<AgreementRow>& rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-8s %6s %10s %8s\n", "metric", "pairs", "pearson_r", "mae");
    out << buf;
    for (const auto& r : rows) {
        char p[32];
        if (r.pearson) {
            std::snprintf(p, sizeof p, "%.6f", *r.pearson);
        } else {
            std::snprintf(p, sizeof p, "-");
        }
        std::snprintf(buf, sizeof buf, "%-8s %6d %10s %8.6f\n", r.metric.c_str(), r.pairs, p, r.mae);
        out << buf;
    }
}

}  // namespace genius::scoring
