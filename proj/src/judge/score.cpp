#include "genius/judge/score.hpp"

#include <optional>
#include <regex>
#include <sstream>

#include "genius/error.hpp"

namespace genius::judge {

std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::RuleCompliance: return "Rule Compliance";
        case Metric::VisualConsistency: return "Visual Consistency";
        case Metric::AestheticQuality: return "Aesthetic Quality";
    }
    return "?";
}

std::string_view metric_key(Metric m) {
    switch (m) {
        case Metric::RuleCompliance: return "rc";
        case Metric::VisualConsistency: return "vc";
        case Metric::AestheticQuality: return "aq";
    }
    return "?";
}

Metric parse_metric(std::string_view text) {
    for (Metric m : kMetrics) {
        if (text == metric_key(m) || text == metric_name(m)) return m;
    }
    throw ContractError("unknown metric \"" + std::string(text) + "\" (rc, vc, aq)");
}

MetricScore::MetricScore(int value) : value_(value) {
    if (value < 0 || value > 2) throw ContractError("score " + std::to_string(value) + " is not 0, 1 or 2");
}

MetricScore parse_score(std::string_view raw, Metric metric) {
    const std::regex line_re("^\\s*" + std::string(metric_name(metric)) + "\\s*:\\s*(.*?)\\s*$");
    std::optional<int> found;
    std::istringstream in{std::string(raw)};
    std::string line;
    while (std::getline(in, line)) {
        std::smatch m;
        if (!std::regex_match(line, m, line_re)) continue;
        const std::string value = m[1].str();
        if (value != "0" && value != "1" && value != "2") {
            throw ParseError(std::string(metric_name(metric)) + " value \"" + value + "\" is not 0, 1 or 2");
        }
        const int v = value[0] - '0';
        if (found && *found != v) {
            throw ParseError("conflicting " + std::string(metric_name(metric)) + " lines (" + std::to_string(*found) +
                             " and " + std::to_string(v) + ")");
        }
        found = v;
    }
    if (!found) throw ParseError("response has no \"" + std::string(metric_name(metric)) + ": X\" line");
    return MetricScore(*found);
}

}  // namespace genius::judge
