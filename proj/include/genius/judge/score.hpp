/// @file score.hpp
/// @brief The three judged metrics, the 0/1/2 score type and the response parser.

#pragma once

#include <array>
#include <string>
#include <string_view>

namespace genius::judge {

enum class Metric { RuleCompliance, VisualConsistency, AestheticQuality };

inline constexpr std::array<Metric, 3> kMetrics{Metric::RuleCompliance, Metric::VisualConsistency,
                                                Metric::AestheticQuality};

/// "Rule Compliance", "Visual Consistency", "Aesthetic Quality"
std::string_view metric_name(Metric m);
/// "rc", "vc", "aq"
std::string_view metric_key(Metric m);
/// Accepts the key or the display name. ContractError otherwise.
Metric parse_metric(std::string_view text);

/// 0 fail, 1 partial, 2 perfect.
class MetricScore {
public:
    /// ContractError unless value is 0, 1 or 2.
    explicit MetricScore(int value);

    int value() const { return value_; }
    auto operator<=>(const MetricScore&) const = default;

private:
    int value_;
};

/// Reads the "<Metric Name>: X" line out of a judge response. Lines are
/// matched after trimming; X must be exactly 0, 1 or 2. Throws ParseError if
/// no such line exists, a matching line carries another value, or two lines
/// disagree.
MetricScore parse_score(std::string_view raw, Metric metric);

}  // namespace genius::judge
