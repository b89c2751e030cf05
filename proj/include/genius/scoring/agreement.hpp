/// @file agreement.hpp
/// @brief Judge versus human agreement: Pearson r and MAE.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "genius/judge/judge.hpp"
#include "genius/judge/score.hpp"

namespace genius::scoring {

/// Sample Pearson correlation. ContractError on length mismatch, fewer than 2
/// points or non-finite input; DomainError when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);
/// Mean absolute difference. ContractError on length mismatch, empty or non-finite input.
double mae(std::span<const double> x, std::span<const double> y);

struct HumanRating {
    std::string sample_id;
    judge::Metric metric = judge::Metric::RuleCompliance;
    judge::MetricScore score{0};
};

/// CSV with header `sample_id,metric,score`. metric is rc/vc/aq or the
/// display name; score must be 0, 1 or 2 (ParseError otherwise).
std::vector<HumanRating> read_human_ratings(std::istream& in);
std::vector<HumanRating> read_human_ratings(const std::filesystem::path& path);

struct AgreementRow {
    std::string metric;  // "rc", "vc", "aq" or "overall"
    int pairs = 0;
    std::optional<double> pearson;  // absent when undefined (zero variance or < 2 pairs)
    double mae = 0.0;
};

/// Pairs the judge's per-sample run mean (VC: mean over hints too) with the
/// mean human rating for the same sample and metric. Rows appear only for
/// metrics with at least one pair; "overall" pools every pair. ContractError
/// if the verdicts mix models or the two sides share no sample id.
std::vector<AgreementRow> agreement(std::span<const judge::SampleVerdict> verdicts,
                                    std::span<const HumanRating> ratings);

void write_agreement_text(std::ostream& out, const std::vector<AgreementRow>& rows);

}  // namespace genius::scoring
