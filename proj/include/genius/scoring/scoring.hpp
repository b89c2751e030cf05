/// @file scoring.hpp
/// @brief Percent normalization, the weighted Overall and grouped reports.

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genius/data/sample.hpp"
#include "genius/judge/judge.hpp"
#include "genius/judge/score.hpp"

namespace genius::scoring {

/// mean(score) / 2 * 100. DomainError on an empty list.
double percent_of_scores(std::span<const judge::MetricScore> scores);
/// Same map for already averaged values on the 0..2 scale.
double percent_of_values(std::span<const double> values);

struct MetricTriple {
    double rc_pct = 0.0;
    std::optional<double> vc_pct;  // absent when the sample has no VC hints
    double aq_pct = 0.0;

    /// ContractError if a present value is outside [0, 100] or not finite.
    void validate() const;
};

struct WeightVector {
    double rc = 6.0;
    double vc = 3.5;
    double aq = 0.5;

    /// ContractError on a negative or non-finite weight, or all zero.
    void validate() const;
};

/// How a sample without VC hints enters the Overall.
enum class MissingVc {
    Renormalize,  // weights renormalized over the metrics present
    Zero,         // VC counted as 0 with its full weight
};
/// How samples are pooled into a group's Overall.
enum class OverallMode {
    SampleWeighted,  // mean over samples
    TaskMean,        // mean over tasks of the per-task sample mean
};
/// "renormalize" / "zero"; ContractError otherwise.
MissingVc parse_missing_vc(std::string_view name);
std::string_view to_string(MissingVc m);
/// "sample" / "task-mean"; ContractError otherwise.
OverallMode parse_overall_mode(std::string_view name);
std::string_view to_string(OverallMode m);

struct ScoringPolicy {
    WeightVector weights;
    MissingVc missing_vc = MissingVc::Renormalize;
    OverallMode overall = OverallMode::SampleWeighted;

    ScoringPolicy() = default;
    ScoringPolicy(WeightVector w) : weights(w) {}  // NOLINT: implicit on purpose
};

/// sum(w_m * m) / sum(w_m) over the metrics present (or with VC = 0 under
/// MissingVc::Zero). DomainError if the counted metrics all have zero weight.
double sample_overall(const MetricTriple& t, const WeightVector& w, MissingVc missing = MissingVc::Renormalize);
/// Mean of sample_overall over the list. DomainError on an empty list.
double weighted_overall(std::span<const MetricTriple> triples, const WeightVector& w,
                        MissingVc missing = MissingVc::Renormalize);

/// One (model, sample) after averaging its successful runs.
struct SampleScore {
    std::string model;
    std::string sample_id;
    data::Task task = data::Task::ImplicitPattern;
    int runs = 0;          // successful runs averaged
    double rc = 0.0;       // 0..2
    std::optional<double> vc;  // mean over hints, then runs
    double aq = 0.0;
    MetricTriple triple() const;
};

/// Groups verdicts by (model, sample id) and averages the successful runs.
/// Samples with no successful run are skipped. ContractError if runs of one
/// sample disagree on task or VC hint count.
std::vector<SampleScore> per_sample_scores(std::span<const judge::SampleVerdict> verdicts);

enum class GroupKey { Task, Dimension, Model };
/// "task", "dimension", "model"; ContractError otherwise.
GroupKey parse_group_key(std::string_view name);
std::string_view to_string(GroupKey k);

struct GroupRow {
    std::string key;
    int samples = 0;
    double rc_pct = 0.0;
    std::optional<double> vc_pct;  // mean over the group's samples that have VC
    double aq_pct = 0.0;
    double overall = 0.0;          // per the policy's OverallMode
};

struct Aggregate {
    GroupKey key = GroupKey::Task;
    std::vector<GroupRow> rows;  // task and dimension in taxonomy order, models by name
    GroupRow total;
};

/// ContractError when no verdict has a successful run.
Aggregate aggregate_by(std::span<const judge::SampleVerdict> verdicts, GroupKey key, const ScoringPolicy& policy = {});

/// Table 1 layout: one row per model, Overall then RC/VC/AQ per task.
struct ModelRow {
    std::string model;
    double overall = 0.0;
    std::map<data::Task, GroupRow> tasks;  // only tasks with samples
};
std::vector<ModelRow> leaderboard(std::span<const judge::SampleVerdict> verdicts, const ScoringPolicy& policy = {});

void write_aggregate_text(std::ostream& out, const Aggregate& a);
void write_aggregate_csv(std::ostream& out, const Aggregate& a);
void write_leaderboard_text(std::ostream& out, const std::vector<ModelRow>& rows);
void write_leaderboard_csv(std::ostream& out, const std::vector<ModelRow>& rows);

}  // namespace genius::scoring
