/// @file steering.hpp
/// @brief Bias injection into attention logits, gated by layer/step/head, and
/// attention-trace collection and export.

#pragma once

#include <compare>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "genius/numkit/numkit.hpp"

namespace genius::steer {

using numkit::TokenMatrix;
using numkit::Vector;

/// Index set that is either "every index" or an explicit (possibly empty) set.
class Selection {
public:
    static Selection all() { return Selection(true, {}); }
    static Selection none() { return Selection(false, {}); }
    static Selection only(std::set<int> indices);
    /// "all", "none", "" (none) or a comma-separated list of non-negative integers.
    /// Throws ContractError on anything else.
    static Selection parse(std::string_view spec);

    bool contains(int index) const { return all_ || indices_.contains(index); }
    bool is_all() const { return all_; }
    bool empty() const { return !all_ && indices_.empty(); }
    const std::set<int>& indices() const { return indices_; }
    std::string to_string() const;

    bool operator==(const Selection&) const = default;

private:
    Selection(bool all, std::set<int> indices) : all_(all), indices_(std::move(indices)) {}
    bool all_;
    std::set<int> indices_;
};

struct SteeringConfig {
    double lambda = 2.0;
    double epsilon = 1e-6;
    Selection layers = Selection::all();
    Selection steps = Selection::all();
    Selection heads = Selection::all();

    /// Throws ContractError unless lambda >= 0, epsilon > 0 and both are finite.
    void validate() const;
    bool applies(int layer, int step, int head) const {
        return layers.contains(layer) && steps.contains(step) && heads.contains(head);
    }
};

/// A_hat(i, j) = A(i, j) + lambda * fmap(j). lambda == 0 returns an exact copy.
/// Throws ContractError when fmap length differs from the key count or lambda < 0.
TokenMatrix inject_bias(const TokenMatrix& logits, const Vector& fmap, double lambda);

/// Context bias followed by zeros for the remaining (non-context) keys.
Vector pad_bias(const Vector& context_bias, Eigen::Index total_keys);

struct TraceKey {
    int layer = 0;
    int head = 0;
    int step = 0;
    auto operator<=>(const TraceKey&) const = default;
};

/// Post-softmax weights (queries x keys) per (layer, head, step).
class AttentionTrace {
public:
    /// Throws ContractError on a duplicate key, a shape change, or rows that
    /// do not sum to 1 within 1e-9.
    void add(const TraceKey& key, TokenMatrix weights);
    bool empty() const { return fragments_.empty(); }
    const std::map<TraceKey, TokenMatrix>& fragments() const { return fragments_; }

private:
    std::map<TraceKey, TokenMatrix> fragments_;
};

struct SteeredAttention {
    TokenMatrix output;
    TokenMatrix weights;
    bool steered = false;
};

/// softmax((Q K^T + lambda F) / sqrt(d)) V when (layer, step, head) is selected,
/// softmax(Q K^T / sqrt(d)) V otherwise. d is the query/key width.
SteeredAttention steered_attention(const TokenMatrix& queries, const TokenMatrix& keys,
                                   const TokenMatrix& values, const Vector& fmap,
                                   const SteeringConfig& config, int layer, int step, int head);

/// Mean of the selected trace fragments.
struct Heatmap {
    TokenMatrix weights;  ///< queries x keys, entries in [0, 1]
    int fragments = 0;

    /// Per-key weight averaged over queries.
    Vector key_profile() const;
};

/// Averages every fragment whose layer, head and step are selected.
/// Throws ContractError when the trace is empty or nothing is selected.
Heatmap reduce_trace(const AttentionTrace& trace, const Selection& layers = Selection::all(),
                     const Selection& heads = Selection::all(), const Selection& steps = Selection::all());

/// Comma-separated table, one row per query token, six decimals.
void write_heatmap_csv(std::ostream& out, const Heatmap& map);
/// Plain (P2) portable graymap, value round(255 * w).
void write_heatmap_pgm(std::ostream& out, const Heatmap& map);

/// Writes `<stem>.csv` and `<stem>.pgm`.
void export_trace(const AttentionTrace& trace, const std::filesystem::path& stem,
                  const Selection& layers = Selection::all(), const Selection& heads = Selection::all(),
                  const Selection& steps = Selection::all());

}  // namespace genius::steer
