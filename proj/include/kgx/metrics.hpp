#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "kgx/system_output.hpp"

namespace kgx {

enum class MetricKind { Hits, MRR, MR };

struct Metric {
    MetricKind kind = MetricKind::MRR;
    int k = 0;  // only meaningful for Hits

    static Metric hits(int k) { return {MetricKind::Hits, k}; }
    static Metric mrr() { return {MetricKind::MRR, 0}; }
    static Metric mr() { return {MetricKind::MR, 0}; }

    bool higher_is_better() const noexcept { return kind != MetricKind::MR; }

    // "hits@K", "mrr" or "mr"
    std::string name() const;

    // Value contributed by one example; aggregate() is the mean of these.
    double per_example(double rank) const;

    friend bool operator==(const Metric&, const Metric&) = default;
};

// Throws Error(Config) for anything other than hits@K (K >= 1), mrr, mr.
Metric parse_metric(std::string_view name);
std::vector<Metric> parse_metric_list(std::string_view comma_separated);

std::vector<Metric> default_metrics();

// Mean of per-example values. Throws Error(Domain) on empty input or a rank
// below 1.
double aggregate(const Metric& metric, std::span<const double> ranks);

enum class TieStrategy { Optimistic, Pessimistic, Realistic };

const char* tie_strategy_name(TieStrategy t);
std::optional<TieStrategy> parse_tie_strategy(std::string_view s);

// optimistic = 1 + #{score > gold}; pessimistic = #{score >= gold} (gold
// included); realistic = their mean. Throws Error(NotFound) if the gold
// entity is not among the candidates.
double rank_from_scores(std::string_view gold, std::span<const ScoredCandidate> candidates,
                        TieStrategy tie = TieStrategy::Realistic);

// rank_from_scores after removing every candidate in `known_positives`
// except the gold entity itself.
double filtered_rank(std::string_view gold, std::span<const ScoredCandidate> candidates,
                     const std::unordered_set<std::string>& known_positives,
                     TieStrategy tie = TieStrategy::Realistic);

// Rank counts for a gold score against a set of competitor scores, used by
// the embedding evaluator where scores are indexed by entity id.
double rank_from_counts(std::size_t strictly_greater, std::size_t ties_excluding_gold, TieStrategy tie);

// Precomputed gold_rank when present, otherwise derived from top_k.
double effective_rank(const ExampleRecord& r, TieStrategy tie = TieStrategy::Realistic);

}  // namespace kgx
