#include "kgx/metrics.hpp"

#include <charconv>
#include <cmath>

#include "kgx/error.hpp"

namespace kgx {

std::string Metric::name() const {
    switch (kind) {
        case MetricKind::Hits: return "hits@" + std::to_string(k);
        case MetricKind::MRR: return "mrr";
        case MetricKind::MR: return "mr";
    }
    return "?";
}

double Metric::per_example(double rank) const {
    switch (kind) {
        case MetricKind::Hits: return rank <= static_cast<double>(k) ? 1.0 : 0.0;
        case MetricKind::MRR: return 1.0 / rank;
        case MetricKind::MR: return rank;
    }
    return 0.0;
}

Metric parse_metric(std::string_view name) {
    if (name == "mrr") return Metric::mrr();
    if (name == "mr") return Metric::mr();
    if (name.starts_with("hits@")) {
        auto digits = name.substr(5);
        int k = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
        if (ec == std::errc() && ptr == digits.data() + digits.size() && k >= 1) return Metric::hits(k);
    }
    throw Error(ErrorCode::Config, "unknown metric '" + std::string(name) + "' (expected hits@K, mrr or mr)");
}

std::vector<Metric> parse_metric_list(std::string_view comma_separated) {
    std::vector<Metric> out;
    std::size_t start = 0;
    while (start <= comma_separated.size()) {
        auto end = comma_separated.find(',', start);
        if (end == std::string_view::npos) end = comma_separated.size();
        auto item = comma_separated.substr(start, end - start);
        if (!item.empty()) out.push_back(parse_metric(item));
        start = end + 1;
    }
    if (out.empty()) throw Error(ErrorCode::Config, "empty metric list");
    return out;
}

std::vector<Metric> default_metrics() {
    return {Metric::hits(1), Metric::hits(3), Metric::hits(10), Metric::mrr(), Metric::mr()};
}

double aggregate(const Metric& metric, std::span<const double> ranks) {
    if (ranks.empty()) throw Error(ErrorCode::Domain, "aggregate over an empty rank list");
    double sum = 0.0;
    for (double r : ranks) {
        if (!(r >= 1.0)) throw Error(ErrorCode::Domain, "rank below 1");
        sum += metric.per_example(r);
    }
    return sum / static_cast<double>(ranks.size());
}

const char* tie_strategy_name(TieStrategy t) {
    switch (t) {
        case TieStrategy::Optimistic: return "optimistic";
        case TieStrategy::Pessimistic: return "pessimistic";
        case TieStrategy::Realistic: return "realistic";
    }
    return "?";
}

std::optional<TieStrategy> parse_tie_strategy(std::string_view s) {
    if (s == "optimistic") return TieStrategy::Optimistic;
    if (s == "pessimistic") return TieStrategy::Pessimistic;
    if (s == "realistic") return TieStrategy::Realistic;
    return std::nullopt;
}

double rank_from_counts(std::size_t strictly_greater, std::size_t ties_excluding_gold, TieStrategy tie) {
    const double optimistic = 1.0 + static_cast<double>(strictly_greater);
    const double pessimistic = optimistic + static_cast<double>(ties_excluding_gold);
    switch (tie) {
        case TieStrategy::Optimistic: return optimistic;
        case TieStrategy::Pessimistic: return pessimistic;
        case TieStrategy::Realistic: return 0.5 * (optimistic + pessimistic);
    }
    return optimistic;
}

namespace {

double rank_excluding(std::string_view gold, std::span<const ScoredCandidate> candidates,
                      const std::unordered_set<std::string>* removed, TieStrategy tie) {
    const ScoredCandidate* gold_entry = nullptr;
    for (const auto& c : candidates) {
        if (c.entity == gold) {
            gold_entry = &c;
            break;
        }
    }
    if (gold_entry == nullptr) throw Error(ErrorCode::NotFound, "gold entity '" + std::string(gold) + "' missing from candidates");
    std::size_t greater = 0;
    std::size_t ties = 0;
    for (const auto& c : candidates) {
        if (&c == gold_entry) continue;
        if (removed != nullptr && removed->contains(c.entity)) continue;
        if (c.score > gold_entry->score) {
            ++greater;
        } else if (c.score == gold_entry->score) {
            ++ties;
        }
    }
    return rank_from_counts(greater, ties, tie);
}

}  // namespace

double rank_from_scores(std::string_view gold, std::span<const ScoredCandidate> candidates, TieStrategy tie) {
    return rank_excluding(gold, candidates, nullptr, tie);
}

double filtered_rank(std::string_view gold, std::span<const ScoredCandidate> candidates,
                     const std::unordered_set<std::string>& known_positives, TieStrategy tie) {
    return rank_excluding(gold, candidates, &known_positives, tie);
}

double effective_rank(const ExampleRecord& r, TieStrategy tie) {
    if (r.gold_rank) return *r.gold_rank;
    if (r.top_k) return rank_from_scores(r.gold_entity(), *r.top_k, tie);
    throw Error(ErrorCode::Validation, "record '" + r.id + "' has neither gold_rank nor top_k");
}

}  // namespace kgx
