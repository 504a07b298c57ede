#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgx/kge_model.hpp"
#include "kgx/metrics.hpp"
#include "kgx/system_output.hpp"
#include "kgx/triples.hpp"

namespace kgx {

// Known answers per query, for filtered ranking.
class FilterIndex {
public:
    FilterIndex() = default;
    explicit FilterIndex(std::initializer_list<const TripleSet*> sets);

    void add(const Triple& t);
    void add(const TripleSet& set);

    // Known tails of (h, r, ?) / known heads of (?, r, t); empty if none.
    const std::vector<EntityId>& tails(EntityId h, RelationId r) const;
    const std::vector<EntityId>& heads(RelationId r, EntityId t) const;

    bool contains(const Triple& t) const { return triples_.contains(t); }
    std::size_t size() const { return triples_.size(); }

private:
    static std::uint64_t key(std::uint32_t a, std::uint32_t b) { return (std::uint64_t{a} << 32) | b; }

    TripleIndex triples_;
    std::unordered_map<std::uint64_t, std::vector<EntityId>> tails_;
    std::unordered_map<std::uint64_t, std::vector<EntityId>> heads_;
};

// Rank of the gold entity of `t` for the query on `side`, over all entities.
// With a filter, known answers other than the gold one are skipped.
// `scores` is scratch space.
double rank_of(const KgeModel& m, const Triple& t, QuerySide side, const FilterIndex* filter, TieStrategy tie,
               std::vector<double>& scores);
double rank_of(const KgeModel& m, const Triple& t, QuerySide side, const FilterIndex* filter,
               TieStrategy tie = TieStrategy::Realistic);

enum class EvalDirections { Tail, Head, Both };

const char* eval_directions_name(EvalDirections d);
std::optional<EvalDirections> parse_eval_directions(std::string_view s);

struct EvalOptions {
    EvalDirections directions = EvalDirections::Both;
    TieStrategy tie = TieStrategy::Realistic;
    std::string system_name = "kge";
    std::string dataset_name = "dataset";
    std::size_t top_k = 0;  // 0 = no top_k lists
    unsigned workers = 1;
};

// One record per (test triple, direction), tail before head, ids "{i}-tail" /
// "{i}-head" with i the test-line index. A null filter gives the raw basis.
SystemOutput evaluate_to_system_output(const KgeModel& m, const TripleSet& test, const FilterIndex* filter,
                                       const EvalOptions& options = {});

}  // namespace kgx
