#include "kgx/kge_eval.hpp"

#include <algorithm>
#include <numeric>

#include "kgx/error.hpp"
#include "kgx/parallel.hpp"

namespace kgx {

namespace {
const std::vector<EntityId> kNone;
}

FilterIndex::FilterIndex(std::initializer_list<const TripleSet*> sets) {
    for (const auto* s : sets) {
        if (s != nullptr) add(*s);
    }
}

void FilterIndex::add(const Triple& t) {
    if (!triples_.insert(t).second) return;
    tails_[key(t.head, t.relation)].push_back(t.tail);
    heads_[key(t.relation, t.tail)].push_back(t.head);
}

void FilterIndex::add(const TripleSet& set) {
    for (const auto& t : set.triples) add(t);
}

const std::vector<EntityId>& FilterIndex::tails(EntityId h, RelationId r) const {
    auto it = tails_.find(key(h, r));
    return it == tails_.end() ? kNone : it->second;
}

const std::vector<EntityId>& FilterIndex::heads(RelationId r, EntityId t) const {
    auto it = heads_.find(key(r, t));
    return it == heads_.end() ? kNone : it->second;
}

double rank_of(const KgeModel& m, const Triple& t, QuerySide side, const FilterIndex* filter, TieStrategy tie,
               std::vector<double>& scores) {
    scores.resize(m.num_entities());
    const EntityId anchor = side == QuerySide::Tail ? t.head : t.tail;
    const EntityId gold = side == QuerySide::Tail ? t.tail : t.head;
    score_all(m, anchor, t.relation, side, scores);
    const double g = scores[gold];
    std::size_t greater = 0;
    std::size_t ties = 0;
    for (std::size_t e = 0; e < scores.size(); ++e) {
        if (scores[e] > g) {
            ++greater;
        } else if (scores[e] == g && e != gold) {
            ++ties;
        }
    }
    if (filter != nullptr) {
        const auto& known = side == QuerySide::Tail ? filter->tails(t.head, t.relation) : filter->heads(t.relation, t.tail);
        for (EntityId e : known) {
            if (e == gold) continue;
            if (scores[e] > g) {
                --greater;
            } else if (scores[e] == g) {
                --ties;
            }
        }
    }
    return rank_from_counts(greater, ties, tie);
}

double rank_of(const KgeModel& m, const Triple& t, QuerySide side, const FilterIndex* filter, TieStrategy tie) {
    std::vector<double> scores;
    return rank_of(m, t, side, filter, tie, scores);
}

const char* eval_directions_name(EvalDirections d) {
    switch (d) {
        case EvalDirections::Tail: return "tail";
        case EvalDirections::Head: return "head";
        case EvalDirections::Both: return "both";
    }
    return "?";
}

std::optional<EvalDirections> parse_eval_directions(std::string_view s) {
    if (s == "tail") return EvalDirections::Tail;
    if (s == "head") return EvalDirections::Head;
    if (s == "both") return EvalDirections::Both;
    return std::nullopt;
}

namespace {

std::vector<ScoredCandidate> top_candidates(const KgeModel& m, const std::vector<double>& scores, EntityId gold,
                                            const std::vector<EntityId>& known, std::size_t k) {
    std::vector<char> skip(scores.size(), 0);
    for (EntityId e : known) {
        if (e != gold) skip[e] = 1;
    }
    std::vector<EntityId> ids;
    ids.reserve(scores.size());
    for (std::size_t e = 0; e < scores.size(); ++e) {
        if (!skip[e]) ids.push_back(static_cast<EntityId>(e));
    }
    const std::size_t take = std::min(k, ids.size());
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end(),
                      [&](EntityId a, EntityId b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; });
    std::vector<ScoredCandidate> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back({m.vocab->entities.label(ids[i]), scores[ids[i]]});
    return out;
}

}  // namespace

SystemOutput evaluate_to_system_output(const KgeModel& m, const TripleSet& test, const FilterIndex* filter,
                                       const EvalOptions& options) {
    std::vector<QuerySide> sides;
    if (options.directions != EvalDirections::Head) sides.push_back(QuerySide::Tail);
    if (options.directions != EvalDirections::Tail) sides.push_back(QuerySide::Head);

    SystemOutput out;
    out.header.system_name = options.system_name;
    out.header.dataset_name = options.dataset_name;
    out.header.rank_basis = filter != nullptr ? RankBasis::Filtered : RankBasis::Raw;
    out.records.resize(test.triples.size() * sides.size());

    const auto& ent = m.vocab->entities;
    const auto& rel = m.vocab->relations;
    parallel_for(test.triples.size(), options.workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> scores;
        for (std::size_t i = begin; i < end; ++i) {
            const Triple& t = test.triples[i];
            for (std::size_t s = 0; s < sides.size(); ++s) {
                const QuerySide side = sides[s];
                ExampleRecord& r = out.records[i * sides.size() + s];
                r.id = std::to_string(i) + (side == QuerySide::Tail ? "-tail" : "-head");
                r.head = ent.label(t.head);
                r.relation = rel.label(t.relation);
                r.tail = ent.label(t.tail);
                r.direction = side == QuerySide::Tail ? Direction::Tail : Direction::Head;
                r.gold_rank = rank_of(m, t, side, filter, options.tie, scores);
                if (options.top_k > 0) {
                    static const std::vector<EntityId> none;
                    const auto& known = filter == nullptr ? none
                                        : side == QuerySide::Tail ? filter->tails(t.head, t.relation)
                                                                  : filter->heads(t.relation, t.tail);
                    r.top_k = top_candidates(m, scores, side == QuerySide::Tail ? t.tail : t.head, known, options.top_k);
                }
            }
        }
    });
    return out;
}

}  // namespace kgx
