#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kgx {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;

    friend bool operator==(const Triple&, const Triple&) = default;
    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const noexcept {
        std::uint64_t x = (static_cast<std::uint64_t>(t.head) << 32) ^ t.tail;
        x ^= static_cast<std::uint64_t>(t.relation) * 0x9e3779b97f4a7c15ULL;
        x ^= x >> 29;
        x *= 0xbf58476d1ce4e5b9ULL;
        return static_cast<std::size_t>(x ^ (x >> 32));
    }
};

using TripleIndex = std::unordered_set<Triple, TripleHash>;

// Bidirectional label <-> dense id table. Ids are assigned in first-seen
// order so ingestion is deterministic.
class LabelTable {
public:
    std::uint32_t intern(std::string_view label);
    std::optional<std::uint32_t> find(std::string_view label) const;
    const std::string& label(std::uint32_t id) const;
    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    friend bool operator==(const LabelTable& a, const LabelTable& b) { return a.labels_ == b.labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, std::uint32_t> ids_;
};

struct Vocabulary {
    LabelTable entities;
    LabelTable relations;

    friend bool operator==(const Vocabulary&, const Vocabulary&) = default;
};

enum class Split { Train, Valid, Test };

const char* split_name(Split split);

struct TripleSet {
    Split split = Split::Train;
    std::vector<Triple> triples;

    std::size_t size() const noexcept { return triples.size(); }
    bool empty() const noexcept { return triples.empty(); }
};

struct LoadResult {
    TripleSet set;
    std::vector<std::string> warnings;  // one entry per dropped duplicate
};

// Reads head<TAB>relation<TAB>tail lines. Unseen labels are appended to
// `vocab`; blank lines are skipped. Throws ParseError on malformed lines.
LoadResult load_tsv(std::istream& in, Vocabulary& vocab, Split split = Split::Train);
LoadResult load_tsv_file(const std::string& path, Vocabulary& vocab, Split split = Split::Train);

void write_tsv(std::ostream& out, const TripleSet& set, const Vocabulary& vocab);

struct RelationStats {
    std::uint64_t distinct_heads = 0;
    std::uint64_t distinct_tails = 0;
    std::uint64_t triple_count = 0;
};

// Training-set statistics. Vectors are indexed by id and sized to the
// vocabulary at the time of computation.
struct GraphStats {
    std::vector<std::uint64_t> entity_frequency;
    std::vector<std::uint64_t> relation_frequency;
    std::vector<RelationStats> per_relation;
    std::uint64_t triple_count = 0;
};

GraphStats compute_stats(const TripleSet& train, const Vocabulary& vocab);

enum class Cardinality { OneToOne, OneToMany, ManyToOne, ManyToMany };

const char* cardinality_label(Cardinality c);

inline constexpr double kCardinalityThreshold = 1.5;

// Tail side is "many" when triples per distinct head reach the threshold;
// head side likewise with triples per distinct tail.
Cardinality classify_relation_cardinality(const GraphStats& stats, RelationId relation,
                                          double threshold = kCardinalityThreshold);

TripleIndex index_triples(std::initializer_list<const TripleSet*> sets);

}  // namespace kgx
