#include "kgx/triples.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "kgx/error.hpp"

namespace kgx {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::Parse: return "parse_error";
        case ErrorCode::Validation: return "validation_error";
        case ErrorCode::Domain: return "domain_error";
        case ErrorCode::Config: return "configuration_error";
        case ErrorCode::NotFound: return "not_found";
        case ErrorCode::Comparability: return "comparability_error";
        case ErrorCode::Format: return "format_error";
        case ErrorCode::Training: return "training_error";
        case ErrorCode::Storage: return "storage_error";
        case ErrorCode::InsufficientViolations: return "insufficient_violations";
        case ErrorCode::Lookup: return "lookup_error";
    }
    return "error";
}

std::uint32_t LabelTable::intern(std::string_view label) {
    auto it = ids_.find(std::string(label));
    if (it != ids_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(labels_.size());
    labels_.emplace_back(label);
    ids_.emplace(labels_.back(), id);
    return id;
}

std::optional<std::uint32_t> LabelTable::find(std::string_view label) const {
    auto it = ids_.find(std::string(label));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

const std::string& LabelTable::label(std::uint32_t id) const {
    if (id >= labels_.size()) {
        throw Error(ErrorCode::Lookup, "id " + std::to_string(id) + " out of range");
    }
    return labels_[id];
}

const char* split_name(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        case Split::Test: return "test";
    }
    return "?";
}

LoadResult load_tsv(std::istream& in, Vocabulary& vocab, Split split) {
    LoadResult result;
    result.set.split = split;
    TripleIndex seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto first = line.find('\t');
        const auto second = first == std::string::npos ? first : line.find('\t', first + 1);
        if (second == std::string::npos || line.find('\t', second + 1) != std::string::npos) {
            throw ParseError(line_no, "expected exactly 3 tab-separated fields");
        }
        std::string_view view(line);
        auto head = view.substr(0, first);
        auto rel = view.substr(first + 1, second - first - 1);
        auto tail = view.substr(second + 1);
        if (head.empty() || rel.empty() || tail.empty()) {
            throw ParseError(line_no, "empty field");
        }
        Triple t{vocab.entities.intern(head), vocab.relations.intern(rel), vocab.entities.intern(tail)};
        if (!seen.insert(t).second) {
            result.warnings.push_back("line " + std::to_string(line_no) + ": duplicate triple dropped");
            continue;
        }
        result.set.triples.push_back(t);
    }
    return result;
}

LoadResult load_tsv_file(const std::string& path, Vocabulary& vocab, Split split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
    return load_tsv(in, vocab, split);
}

void write_tsv(std::ostream& out, const TripleSet& set, const Vocabulary& vocab) {
    for (const auto& t : set.triples) {
        out << vocab.entities.label(t.head) << '\t' << vocab.relations.label(t.relation) << '\t'
            << vocab.entities.label(t.tail) << '\n';
    }
}

GraphStats compute_stats(const TripleSet& train, const Vocabulary& vocab) {
    if (train.empty()) throw Error(ErrorCode::Domain, "compute_stats: empty training set");
    GraphStats stats;
    stats.entity_frequency.assign(vocab.entities.size(), 0);
    stats.relation_frequency.assign(vocab.relations.size(), 0);
    stats.per_relation.assign(vocab.relations.size(), {});
    std::vector<std::set<EntityId>> heads(vocab.relations.size());
    std::vector<std::set<EntityId>> tails(vocab.relations.size());
    for (const auto& t : train.triples) {
        ++stats.entity_frequency.at(t.head);
        ++stats.entity_frequency.at(t.tail);
        ++stats.relation_frequency.at(t.relation);
        heads[t.relation].insert(t.head);
        tails[t.relation].insert(t.tail);
    }
    for (std::size_t r = 0; r < stats.per_relation.size(); ++r) {
        stats.per_relation[r] = {heads[r].size(), tails[r].size(), stats.relation_frequency[r]};
    }
    stats.triple_count = train.size();
    return stats;
}

const char* cardinality_label(Cardinality c) {
    switch (c) {
        case Cardinality::OneToOne: return "1-1";
        case Cardinality::OneToMany: return "1-M";
        case Cardinality::ManyToOne: return "M-1";
        case Cardinality::ManyToMany: return "M-M";
    }
    return "?";
}

Cardinality classify_relation_cardinality(const GraphStats& stats, RelationId relation, double threshold) {
    if (relation >= stats.per_relation.size() || stats.per_relation[relation].triple_count == 0) {
        throw Error(ErrorCode::Lookup, "relation " + std::to_string(relation) + " not present in stats");
    }
    const auto& rs = stats.per_relation[relation];
    const double tails_per_head = static_cast<double>(rs.triple_count) / static_cast<double>(rs.distinct_heads);
    const double heads_per_tail = static_cast<double>(rs.triple_count) / static_cast<double>(rs.distinct_tails);
    const bool many_tails = tails_per_head >= threshold;
    const bool many_heads = heads_per_tail >= threshold;
    if (many_heads) return many_tails ? Cardinality::ManyToMany : Cardinality::ManyToOne;
    return many_tails ? Cardinality::OneToMany : Cardinality::OneToOne;
}

TripleIndex index_triples(std::initializer_list<const TripleSet*> sets) {
    TripleIndex index;
    for (const auto* set : sets) {
        if (set == nullptr) continue;
        index.insert(set->triples.begin(), set->triples.end());
    }
    return index;
}

}  // namespace kgx
