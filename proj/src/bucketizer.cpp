#include "kgx/bucketizer.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "kgx/error.hpp"

namespace kgx {
namespace {

constexpr std::array kBuiltins{
    BuiltinKind::HeadLength,        BuiltinKind::TailLength,         BuiltinKind::HeadFrequency,
    BuiltinKind::TailFrequency,     BuiltinKind::RelationFrequency,  BuiltinKind::RelationSymmetry,
    BuiltinKind::EntityTypeLevel,   BuiltinKind::RelationLabel,      BuiltinKind::RelationCardinality,
    BuiltinKind::TailTypeLevel1,    BuiltinKind::TailTypeLevel2,
};

std::string format_edge(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::string interval_label(double lo, double hi, bool closed) {
    return "[" + format_edge(lo) + "," + format_edge(hi) + (closed ? "]" : ")");
}

bool is_sentinel(const std::string& label) { return label == kUnknownBucket || label == kOtherBucket; }

// Sorted labels with UNKNOWN/OTHER last; numeric labels compare numerically.
std::vector<std::string> ordered_labels(const std::unordered_map<std::string, std::string>& assignment,
                                        bool numeric) {
    std::vector<std::string> labels;
    {
        std::unordered_set<std::string> seen;
        for (const auto& [_, label] : assignment) {
            if (seen.insert(label).second) labels.push_back(label);
        }
    }
    std::sort(labels.begin(), labels.end(), [numeric](const std::string& a, const std::string& b) {
        const bool sa = is_sentinel(a);
        const bool sb = is_sentinel(b);
        if (sa != sb) return sb;
        if (numeric && !sa) {
            const double da = std::stod(a);
            const double db = std::stod(b);
            if (da != db) return da < db;
        }
        return a < b;
    });
    return labels;
}

// Fold labels beyond the cap into OTHER: keep the cap-1 most frequent.
void collapse_to_cap(std::unordered_map<std::string, std::string>& assignment, int cap) {
    if (cap < 1) return;
    std::map<std::string, std::size_t> counts;
    for (const auto& [_, label] : assignment) ++counts[label];
    if (counts.size() <= static_cast<std::size_t>(cap)) return;
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::unordered_set<std::string> keep;
    for (std::size_t i = 0; i + 1 < static_cast<std::size_t>(cap) && i < ranked.size(); ++i) keep.insert(ranked[i].first);
    for (auto& [_, label] : assignment) {
        if (!keep.contains(label)) label = kOtherBucket;
    }
}

// Interval bucketing over values keyed by record; records with no value go
// to UNKNOWN.
Bucketing bucket_continuous_values(const SystemOutput& records, const std::string& feature,
                                   const std::vector<std::optional<double>>& values, int num_buckets) {
    Bucketing out;
    out.spec.feature = feature;
    out.assignment.feature = feature;
    std::vector<double> known;
    for (const auto& v : values) {
        if (v) known.push_back(*v);
    }
    bool any_unknown = known.size() != values.size();
    if (!known.empty()) {
        BucketSpec intervals = bucketize_continuous(known, num_buckets);
        out.spec.labels = intervals.labels;
        out.spec.boundaries = intervals.boundaries;
    }
    for (std::size_t i = 0; i < records.records.size(); ++i) {
        const auto& id = records.records[i].id;
        if (values[i]) {
            out.assignment.labels.emplace(id, out.spec.labels[interval_index(out.spec, *values[i])]);
        } else {
            out.assignment.labels.emplace(id, kUnknownBucket);
        }
    }
    if (any_unknown) out.spec.labels.push_back(kUnknownBucket);
    return out;
}

Bucketing bucket_labels(const SystemOutput& records, const std::string& feature,
                        const std::vector<std::string>& labels, int cap, bool numeric) {
    Bucketing out;
    out.spec.feature = feature;
    out.assignment.feature = feature;
    for (std::size_t i = 0; i < records.records.size(); ++i) {
        out.assignment.labels.emplace(records.records[i].id, labels[i]);
    }
    collapse_to_cap(out.assignment.labels, cap);
    out.spec.labels = ordered_labels(out.assignment.labels, numeric);
    return out;
}

void require(bool present, BuiltinKind kind, const char* what) {
    if (!present) {
        throw Error(ErrorCode::Config, std::string("feature '") + builtin_name(kind) + "' requires " + what);
    }
}

}  // namespace

const char* builtin_name(BuiltinKind kind) {
    switch (kind) {
        case BuiltinKind::HeadLength: return "head-length";
        case BuiltinKind::TailLength: return "tail-length";
        case BuiltinKind::HeadFrequency: return "head-frequency";
        case BuiltinKind::TailFrequency: return "tail-frequency";
        case BuiltinKind::RelationFrequency: return "relation-frequency";
        case BuiltinKind::RelationSymmetry: return "relation-symmetry";
        case BuiltinKind::EntityTypeLevel: return "entity-type-level";
        case BuiltinKind::RelationLabel: return "relation-label";
        case BuiltinKind::RelationCardinality: return "relation-cardinality";
        case BuiltinKind::TailTypeLevel1: return "tail-type-level-1";
        case BuiltinKind::TailTypeLevel2: return "tail-type-level-2";
    }
    return "?";
}

std::optional<BuiltinKind> parse_builtin(std::string_view name) {
    for (auto kind : kBuiltins) {
        if (name == builtin_name(kind)) return kind;
    }
    return std::nullopt;
}

std::span<const BuiltinKind> all_builtins() { return kBuiltins; }

TypeMap TypeMap::load(std::istream& in) {
    TypeMap map;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto end = line.find('\t', start);
            fields.push_back(line.substr(start, end == std::string::npos ? std::string::npos : end - start));
            if (end == std::string::npos) break;
            start = end + 1;
        }
        if (fields.size() < 2 || fields[0].empty()) throw ParseError(line_no, "expected entity and at least one type level");
        for (std::size_t i = 1; i < fields.size(); ++i) {
            if (fields[i].empty()) throw ParseError(line_no, "empty type level");
        }
        map.paths[fields[0]] = std::vector<std::string>(fields.begin() + 1, fields.end());
    }
    return map;
}

TypeMap TypeMap::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
    return load(in);
}

std::unordered_set<std::string> load_relation_list(std::istream& in) {
    std::unordered_set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.insert(line);
    }
    return out;
}

std::unordered_set<std::string> load_relation_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
    return load_relation_list(in);
}

std::size_t whitespace_token_count(std::string_view label) {
    std::size_t count = 0;
    bool in_token = false;
    for (char c : label) {
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

BucketSpec bucketize_continuous(std::span<const double> values, int num_buckets) {
    if (num_buckets < 1) throw Error(ErrorCode::Domain, "num_buckets must be >= 1");
    if (values.empty()) throw Error(ErrorCode::Domain, "cannot bucketize an empty value list");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    std::vector<double> edges{sorted.front()};
    for (int i = 1; i < num_buckets; ++i) {
        const double edge = sorted[static_cast<std::size_t>(i) * n / static_cast<std::size_t>(num_buckets)];
        if (edge > edges.back() && edge < sorted.back()) edges.push_back(edge);
    }
    edges.push_back(sorted.back());

    BucketSpec spec;
    if (edges.front() == edges.back()) {
        spec.boundaries = {edges.front(), edges.back()};
        spec.labels = {interval_label(edges.front(), edges.back(), true)};
        return spec;
    }
    spec.boundaries = edges;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        spec.labels.push_back(interval_label(edges[i], edges[i + 1], i + 2 == edges.size()));
    }
    return spec;
}

std::size_t interval_index(const BucketSpec& spec, double value) {
    if (spec.labels.size() <= 1 || spec.boundaries.size() < 2) return 0;
    // Interior edges start a new interval: count edges <= value among them.
    auto first_interior = spec.boundaries.begin() + 1;
    auto last_interior = spec.boundaries.end() - 1;
    const auto idx = static_cast<std::size_t>(std::upper_bound(first_interior, last_interior, value) - first_interior);
    return std::min(idx, spec.labels.size() - 1);
}

Bucketing assign_builtin(const SystemOutput& records, BuiltinKind kind, const BucketResources& res,
                         const BucketOptions& options) {
    const std::string feature = builtin_name(kind);
    const auto& recs = records.records;
    std::vector<std::string> labels(recs.size());

    auto entity_frequency = [&](const std::string& label) -> std::optional<double> {
        auto id = res.vocab->entities.find(label);
        if (!id || *id >= res.stats->entity_frequency.size()) return std::nullopt;
        return static_cast<double>(res.stats->entity_frequency[*id]);
    };

    switch (kind) {
        case BuiltinKind::HeadLength:
        case BuiltinKind::TailLength: {
            for (std::size_t i = 0; i < recs.size(); ++i) {
                const auto& e = kind == BuiltinKind::HeadLength ? recs[i].head : recs[i].tail;
                labels[i] = std::to_string(whitespace_token_count(e));
            }
            return bucket_labels(records, feature, labels, 0, true);
        }
        case BuiltinKind::HeadFrequency:
        case BuiltinKind::TailFrequency:
        case BuiltinKind::RelationFrequency: {
            require(res.vocab && res.stats, kind, "training statistics");
            std::vector<std::optional<double>> values(recs.size());
            for (std::size_t i = 0; i < recs.size(); ++i) {
                if (kind == BuiltinKind::RelationFrequency) {
                    auto id = res.vocab->relations.find(recs[i].relation);
                    if (id && *id < res.stats->relation_frequency.size()) {
                        values[i] = static_cast<double>(res.stats->relation_frequency[*id]);
                    }
                } else {
                    values[i] = entity_frequency(kind == BuiltinKind::HeadFrequency ? recs[i].head : recs[i].tail);
                }
            }
            return bucket_continuous_values(records, feature, values, options.continuous_buckets);
        }
        case BuiltinKind::RelationSymmetry: {
            require(res.symmetric_relations != nullptr, kind, "a symmetric-relations list");
            for (std::size_t i = 0; i < recs.size(); ++i) {
                labels[i] = res.symmetric_relations->contains(recs[i].relation) ? "symmetric" : "asymmetric";
            }
            return bucket_labels(records, feature, labels, 0, false);
        }
        case BuiltinKind::EntityTypeLevel:
        case BuiltinKind::TailTypeLevel1:
        case BuiltinKind::TailTypeLevel2: {
            require(res.types != nullptr, kind, "a type map");
            for (std::size_t i = 0; i < recs.size(); ++i) {
                auto it = res.types->paths.find(recs[i].gold_entity());
                if (it == res.types->paths.end()) {
                    labels[i] = kUnknownBucket;
                } else if (kind == BuiltinKind::EntityTypeLevel) {
                    labels[i] = std::to_string(it->second.size());
                } else {
                    const std::size_t level = kind == BuiltinKind::TailTypeLevel1 ? 0 : 1;
                    labels[i] = level < it->second.size() ? it->second[level] : std::string(kUnknownBucket);
                }
            }
            return bucket_labels(records, feature, labels, 0, kind == BuiltinKind::EntityTypeLevel);
        }
        case BuiltinKind::RelationLabel: {
            for (std::size_t i = 0; i < recs.size(); ++i) labels[i] = recs[i].relation;
            return bucket_labels(records, feature, labels, options.relation_label_cap, false);
        }
        case BuiltinKind::RelationCardinality: {
            require(res.vocab && res.stats, kind, "training statistics");
            for (std::size_t i = 0; i < recs.size(); ++i) {
                auto id = res.vocab->relations.find(recs[i].relation);
                if (id && *id < res.stats->per_relation.size() && res.stats->per_relation[*id].triple_count > 0) {
                    labels[i] = cardinality_label(classify_relation_cardinality(*res.stats, *id));
                } else {
                    labels[i] = kUnknownBucket;
                }
            }
            return bucket_labels(records, feature, labels, 0, false);
        }
    }
    throw Error(ErrorCode::Config, "unhandled built-in feature");
}

Bucketing assign_custom(const SystemOutput& records, const std::string& feature) {
    auto it = records.header.custom_features.find(feature);
    if (it == records.header.custom_features.end()) {
        throw Error(ErrorCode::Config, "unknown feature '" + feature + "'");
    }
    const FeatureDef& def = it->second;
    const auto& recs = records.records;
    if (def.dtype == FeatureType::Continuous) {
        std::vector<std::optional<double>> values(recs.size());
        for (std::size_t i = 0; i < recs.size(); ++i) {
            auto v = recs[i].features.find(feature);
            if (v != recs[i].features.end()) values[i] = std::get<double>(v->second);
        }
        return bucket_continuous_values(records, feature, values, def.num_buckets);
    }
    std::vector<std::string> labels(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        auto v = recs[i].features.find(feature);
        labels[i] = v == recs[i].features.end() ? std::string(kUnknownBucket) : feature_value_text(v->second);
    }
    const int cap = def.dtype == FeatureType::String ? def.num_buckets : 0;
    return bucket_labels(records, feature, labels, cap, def.dtype == FeatureType::Number);
}

Bucketing assign_feature(const SystemOutput& records, const std::string& feature, const BucketResources& resources,
                         const BucketOptions& options) {
    if (auto kind = parse_builtin(feature)) return assign_builtin(records, *kind, resources, options);
    return assign_custom(records, feature);
}

std::map<std::string, std::vector<std::string>> partition(const SystemOutput& records,
                                                          const BucketAssignment& assignment) {
    std::map<std::string, std::vector<std::string>> groups;
    for (const auto& r : records.records) {
        auto it = assignment.labels.find(r.id);
        if (it == assignment.labels.end()) {
            throw Error(ErrorCode::Validation, "record '" + r.id + "' has no bucket for feature '" + assignment.feature + "'");
        }
        groups[it->second].push_back(r.id);
    }
    return groups;
}

}  // namespace kgx
