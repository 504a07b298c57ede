#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgx/system_output.hpp"
#include "kgx/triples.hpp"

namespace kgx {

inline constexpr const char* kUnknownBucket = "UNKNOWN";
inline constexpr const char* kOtherBucket = "OTHER";

enum class BuiltinKind {
    HeadLength,
    TailLength,
    HeadFrequency,
    TailFrequency,
    RelationFrequency,
    RelationSymmetry,
    EntityTypeLevel,
    RelationLabel,
    RelationCardinality,
    TailTypeLevel1,
    TailTypeLevel2,
};

const char* builtin_name(BuiltinKind kind);
std::optional<BuiltinKind> parse_builtin(std::string_view name);
std::span<const BuiltinKind> all_builtins();

// entity -> type path ordered general -> specific.
struct TypeMap {
    std::unordered_map<std::string, std::vector<std::string>> paths;

    // TSV `entity<TAB>level-1<TAB>level-2...`; throws ParseError.
    static TypeMap load(std::istream& in);
    static TypeMap load_file(const std::string& path);
};

// One relation label per line.
std::unordered_set<std::string> load_relation_list(std::istream& in);
std::unordered_set<std::string> load_relation_list_file(const std::string& path);

// Lookup tables for the built-in features. Any member may be absent; a
// feature that needs a missing resource fails with Error(Config).
struct BucketResources {
    std::shared_ptr<const Vocabulary> vocab;
    std::shared_ptr<const GraphStats> stats;
    std::shared_ptr<const std::unordered_set<std::string>> symmetric_relations;
    std::shared_ptr<const TypeMap> types;
};

struct BucketOptions {
    int continuous_buckets = 4;  // quantile buckets for frequency features
    int relation_label_cap = 0;  // 0 = one bucket per relation
};

struct BucketSpec {
    std::string feature;
    std::vector<std::string> labels;
    std::vector<double> boundaries;  // interval edges, continuous features only
};

struct BucketAssignment {
    std::string feature;
    std::unordered_map<std::string, std::string> labels;  // record id -> bucket label
};

struct Bucketing {
    BucketSpec spec;
    BucketAssignment assignment;
};

// Equal-mass intervals: edges at the empirical i/n quantiles (value at sorted
// position floor(i*N/n)), duplicates merged. Intervals are [a,b) except the
// last, which is closed. Throws Error(Domain) for n < 1 or empty input.
BucketSpec bucketize_continuous(std::span<const double> values, int num_buckets);

// Index of the interval of `spec` containing `value` (clamped to the ends).
std::size_t interval_index(const BucketSpec& spec, double value);

Bucketing assign_builtin(const SystemOutput& records, BuiltinKind kind, const BucketResources& resources,
                         const BucketOptions& options = {});

// Buckets a feature declared in the header's custom_features. Records without
// a value land in UNKNOWN; string features with more labels than num_buckets
// keep the num_buckets-1 most frequent and fold the rest into OTHER.
Bucketing assign_custom(const SystemOutput& records, const std::string& feature);

// Built-in names take precedence over custom features of the same name.
Bucketing assign_feature(const SystemOutput& records, const std::string& feature, const BucketResources& resources,
                         const BucketOptions& options = {});

// Groups record ids by label, preserving record order within each group.
// Throws Error(Validation) if any record is unassigned.
std::map<std::string, std::vector<std::string>> partition(const SystemOutput& records,
                                                          const BucketAssignment& assignment);

std::size_t whitespace_token_count(std::string_view label);

}  // namespace kgx
