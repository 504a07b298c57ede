#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace kgx {

// Native system-output file ("KGxBoard format").
//
// Line-delimited JSON. Line 1 is the header:
//
//   {"schema_version":"1.0","system_name":...,"dataset_name":...,
//    "task":"link-prediction","rank_basis":"filtered"|"raw",
//    "custom_features":{"rel_type":{"dtype":"string",
//                                   "description":"predicate symmetry",
//                                   "num_buckets":2}}}
//
// Every following line is one example record:
//
//   {"id":...,"head":...,"relation":...,"tail":...,"direction":"tail"|"head",
//    "gold_rank":3,"top_k":[["e1",0.9],...],"features":{"rel_type":"symmetric"}}
//
// `gold_rank` may be omitted when `top_k` contains the gold entity; `top_k`
// and `features` are optional. Emission writes keys in exactly the order
// shown above, feature keys sorted, so identical content is byte-identical.

inline constexpr const char* kSchemaVersion = "1.0";
inline constexpr const char* kTaskName = "link-prediction";

// "continuous" extends the string-only schema with numeric features destined
// for interval bucketing; "number" holds discrete numeric labels.
enum class FeatureType { String, Number, Continuous };

const char* feature_type_name(FeatureType t);
std::optional<FeatureType> parse_feature_type(std::string_view s);

struct FeatureDef {
    std::string name;
    FeatureType dtype = FeatureType::String;
    std::string description;
    int num_buckets = 1;

    friend bool operator==(const FeatureDef&, const FeatureDef&) = default;
};

using FeatureValue = std::variant<std::string, double>;

std::string feature_value_text(const FeatureValue& v);

enum class Direction { Tail, Head };  // tail-query (h,r,?) / head-query (?,r,t)

const char* direction_name(Direction d);

enum class RankBasis { Filtered, Raw };

const char* rank_basis_name(RankBasis b);
std::optional<RankBasis> parse_rank_basis(std::string_view s);

struct ScoredCandidate {
    std::string entity;
    double score = 0.0;

    friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

struct ExampleRecord {
    std::string id;
    std::string head;
    std::string relation;
    std::string tail;
    Direction direction = Direction::Tail;
    std::optional<double> gold_rank;  // >= 1; realistic tie handling may give x.5
    std::optional<std::vector<ScoredCandidate>> top_k;
    std::map<std::string, FeatureValue> features;

    const std::string& gold_entity() const { return direction == Direction::Tail ? tail : head; }

    friend bool operator==(const ExampleRecord&, const ExampleRecord&) = default;
};

struct SystemHeader {
    std::string schema_version = kSchemaVersion;
    std::string system_name;
    std::string dataset_name;
    std::string task = kTaskName;
    RankBasis rank_basis = RankBasis::Filtered;
    std::map<std::string, FeatureDef> custom_features;

    friend bool operator==(const SystemHeader&, const SystemHeader&) = default;
};

struct SystemOutput {
    SystemHeader header;
    std::vector<ExampleRecord> records;

    friend bool operator==(const SystemOutput&, const SystemOutput&) = default;
};

// Checks every invariant of the format; throws Error(Validation) naming the
// offending record.
void validate(const SystemOutput& s);

// Throws ParseError naming the line, field and rule that failed.
SystemOutput parse_system_output(std::istream& in);
SystemOutput parse_system_output(const std::string& text);
SystemOutput read_system_output_file(const std::string& path);

void emit_system_output(const SystemOutput& s, std::ostream& out);
std::string emit_system_output(const SystemOutput& s);
// Canonical single-line form of one record (no trailing newline).
std::string emit_record(const ExampleRecord& r);
// Canonical single-line form of a header (no trailing newline).
std::string emit_header(const SystemHeader& h);
void write_system_output_file(const SystemOutput& s, const std::string& path);

using BucketAssigner = std::function<FeatureValue(const ExampleRecord&)>;

// Adds feature `def` to the header and a value for it to every record.
// Throws Error(Config) if the name is taken and Error(Validation) naming the
// record id when the assigner returns a value of the wrong dtype.
SystemOutput apply_bucketization_function(const SystemOutput& s, const FeatureDef& def,
                                          const BucketAssigner& assign);

}  // namespace kgx
