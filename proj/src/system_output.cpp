#include "kgx/system_output.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "kgx/error.hpp"

namespace kgx {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char* feature_type_name(FeatureType t) {
    switch (t) {
        case FeatureType::String: return "string";
        case FeatureType::Number: return "number";
        case FeatureType::Continuous: return "continuous";
    }
    return "?";
}

std::optional<FeatureType> parse_feature_type(std::string_view s) {
    if (s == "string") return FeatureType::String;
    if (s == "number") return FeatureType::Number;
    if (s == "continuous") return FeatureType::Continuous;
    return std::nullopt;
}

std::string feature_value_text(const FeatureValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    const double d = std::get<double>(v);
    if (std::floor(d) == d && std::fabs(d) < 9.0e15) return std::to_string(static_cast<long long>(d));
    return json(d).dump();
}

const char* direction_name(Direction d) { return d == Direction::Tail ? "tail" : "head"; }

const char* rank_basis_name(RankBasis b) { return b == RankBasis::Filtered ? "filtered" : "raw"; }

std::optional<RankBasis> parse_rank_basis(std::string_view s) {
    if (s == "filtered") return RankBasis::Filtered;
    if (s == "raw") return RankBasis::Raw;
    return std::nullopt;
}

namespace {

struct Violation {
    std::string field;
    std::string rule;
};

// Integral values are written as JSON integers so ranks stay readable.
ordered_json number_json(double d) {
    if (std::floor(d) == d && std::fabs(d) < 9.0e15) return static_cast<std::int64_t>(d);
    return d;
}

bool dtype_accepts(FeatureType t, const FeatureValue& v) {
    if (t == FeatureType::String) return std::holds_alternative<std::string>(v);
    if (!std::holds_alternative<double>(v)) return false;
    return std::isfinite(std::get<double>(v));
}

std::optional<Violation> check_header(const SystemHeader& h) {
    if (h.schema_version != kSchemaVersion) return Violation{"schema_version", "unrecognized schema version"};
    if (h.task != kTaskName) return Violation{"task", "must be \"link-prediction\""};
    for (const auto& [name, def] : h.custom_features) {
        if (name.empty() || def.name != name) return Violation{"custom_features", "feature name mismatch"};
        if (def.num_buckets < 1) return Violation{"custom_features." + name + ".num_buckets", "must be >= 1"};
    }
    return std::nullopt;
}

std::optional<Violation> check_record(const ExampleRecord& r, const SystemHeader& h) {
    if (r.id.empty()) return Violation{"id", "must be nonempty"};
    if (r.head.empty() || r.relation.empty() || r.tail.empty()) {
        return Violation{"head/relation/tail", "must be nonempty"};
    }
    if (r.gold_rank) {
        if (!std::isfinite(*r.gold_rank) || *r.gold_rank < 1.0) return Violation{"gold_rank", "rank must be >= 1"};
    }
    if (r.top_k) {
        for (std::size_t i = 0; i < r.top_k->size(); ++i) {
            const auto& c = (*r.top_k)[i];
            if (!std::isfinite(c.score)) return Violation{"top_k", "scores must be finite"};
            if (i > 0 && c.score > (*r.top_k)[i - 1].score) {
                return Violation{"top_k", "must be sorted by score descending"};
            }
        }
    }
    if (!r.gold_rank) {
        bool has_gold = false;
        if (r.top_k) {
            for (const auto& c : *r.top_k) has_gold = has_gold || c.entity == r.gold_entity();
        }
        if (!has_gold) return Violation{"gold_rank", "required unless top_k contains the gold entity"};
    }
    for (const auto& [key, value] : r.features) {
        auto it = h.custom_features.find(key);
        if (it == h.custom_features.end()) return Violation{"features." + key, "feature not declared in header"};
        if (!dtype_accepts(it->second.dtype, value)) {
            return Violation{"features." + key, std::string("value does not match dtype ") +
                                                    feature_type_name(it->second.dtype)};
        }
    }
    return std::nullopt;
}

[[noreturn]] void fail(std::size_t line, const std::string& field, const std::string& rule) {
    throw ParseError(line, "field '" + field + "': " + rule);
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, std::size_t line) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) fail(line, key, "unknown field");
    }
}

const std::string& require_string(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(line, key, "missing required field");
    if (!it->is_string()) fail(line, key, "must be a string");
    return it->get_ref<const std::string&>();
}

SystemHeader parse_header(const json& j, std::size_t line) {
    if (!j.is_object()) fail(line, "<header>", "header must be an object");
    reject_unknown_keys(j, {"schema_version", "system_name", "dataset_name", "task", "rank_basis", "custom_features"},
                        line);
    SystemHeader h;
    h.schema_version = require_string(j, "schema_version", line);
    h.system_name = require_string(j, "system_name", line);
    h.dataset_name = require_string(j, "dataset_name", line);
    h.task = require_string(j, "task", line);
    const auto basis = parse_rank_basis(require_string(j, "rank_basis", line));
    if (!basis) fail(line, "rank_basis", "must be \"filtered\" or \"raw\"");
    h.rank_basis = *basis;
    if (auto it = j.find("custom_features"); it != j.end()) {
        if (!it->is_object()) fail(line, "custom_features", "must be an object");
        for (const auto& [name, def] : it->items()) {
            const std::string field = "custom_features." + name;
            if (!def.is_object()) fail(line, field, "must be an object");
            reject_unknown_keys(def, {"dtype", "description", "num_buckets"}, line);
            FeatureDef fd;
            fd.name = name;
            const auto dtype = parse_feature_type(require_string(def, "dtype", line));
            if (!dtype) fail(line, field + ".dtype", "must be one of string, number, continuous");
            fd.dtype = *dtype;
            fd.description = require_string(def, "description", line);
            auto nb = def.find("num_buckets");
            if (nb == def.end() || !nb->is_number_integer()) fail(line, field + ".num_buckets", "must be an integer");
            fd.num_buckets = nb->get<int>();
            h.custom_features.emplace(name, std::move(fd));
        }
    }
    if (auto v = check_header(h)) fail(line, v->field, v->rule);
    return h;
}

ExampleRecord parse_record(const json& j, const SystemHeader& h, std::size_t line) {
    if (!j.is_object()) fail(line, "<record>", "record must be an object");
    reject_unknown_keys(j, {"id", "head", "relation", "tail", "direction", "gold_rank", "top_k", "features"}, line);
    ExampleRecord r;
    r.id = require_string(j, "id", line);
    r.head = require_string(j, "head", line);
    r.relation = require_string(j, "relation", line);
    r.tail = require_string(j, "tail", line);
    const auto& dir = require_string(j, "direction", line);
    if (dir == "tail") {
        r.direction = Direction::Tail;
    } else if (dir == "head") {
        r.direction = Direction::Head;
    } else {
        fail(line, "direction", "must be \"tail\" or \"head\"");
    }
    if (auto it = j.find("gold_rank"); it != j.end()) {
        if (!it->is_number()) fail(line, "gold_rank", "must be a number");
        r.gold_rank = it->get<double>();
    }
    if (auto it = j.find("top_k"); it != j.end()) {
        if (!it->is_array()) fail(line, "top_k", "must be an array of [entity, score] pairs");
        std::vector<ScoredCandidate> cands;
        for (const auto& pair : *it) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_number()) {
                fail(line, "top_k", "must be an array of [entity, score] pairs");
            }
            cands.push_back({pair[0].get<std::string>(), pair[1].get<double>()});
        }
        r.top_k = std::move(cands);
    }
    if (auto it = j.find("features"); it != j.end()) {
        if (!it->is_object()) fail(line, "features", "must be an object");
        for (const auto& [key, value] : it->items()) {
            if (value.is_string()) {
                r.features.emplace(key, value.get<std::string>());
            } else if (value.is_number()) {
                r.features.emplace(key, value.get<double>());
            } else {
                fail(line, "features." + key, "must be a string or number");
            }
        }
    }
    if (auto v = check_record(r, h)) fail(line, v->field, v->rule);
    return r;
}

ordered_json header_json(const SystemHeader& h) {
    ordered_json j;
    j["schema_version"] = h.schema_version;
    j["system_name"] = h.system_name;
    j["dataset_name"] = h.dataset_name;
    j["task"] = h.task;
    j["rank_basis"] = rank_basis_name(h.rank_basis);
    ordered_json features = ordered_json::object();
    for (const auto& [name, def] : h.custom_features) {
        ordered_json d;
        d["dtype"] = feature_type_name(def.dtype);
        d["description"] = def.description;
        d["num_buckets"] = def.num_buckets;
        features[name] = std::move(d);
    }
    j["custom_features"] = std::move(features);
    return j;
}

ordered_json record_json(const ExampleRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["head"] = r.head;
    j["relation"] = r.relation;
    j["tail"] = r.tail;
    j["direction"] = direction_name(r.direction);
    if (r.gold_rank) j["gold_rank"] = number_json(*r.gold_rank);
    if (r.top_k) {
        ordered_json arr = ordered_json::array();
        for (const auto& c : *r.top_k) arr.push_back(ordered_json::array({c.entity, c.score}));
        j["top_k"] = std::move(arr);
    }
    if (!r.features.empty()) {
        ordered_json f = ordered_json::object();
        for (const auto& [key, value] : r.features) {
            if (const auto* s = std::get_if<std::string>(&value)) {
                f[key] = *s;
            } else {
                f[key] = number_json(std::get<double>(value));
            }
        }
        j["features"] = std::move(f);
    }
    return j;
}

}  // namespace

void validate(const SystemOutput& s) {
    if (auto v = check_header(s.header)) {
        throw Error(ErrorCode::Validation, "header field '" + v->field + "': " + v->rule);
    }
    std::unordered_set<std::string> ids;
    for (const auto& r : s.records) {
        if (auto v = check_record(r, s.header)) {
            throw Error(ErrorCode::Validation, "record '" + r.id + "' field '" + v->field + "': " + v->rule);
        }
        if (!ids.insert(r.id).second) throw Error(ErrorCode::Validation, "duplicate record id '" + r.id + "'");
    }
}

SystemOutput parse_system_output(std::istream& in) {
    SystemOutput out;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::unordered_set<std::string> ids;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!have_header) {
            out.header = parse_header(j, line_no);
            have_header = true;
            continue;
        }
        auto record = parse_record(j, out.header, line_no);
        if (!ids.insert(record.id).second) fail(line_no, "id", "duplicate record id '" + record.id + "'");
        out.records.push_back(std::move(record));
    }
    if (!have_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing header line");
    return out;
}

SystemOutput parse_system_output(const std::string& text) {
    std::istringstream in(text);
    return parse_system_output(in);
}

SystemOutput read_system_output_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
    return parse_system_output(in);
}

void emit_system_output(const SystemOutput& s, std::ostream& out) {
    out << header_json(s.header).dump() << '\n';
    for (const auto& r : s.records) out << record_json(r).dump() << '\n';
    if (!out) throw Error(ErrorCode::Storage, "write failure while emitting system output");
}

std::string emit_record(const ExampleRecord& r) { return record_json(r).dump(); }

std::string emit_header(const SystemHeader& h) { return header_json(h).dump(); }

std::string emit_system_output(const SystemOutput& s) {
    std::ostringstream out;
    emit_system_output(s, out);
    return out.str();
}

void write_system_output_file(const SystemOutput& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Storage, "cannot open " + path + " for writing");
    emit_system_output(s, out);
}

SystemOutput apply_bucketization_function(const SystemOutput& s, const FeatureDef& def, const BucketAssigner& assign) {
    if (s.header.custom_features.contains(def.name)) {
        throw Error(ErrorCode::Config, "feature '" + def.name + "' already declared");
    }
    if (def.name.empty() || def.num_buckets < 1) {
        throw Error(ErrorCode::Config, "feature definition needs a name and num_buckets >= 1");
    }
    SystemOutput out = s;
    out.header.custom_features.emplace(def.name, def);
    for (auto& r : out.records) {
        FeatureValue v = assign(r);
        if (!dtype_accepts(def.dtype, v)) {
            throw Error(ErrorCode::Validation, "record '" + r.id + "': assigned value for '" + def.name +
                                                   "' does not match dtype " + feature_type_name(def.dtype));
        }
        r.features[def.name] = std::move(v);
    }
    return out;
}

}  // namespace kgx
