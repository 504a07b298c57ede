#include "kgx/analysis.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "kgx/error.hpp"
#include "kgx/hash.hpp"

namespace kgx {

using ordered_json = nlohmann::ordered_json;

namespace {

ConfidenceInterval clamp_to_metric(const ConfidenceInterval& ci, const Metric& m) {
    if (m.kind == MetricKind::MR) return clamp_interval(ci, 1.0, std::numeric_limits<double>::infinity());
    return clamp_interval(ci, 0.0, 1.0);
}

std::vector<MetricResult> evaluate_group(const std::vector<double>& ranks, const std::vector<std::size_t>& members,
                                         const AnalysisRequest& req, std::string_view stream_key) {
    std::vector<MetricResult> out;
    std::vector<double> group_ranks;
    group_ranks.reserve(members.size());
    for (auto i : members) group_ranks.push_back(ranks[i]);
    std::vector<double> per_example(group_ranks.size());
    for (const auto& m : req.metrics) {
        MetricResult r;
        r.metric = m.name();
        r.value = aggregate(m, group_ranks);
        for (std::size_t i = 0; i < group_ranks.size(); ++i) per_example[i] = m.per_example(group_ranks[i]);
        const std::uint64_t stream = fnv1a64(r.metric, fnv1a64(stream_key));
        if (auto ci = confidence_interval(per_example, req.ci, stream)) r.interval = clamp_to_metric(*ci, m);
        out.push_back(std::move(r));
    }
    return out;
}

const MetricResult* find_metric(const std::vector<MetricResult>& results, const std::string& metric) {
    for (const auto& r : results) {
        if (r.metric == metric) return &r;
    }
    return nullptr;
}

}  // namespace

const MetricResult* BucketReport::find(const std::string& metric) const { return find_metric(metrics, metric); }

const MetricResult* OverallReport::find(const std::string& metric) const { return find_metric(metrics, metric); }

std::string record_digest(const SystemOutput& s) {
    std::vector<std::string> ids;
    ids.reserve(s.records.size());
    for (const auto& r : s.records) ids.push_back(r.id);
    std::sort(ids.begin(), ids.end());
    std::string joined;
    for (const auto& id : ids) {
        joined += id;
        joined.push_back('\n');
    }
    return sha256_hex(joined);
}

SingleAnalysisReport single_analysis(const SystemOutput& s, const AnalysisRequest& req,
                                     const BucketResources& resources) {
    if (s.records.empty()) throw Error(ErrorCode::Domain, "cannot analyse an empty system output");
    if (req.metrics.empty()) throw Error(ErrorCode::Config, "no metrics requested");

    SingleAnalysisReport report;
    report.system_name = s.header.system_name;
    report.dataset_name = s.header.dataset_name;
    report.rank_basis = s.header.rank_basis;
    report.record_digest = record_digest(s);
    for (const auto& m : req.metrics) report.metrics.push_back(m.name());
    report.tie = req.tie;
    report.ci = req.ci;

    std::vector<double> ranks(s.records.size());
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::size_t> all(s.records.size());
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        ranks[i] = effective_rank(s.records[i], req.tie);
        index.emplace(s.records[i].id, i);
        all[i] = i;
    }
    report.overall.n = all.size();
    report.overall.metrics = evaluate_group(ranks, all, req, "overall");

    for (const auto& feature : req.features) {
        const Bucketing b = assign_feature(s, feature, resources, req.buckets);
        const auto groups = partition(s, b.assignment);
        FeatureReport fr;
        fr.name = feature;
        fr.boundaries = b.spec.boundaries;
        for (const auto& label : b.spec.labels) {
            auto g = groups.find(label);
            if (g == groups.end() || g->second.empty()) continue;
            BucketReport br;
            br.feature = feature;
            br.label = label;
            br.n = g->second.size();
            std::vector<std::size_t> members;
            members.reserve(g->second.size());
            for (const auto& id : g->second) members.push_back(index.at(id));
            br.metrics = evaluate_group(ranks, members, req, feature + '\x1f' + label);
            for (std::size_t i = 0; i < g->second.size() && i < req.sample_cap; ++i) br.sample_ids.push_back(g->second[i]);
            fr.buckets.push_back(std::move(br));
        }
        report.features.push_back(std::move(fr));
    }
    return report;
}

std::vector<int> competition_ranks(const std::vector<double>& values, bool higher_is_better) {
    std::vector<int> ranks(values.size(), 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (std::size_t j = 0; j < values.size(); ++j) {
            const bool better = higher_is_better ? values[j] > values[i] : values[j] < values[i];
            if (better) ++ranks[i];
        }
    }
    return ranks;
}

ComparisonReport compare_systems(const std::vector<SingleAnalysisReport>& reports, const Metric& metric) {
    if (reports.size() < 2) throw Error(ErrorCode::Config, "comparison needs at least two reports");
    const auto name = metric.name();
    const auto& first = reports.front();
    auto incomparable = [](const std::string& why) { throw Error(ErrorCode::Comparability, why); };
    for (const auto& r : reports) {
        if (r.dataset_name != first.dataset_name) incomparable("reports cover different datasets");
        if (r.rank_basis != first.rank_basis) incomparable("reports mix filtered and raw ranks");
        if (r.record_digest != first.record_digest || r.overall.n != first.overall.n) {
            incomparable("reports cover different record-id sets");
        }
        if (r.overall.find(name) == nullptr) throw Error(ErrorCode::Config, "metric '" + name + "' missing from a report");
        if (r.features.size() != first.features.size()) incomparable("reports have different feature inventories");
        for (std::size_t f = 0; f < r.features.size(); ++f) {
            const auto& a = r.features[f];
            const auto& b = first.features[f];
            if (a.name != b.name || a.buckets.size() != b.buckets.size()) {
                incomparable("bucket inventory differs for feature '" + b.name + "'");
            }
            for (std::size_t k = 0; k < a.buckets.size(); ++k) {
                if (a.buckets[k].label != b.buckets[k].label || a.buckets[k].n != b.buckets[k].n) {
                    incomparable("bucket inventory differs for feature '" + b.name + "'");
                }
            }
        }
    }

    ComparisonReport out;
    out.metric = name;
    for (const auto& r : reports) {
        out.systems.push_back({r.system_name, r.dataset_name});
        out.overall_values.push_back(r.overall.find(name)->value);
    }
    out.overall_ranks = competition_ranks(out.overall_values, metric.higher_is_better());

    std::vector<std::size_t> equal(reports.size(), 0);
    for (std::size_t f = 0; f < first.features.size(); ++f) {
        for (std::size_t k = 0; k < first.features[f].buckets.size(); ++k) {
            BucketRanking br;
            br.feature = first.features[f].name;
            br.label = first.features[f].buckets[k].label;
            for (const auto& r : reports) br.values.push_back(r.features[f].buckets[k].find(name)->value);
            br.ranks = competition_ranks(br.values, metric.higher_is_better());
            for (std::size_t i = 0; i < reports.size(); ++i) {
                if (br.ranks[i] == out.overall_ranks[i]) ++equal[i];
            }
            out.buckets.push_back(std::move(br));
        }
    }
    const std::size_t total = out.buckets.size();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        Agreement a;
        a.b_eq = total == 0 ? 1.0 : static_cast<double>(equal[i]) / static_cast<double>(total);
        a.b_neq = 1.0 - a.b_eq;
        out.agreement.push_back(a);
    }
    return out;
}

std::vector<ExampleRecord> drill_down(const SystemOutput& s, const BucketAssignment& assignment,
                                      const std::string& label, Page page) {
    std::vector<const ExampleRecord*> members;
    for (const auto& r : s.records) {
        auto it = assignment.labels.find(r.id);
        if (it != assignment.labels.end() && it->second == label) members.push_back(&r);
    }
    if (members.empty()) {
        throw Error(ErrorCode::NotFound, "no bucket '" + label + "' for feature '" + assignment.feature + "'");
    }
    std::sort(members.begin(), members.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
    std::vector<ExampleRecord> out;
    for (std::size_t i = page.offset; i < members.size() && out.size() < page.limit; ++i) out.push_back(*members[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Report documents

namespace {

ordered_json interval_json(const std::optional<ConfidenceInterval>& ci) {
    if (!ci) return nullptr;
    ordered_json j;
    j["low"] = ci->low;
    j["high"] = ci->high;
    j["level"] = ci->level;
    j["method"] = ci_method_name(ci->method);
    j["n"] = ci->n;
    return j;
}

ordered_json metrics_json(const std::vector<MetricResult>& results) {
    ordered_json values = ordered_json::object();
    ordered_json intervals = ordered_json::object();
    for (const auto& r : results) {
        values[r.metric] = r.value;
        intervals[r.metric] = interval_json(r.interval);
    }
    ordered_json j;
    j["values"] = std::move(values);
    j["intervals"] = std::move(intervals);
    return j;
}

std::optional<ConfidenceInterval> parse_interval(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    ConfidenceInterval ci;
    ci.low = j.at("low").get<double>();
    ci.high = j.at("high").get<double>();
    ci.level = j.at("level").get<double>();
    const auto method = parse_ci_method(j.at("method").get<std::string>());
    if (!method) throw Error(ErrorCode::Validation, "unknown interval method");
    ci.method = *method;
    ci.n = j.at("n").get<std::size_t>();
    return ci;
}

std::vector<MetricResult> parse_metrics(const nlohmann::json& j, const std::vector<std::string>& order) {
    std::vector<MetricResult> out;
    const auto& values = j.at("values");
    const auto& intervals = j.at("intervals");
    for (const auto& name : order) {
        MetricResult r;
        r.metric = name;
        r.value = values.at(name).get<double>();
        r.interval = parse_interval(intervals.at(name));
        out.push_back(std::move(r));
    }
    return out;
}

template <typename F>
auto parse_document(const std::string& text, const char* schema, F&& body) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("schema").get<std::string>() != schema) {
            throw Error(ErrorCode::Validation, std::string("expected report schema ") + schema);
        }
        return body(j);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Validation, std::string("malformed report: ") + e.what());
    }
}

}  // namespace

std::string analysis_report_json(const SingleAnalysisReport& r) {
    ordered_json j;
    j["schema"] = "kgx-analysis/1";
    j["system_name"] = r.system_name;
    j["dataset_name"] = r.dataset_name;
    j["rank_basis"] = rank_basis_name(r.rank_basis);
    j["record_digest"] = r.record_digest;
    j["metrics"] = r.metrics;
    j["tie"] = tie_strategy_name(r.tie);
    ordered_json ci;
    ci["method"] = ci_method_name(r.ci.method);
    ci["level"] = r.ci.level;
    ci["resamples"] = r.ci.resamples;
    ci["seed"] = r.ci.seed;
    ci["min_bucket_size"] = r.ci.min_bucket_size;
    j["ci"] = std::move(ci);
    ordered_json overall = metrics_json(r.overall.metrics);
    overall["n"] = r.overall.n;
    j["overall"] = std::move(overall);
    ordered_json features = ordered_json::array();
    for (const auto& f : r.features) {
        ordered_json fj;
        fj["name"] = f.name;
        fj["boundaries"] = f.boundaries;
        ordered_json buckets = ordered_json::array();
        for (const auto& b : f.buckets) {
            ordered_json bj;
            bj["label"] = b.label;
            bj["n"] = b.n;
            auto m = metrics_json(b.metrics);
            bj["values"] = std::move(m["values"]);
            bj["intervals"] = std::move(m["intervals"]);
            bj["sample_ids"] = b.sample_ids;
            buckets.push_back(std::move(bj));
        }
        fj["buckets"] = std::move(buckets);
        features.push_back(std::move(fj));
    }
    j["features"] = std::move(features);
    return j.dump(2) + "\n";
}

SingleAnalysisReport parse_analysis_report(const std::string& text) {
    return parse_document(text, "kgx-analysis/1", [](const nlohmann::json& j) {
        SingleAnalysisReport r;
        r.system_name = j.at("system_name").get<std::string>();
        r.dataset_name = j.at("dataset_name").get<std::string>();
        const auto basis = parse_rank_basis(j.at("rank_basis").get<std::string>());
        if (!basis) throw Error(ErrorCode::Validation, "unknown rank_basis");
        r.rank_basis = *basis;
        r.record_digest = j.at("record_digest").get<std::string>();
        r.metrics = j.at("metrics").get<std::vector<std::string>>();
        const auto tie = parse_tie_strategy(j.at("tie").get<std::string>());
        if (!tie) throw Error(ErrorCode::Validation, "unknown tie strategy");
        r.tie = *tie;
        const auto& ci = j.at("ci");
        const auto method = parse_ci_method(ci.at("method").get<std::string>());
        if (!method) throw Error(ErrorCode::Validation, "unknown ci method");
        r.ci.method = *method;
        r.ci.level = ci.at("level").get<double>();
        r.ci.resamples = ci.at("resamples").get<int>();
        r.ci.seed = ci.at("seed").get<std::uint64_t>();
        r.ci.min_bucket_size = ci.at("min_bucket_size").get<std::size_t>();
        r.overall.n = j.at("overall").at("n").get<std::size_t>();
        r.overall.metrics = parse_metrics(j.at("overall"), r.metrics);
        for (const auto& fj : j.at("features")) {
            FeatureReport f;
            f.name = fj.at("name").get<std::string>();
            f.boundaries = fj.at("boundaries").get<std::vector<double>>();
            for (const auto& bj : fj.at("buckets")) {
                BucketReport b;
                b.feature = f.name;
                b.label = bj.at("label").get<std::string>();
                b.n = bj.at("n").get<std::size_t>();
                b.metrics = parse_metrics(bj, r.metrics);
                b.sample_ids = bj.at("sample_ids").get<std::vector<std::string>>();
                f.buckets.push_back(std::move(b));
            }
            r.features.push_back(std::move(f));
        }
        return r;
    });
}

std::string comparison_report_json(const ComparisonReport& r) {
    ordered_json j;
    j["schema"] = "kgx-comparison/1";
    j["metric"] = r.metric;
    ordered_json systems = ordered_json::array();
    for (std::size_t i = 0; i < r.systems.size(); ++i) {
        ordered_json s;
        s["system_name"] = r.systems[i].system_name;
        s["dataset_name"] = r.systems[i].dataset_name;
        s["overall_value"] = r.overall_values[i];
        s["overall_rank"] = r.overall_ranks[i];
        s["b_eq"] = r.agreement[i].b_eq;
        s["b_neq"] = r.agreement[i].b_neq;
        systems.push_back(std::move(s));
    }
    j["systems"] = std::move(systems);
    ordered_json buckets = ordered_json::array();
    for (const auto& b : r.buckets) {
        ordered_json bj;
        bj["feature"] = b.feature;
        bj["label"] = b.label;
        bj["values"] = b.values;
        bj["ranks"] = b.ranks;
        buckets.push_back(std::move(bj));
    }
    j["buckets"] = std::move(buckets);
    return j.dump(2) + "\n";
}

ComparisonReport parse_comparison_report(const std::string& text) {
    return parse_document(text, "kgx-comparison/1", [](const nlohmann::json& j) {
        ComparisonReport r;
        r.metric = j.at("metric").get<std::string>();
        for (const auto& s : j.at("systems")) {
            r.systems.push_back({s.at("system_name").get<std::string>(), s.at("dataset_name").get<std::string>()});
            r.overall_values.push_back(s.at("overall_value").get<double>());
            r.overall_ranks.push_back(s.at("overall_rank").get<int>());
            r.agreement.push_back({s.at("b_eq").get<double>(), s.at("b_neq").get<double>()});
        }
        for (const auto& bj : j.at("buckets")) {
            BucketRanking b;
            b.feature = bj.at("feature").get<std::string>();
            b.label = bj.at("label").get<std::string>();
            b.values = bj.at("values").get<std::vector<double>>();
            b.ranks = bj.at("ranks").get<std::vector<int>>();
            r.buckets.push_back(std::move(b));
        }
        return r;
    });
}

}  // namespace kgx
