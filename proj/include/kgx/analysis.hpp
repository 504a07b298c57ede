#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kgx/bucketizer.hpp"
#include "kgx/confidence.hpp"
#include "kgx/metrics.hpp"
#include "kgx/system_output.hpp"

namespace kgx {

struct MetricResult {
    std::string metric;  // Metric::name()
    double value = 0.0;
    std::optional<ConfidenceInterval> interval;
};

struct BucketReport {
    std::string feature;
    std::string label;
    std::size_t n = 0;
    std::vector<MetricResult> metrics;  // same order as SingleAnalysisReport::metrics
    std::vector<std::string> sample_ids;  // first few ids, for drill-down previews

    const MetricResult* find(const std::string& metric) const;
};

struct FeatureReport {
    std::string name;
    std::vector<double> boundaries;  // empty unless interval-bucketed
    std::vector<BucketReport> buckets;  // nonempty buckets in spec label order
};

struct OverallReport {
    std::size_t n = 0;
    std::vector<MetricResult> metrics;

    const MetricResult* find(const std::string& metric) const;
};

struct SingleAnalysisReport {
    std::string system_name;
    std::string dataset_name;
    RankBasis rank_basis = RankBasis::Filtered;
    std::string record_digest;  // sha256 over sorted record ids
    std::vector<std::string> metrics;
    TieStrategy tie = TieStrategy::Realistic;
    CiConfig ci;
    OverallReport overall;
    std::vector<FeatureReport> features;
};

struct AnalysisRequest {
    std::vector<std::string> features;
    std::vector<Metric> metrics = default_metrics();
    CiConfig ci;
    TieStrategy tie = TieStrategy::Realistic;
    BucketOptions buckets;
    std::size_t sample_cap = 10;
};

// Overall and per-bucket metric values with intervals. Empty buckets are
// omitted. Throws Error(Config) when a feature cannot be resolved and
// Error(Domain) on an empty system output.
SingleAnalysisReport single_analysis(const SystemOutput& s, const AnalysisRequest& request,
                                     const BucketResources& resources = {});

std::string record_digest(const SystemOutput& s);

struct SystemRef {
    std::string system_name;
    std::string dataset_name;
};

struct BucketRanking {
    std::string feature;
    std::string label;
    std::vector<double> values;  // per system, input order
    std::vector<int> ranks;
};

struct Agreement {
    double b_eq = 0.0;
    double b_neq = 0.0;
};

struct ComparisonReport {
    std::string metric;
    std::vector<SystemRef> systems;
    std::vector<double> overall_values;
    std::vector<int> overall_ranks;
    std::vector<BucketRanking> buckets;
    std::vector<Agreement> agreement;  // b_eq: fraction of buckets whose rank equals the overall rank
};

// Competition ranking ("1,1,3"): rank = 1 + number of strictly better values.
std::vector<int> competition_ranks(const std::vector<double>& values, bool higher_is_better);

// Throws Error(Comparability) unless all reports share dataset, rank basis,
// record ids and bucket inventory, and Error(Config) if the metric is absent.
ComparisonReport compare_systems(const std::vector<SingleAnalysisReport>& reports, const Metric& metric);

struct Page {
    std::size_t offset = 0;
    std::size_t limit = 50;
};

// Records of one bucket ordered by id. Throws Error(NotFound) if no record
// carries `label`.
std::vector<ExampleRecord> drill_down(const SystemOutput& s, const BucketAssignment& assignment,
                                      const std::string& label, Page page);

// Report documents (JSON). Schemas "kgx-analysis/1" and "kgx-comparison/1".
std::string analysis_report_json(const SingleAnalysisReport& report);
SingleAnalysisReport parse_analysis_report(const std::string& text);
std::string comparison_report_json(const ComparisonReport& report);
ComparisonReport parse_comparison_report(const std::string& text);

}  // namespace kgx
