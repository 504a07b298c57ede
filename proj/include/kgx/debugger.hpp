#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgx/kge_eval.hpp"
#include "kgx/kge_model.hpp"
#include "kgx/metrics.hpp"
#include "kgx/system_output.hpp"
#include "kgx/triples.hpp"

namespace kgx {

// (h,r,t) whose reverse (t,r,h) is a training triple ranked first for
// (t,r,?) while t ranks below first for (h,r,?). Ranks are tail-query ranks
// filtered against train.
struct ViolationRecord {
    Triple forward;
    bool reverse_in_train = true;
    bool forward_in_train = false;
    double reverse_rank = 1.0;
    double forward_rank = 0.0;
};

struct ViolationScan {
    std::map<RelationId, std::vector<ViolationRecord>> by_relation;
    std::optional<RelationId> most_violated;  // ties go to the lower id
    std::size_t candidates = 0;
};

struct DebugConfig {
    std::size_t debug_set_size = 10;
    std::size_t in_danger_size = 20;
    double finetune_lr = 0.01;
    int epoch_cap = 500;
    std::size_t scan_cap_factor = 50;  // in-danger scan covers factor * in_danger_size train triples
    std::uint64_t seed = 0;
    TieStrategy tie = TieStrategy::Realistic;
    unsigned workers = 1;
    std::string dataset_name = "dataset";  // header of the emitted system outputs
};

void validate(const DebugConfig& config);

ViolationScan find_symmetry_violations(const KgeModel& m, const TripleSet& train,
                                       std::optional<RelationId> relation = std::nullopt,
                                       const DebugConfig& config = {});

// Relation with the most violations among `allowed`; ties go to the lower id.
std::optional<RelationId> most_violated_among(const ViolationScan& scan, std::span<const RelationId> allowed);

struct DebugSplit {
    std::vector<Triple> debug_set;
    std::vector<Triple> debug_test;
};

// Throws Error(InsufficientViolations) unless there are more violations than
// config.debug_set_size.
DebugSplit split_debug_sets(const std::vector<ViolationRecord>& violations, const DebugConfig& config);

struct FinetuneResult {
    KgeModel model;
    bool converged = false;
    int epochs = 0;
};

// Relation-only fine-tuning on `examples` until each has filtered tail rank 1
// (against `train`) or the epoch cap is hit.
FinetuneResult intensive_finetune(const KgeModel& m, const std::vector<Triple>& examples, const FilterIndex& train,
                                  const DebugConfig& config);

// Train triples ranked first by m_orig and below first by m_naive, excluding
// `exclude`. At most config.in_danger_size; scan order seeded.
std::vector<Triple> collect_in_danger(const KgeModel& m_orig, const KgeModel& m_naive, const TripleSet& train,
                                      const FilterIndex& train_filter, const std::vector<Triple>& exclude,
                                      const DebugConfig& config);

enum class DebugVariant { Before, Naive, InDanger };
const char* debug_variant_name(DebugVariant v);

struct MetricValue {
    std::string metric;
    double value = 0.0;
};

struct EvalCell {
    std::size_t n = 0;
    std::vector<MetricValue> metrics;  // hits@1, hits@5, hits@10, mr, mrr

    double value(std::string_view metric) const;
};

struct VariantResult {
    DebugVariant variant = DebugVariant::Before;
    EvalCell debug_test;
    EvalCell original_test;
    bool converged = true;
    int epochs = 0;
};

struct DebugReport {
    std::string relation;
    std::uint64_t seed = 0;
    std::size_t violations = 0;
    std::vector<Triple> debug_set;
    std::vector<Triple> debug_test;
    std::vector<Triple> in_danger;
    std::vector<VariantResult> variants;  // before, naive, in-danger

    const VariantResult& variant(DebugVariant v) const;
};

std::vector<Metric> debug_metrics();

// Called with the starting parameters of each fine-tuning round.
using RoundHook = std::function<void(DebugVariant round, const KgeModel& start)>;

struct DebugSession {
    DebugReport report;
    KgeModel naive;
    KgeModel in_danger;
    std::vector<SystemOutput> outputs;  // original-test outputs, before/naive/in-danger
};

DebugSession run_debug_session(const KgeModel& m, const TripleSet& train, const TripleSet& test,
                               std::optional<RelationId> relation, const DebugConfig& config,
                               const RoundHook& hook = {});

// Schema "kgx-debug/1".
std::string debug_report_json(const DebugReport& report, const Vocabulary& vocab);

}  // namespace kgx
