#include "kgx/debugger.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <numeric>
#include <set>

#include <json.hpp>

#include "kgx/error.hpp"
#include "kgx/kge_train.hpp"
#include "kgx/parallel.hpp"
#include "kgx/random.hpp"

namespace kgx {

using ordered_json = nlohmann::ordered_json;

void validate(const DebugConfig& c) {
    if (c.debug_set_size == 0) throw Error(ErrorCode::Config, "debug set size must be positive");
    if (c.in_danger_size == 0) throw Error(ErrorCode::Config, "in-danger size must be positive");
    if (c.epoch_cap < 1) throw Error(ErrorCode::Config, "epoch cap must be at least 1");
    if (!(c.finetune_lr > 0.0)) throw Error(ErrorCode::Config, "fine-tuning learning rate must be positive");
    if (c.scan_cap_factor == 0) throw Error(ErrorCode::Config, "scan cap factor must be positive");
}

ViolationScan find_symmetry_violations(const KgeModel& m, const TripleSet& train, std::optional<RelationId> relation,
                                       const DebugConfig& config) {
    const FilterIndex filter({&train});
    std::set<Triple> unique;
    for (const auto& t : train.triples) {
        if (t.head == t.tail) continue;
        if (relation && t.relation != *relation) continue;
        unique.insert(Triple{t.tail, t.relation, t.head});
    }
    const std::vector<Triple> candidates(unique.begin(), unique.end());
    std::vector<std::optional<ViolationRecord>> found(candidates.size());
    parallel_for(candidates.size(), config.workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> scores;
        for (std::size_t i = begin; i < end; ++i) {
            const Triple& fwd = candidates[i];
            const Triple rev{fwd.tail, fwd.relation, fwd.head};
            const double rev_rank = rank_of(m, rev, QuerySide::Tail, &filter, config.tie, scores);
            if (rev_rank != 1.0) continue;
            const double fwd_rank = rank_of(m, fwd, QuerySide::Tail, &filter, config.tie, scores);
            if (fwd_rank <= 1.0) continue;
            found[i] = ViolationRecord{fwd, true, filter.contains(fwd), rev_rank, fwd_rank};
        }
    });

    ViolationScan scan;
    scan.candidates = candidates.size();
    for (auto& v : found) {
        if (v) scan.by_relation[v->forward.relation].push_back(*v);
    }
    std::size_t best = 0;
    for (const auto& [r, list] : scan.by_relation) {
        if (list.size() > best) {
            best = list.size();
            scan.most_violated = r;
        }
    }
    return scan;
}

std::optional<RelationId> most_violated_among(const ViolationScan& scan, std::span<const RelationId> allowed) {
    std::optional<RelationId> best;
    std::size_t count = 0;
    for (const auto& [r, list] : scan.by_relation) {
        if (std::find(allowed.begin(), allowed.end(), r) == allowed.end()) continue;
        if (list.size() > count) {
            count = list.size();
            best = r;
        }
    }
    return best;
}

DebugSplit split_debug_sets(const std::vector<ViolationRecord>& violations, const DebugConfig& config) {
    if (violations.size() <= config.debug_set_size) {
        throw Error(ErrorCode::InsufficientViolations,
                    std::to_string(violations.size()) + " violations; more than " +
                        std::to_string(config.debug_set_size) + " needed");
    }
    std::vector<std::size_t> order(violations.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, 2));
    shuffle(std::span(order), rng);
    DebugSplit split;
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto& dst = i < config.debug_set_size ? split.debug_set : split.debug_test;
        dst.push_back(violations[order[i]].forward);
    }
    return split;
}

namespace {

bool all_rank_one(const KgeModel& m, const std::vector<Triple>& examples, const FilterIndex& filter, TieStrategy tie) {
    std::vector<double> scores;
    for (const auto& t : examples) {
        if (rank_of(m, t, QuerySide::Tail, &filter, tie, scores) != 1.0) return false;
    }
    return true;
}

bool same_floats(std::span<const float> a, std::span<const float> b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
}

}  // namespace

FinetuneResult intensive_finetune(const KgeModel& m, const std::vector<Triple>& examples, const FilterIndex& train,
                                  const DebugConfig& config) {
    if (examples.empty()) throw Error(ErrorCode::Config, "fine-tuning needs at least one example");
    validate(config);
    FinetuneResult result{m, false, 0};
    if (all_rank_one(result.model, examples, train, config.tie)) {
        result.converged = true;
        return result;
    }
    TrainConfig tc;
    tc.kind = m.kind;
    tc.dim = m.dim;
    tc.learning_rate = config.finetune_lr;
    tc.batch_size = static_cast<int>(examples.size());
    tc.optimizer = OptimizerKind::Adagrad;
    OptimizerState state;
    Rng rng(derive_seed(config.seed, 7));
    for (int epoch = 1; epoch <= config.epoch_cap; ++epoch) {
        try {
            train_epoch(result.model, examples, tc, state, rng, NegativeMode::AllTails, UpdateMask{false, true});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Training) throw;
            throw Error(ErrorCode::Training, "fine-tuning epoch " + std::to_string(epoch) + ": " + e.what());
        }
        result.epochs = epoch;
        if (all_rank_one(result.model, examples, train, config.tie)) {
            result.converged = true;
            break;
        }
    }
    return result;
}

std::vector<Triple> collect_in_danger(const KgeModel& m_orig, const KgeModel& m_naive, const TripleSet& train,
                                      const FilterIndex& train_filter, const std::vector<Triple>& exclude,
                                      const DebugConfig& config) {
    std::vector<Triple> out;
    if (train.triples.empty()) return out;
    const bool entities_same = same_floats(m_orig.entities, m_naive.entities);
    const TripleIndex excluded(exclude.begin(), exclude.end());
    std::vector<std::size_t> order(train.triples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, 3));
    shuffle(std::span(order), rng);
    const std::size_t cap = std::min(order.size(), config.scan_cap_factor * config.in_danger_size);
    std::vector<double> scores;
    for (std::size_t i = 0; i < cap && out.size() < config.in_danger_size; ++i) {
        const Triple& t = train.triples[order[i]];
        if (excluded.contains(t)) continue;
        // Unchanged parameters cannot move the rank.
        if (entities_same && same_floats(m_orig.relation(t.relation), m_naive.relation(t.relation))) continue;
        if (rank_of(m_orig, t, QuerySide::Tail, &train_filter, config.tie, scores) != 1.0) continue;
        if (rank_of(m_naive, t, QuerySide::Tail, &train_filter, config.tie, scores) > 1.0) out.push_back(t);
    }
    return out;
}

const char* debug_variant_name(DebugVariant v) {
    switch (v) {
        case DebugVariant::Before: return "before";
        case DebugVariant::Naive: return "naive";
        case DebugVariant::InDanger: return "in-danger";
    }
    return "?";
}

double EvalCell::value(std::string_view metric) const {
    for (const auto& m : metrics) {
        if (m.metric == metric) return m.value;
    }
    throw Error(ErrorCode::NotFound, "metric " + std::string(metric) + " not in cell");
}

const VariantResult& DebugReport::variant(DebugVariant v) const {
    for (const auto& r : variants) {
        if (r.variant == v) return r;
    }
    throw Error(ErrorCode::NotFound, std::string("variant ") + debug_variant_name(v) + " missing");
}

std::vector<Metric> debug_metrics() {
    return {Metric::hits(1), Metric::hits(5), Metric::hits(10), Metric::mr(), Metric::mrr()};
}

namespace {

EvalCell make_cell(const std::vector<double>& ranks) {
    EvalCell cell;
    cell.n = ranks.size();
    for (const auto& metric : debug_metrics()) cell.metrics.push_back({metric.name(), aggregate(metric, ranks)});
    return cell;
}

std::vector<double> tail_ranks(const KgeModel& m, const std::vector<Triple>& triples, const FilterIndex& filter,
                               const DebugConfig& config) {
    std::vector<double> ranks(triples.size());
    parallel_for(triples.size(), config.workers, [&](std::size_t begin, std::size_t end) {
        std::vector<double> scores;
        for (std::size_t i = begin; i < end; ++i) {
            ranks[i] = rank_of(m, triples[i], QuerySide::Tail, &filter, config.tie, scores);
        }
    });
    return ranks;
}

}  // namespace

DebugSession run_debug_session(const KgeModel& m, const TripleSet& train, const TripleSet& test,
                               std::optional<RelationId> relation, const DebugConfig& config, const RoundHook& hook) {
    validate(config);
    if (test.triples.empty()) throw Error(ErrorCode::Config, "debug session needs a nonempty test split");
    const FilterIndex train_filter({&train});
    const FilterIndex full_filter({&train, &test});

    const ViolationScan scan = find_symmetry_violations(m, train, relation, config);
    const std::optional<RelationId> target = relation ? relation : scan.most_violated;
    if (!target) throw Error(ErrorCode::InsufficientViolations, "no symmetry violations found");
    const std::string rel_label = m.vocab->relations.label(*target);
    auto it = scan.by_relation.find(*target);
    const std::vector<ViolationRecord> none;
    const auto& violations = it == scan.by_relation.end() ? none : it->second;
    DebugSplit split;
    try {
        split = split_debug_sets(violations, config);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientViolations) throw;
        throw Error(ErrorCode::InsufficientViolations, "relation " + rel_label + ": " + e.what());
    }

    if (hook) hook(DebugVariant::Naive, m);
    FinetuneResult naive = intensive_finetune(m, split.debug_set, train_filter, config);
    std::vector<Triple> in_danger =
        collect_in_danger(m, naive.model, train, train_filter, split.debug_set, config);
    std::vector<Triple> combined = split.debug_set;
    combined.insert(combined.end(), in_danger.begin(), in_danger.end());
    if (hook) hook(DebugVariant::InDanger, m);
    FinetuneResult second = intensive_finetune(m, combined, train_filter, config);

    DebugSession session{{}, naive.model, second.model, {}};
    DebugReport& report = session.report;
    report.relation = rel_label;
    report.seed = config.seed;
    report.violations = violations.size();
    report.debug_set = split.debug_set;
    report.debug_test = split.debug_test;
    report.in_danger = in_danger;

    const std::array<std::pair<DebugVariant, const FinetuneResult*>, 3> variants{
        {{DebugVariant::Before, nullptr}, {DebugVariant::Naive, &naive}, {DebugVariant::InDanger, &second}}};
    for (const auto& [variant, ft] : variants) {
        const KgeModel& model = ft == nullptr ? m : ft->model;
        EvalOptions options;
        options.directions = EvalDirections::Tail;
        options.tie = config.tie;
        options.system_name = std::string(model_kind_name(m.kind)) + "-" + debug_variant_name(variant);
        options.dataset_name = config.dataset_name;
        options.workers = config.workers;
        SystemOutput out = evaluate_to_system_output(model, test, &full_filter, options);
        std::vector<double> test_ranks;
        test_ranks.reserve(out.records.size());
        for (const auto& r : out.records) test_ranks.push_back(*r.gold_rank);

        VariantResult vr;
        vr.variant = variant;
        vr.debug_test = make_cell(tail_ranks(model, split.debug_test, train_filter, config));
        vr.original_test = make_cell(test_ranks);
        if (ft != nullptr) {
            vr.converged = ft->converged;
            vr.epochs = ft->epochs;
        }
        report.variants.push_back(std::move(vr));
        session.outputs.push_back(std::move(out));
    }
    return session;
}

namespace {

ordered_json triples_json(const std::vector<Triple>& triples, const Vocabulary& vocab) {
    ordered_json arr = ordered_json::array();
    for (const auto& t : triples) {
        arr.push_back({vocab.entities.label(t.head), vocab.relations.label(t.relation), vocab.entities.label(t.tail)});
    }
    return arr;
}

ordered_json cell_json(const EvalCell& cell) {
    ordered_json values = ordered_json::object();
    for (const auto& m : cell.metrics) values[m.metric] = m.value;
    return {{"n", cell.n}, {"values", values}};
}

}  // namespace

std::string debug_report_json(const DebugReport& report, const Vocabulary& vocab) {
    ordered_json j;
    j["schema"] = "kgx-debug/1";
    j["relation"] = report.relation;
    j["seed"] = report.seed;
    j["violations"] = report.violations;
    j["metrics"] = ordered_json::array();
    for (const auto& m : debug_metrics()) j["metrics"].push_back(m.name());
    j["debug_set"] = triples_json(report.debug_set, vocab);
    j["debug_test"] = triples_json(report.debug_test, vocab);
    j["in_danger"] = triples_json(report.in_danger, vocab);
    j["variants"] = ordered_json::array();
    for (const auto& v : report.variants) {
        j["variants"].push_back({{"variant", debug_variant_name(v.variant)},
                                 {"converged", v.converged},
                                 {"epochs", v.epochs},
                                 {"debugging_test", cell_json(v.debug_test)},
                                 {"original_test", cell_json(v.original_test)}});
    }
    return j.dump(2) + "\n";
}

}  // namespace kgx
