#include "cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgx/adapters.hpp"
#include "kgx/analysis.hpp"
#include "kgx/debugger.hpp"
#include "kgx/error.hpp"
#include "kgx/hash.hpp"
#include "kgx/http_api.hpp"
#include "kgx/kge_eval.hpp"
#include "kgx/kge_train.hpp"
#include "kgx/store.hpp"
#include "kgx/synthetic.hpp"

namespace kgx::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::atomic<bool> g_stop{false};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Storage, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorCode::Storage, "write failed for " + path);
}

// Loads a split into `vocab`; with `frozen`, labels outside the vocabulary are
// an error.
TripleSet load_split(const std::string& path, Vocabulary& vocab, Split split, bool frozen, std::ostream& err) {
    const auto before_e = vocab.entities.size();
    const auto before_r = vocab.relations.size();
    LoadResult r = load_tsv_file(path, vocab, split);
    for (const auto& w : r.warnings) err << path << ": " << w << "\n";
    if (frozen && (vocab.entities.size() != before_e || vocab.relations.size() != before_r)) {
        const std::string label = vocab.entities.size() != before_e ? vocab.entities.label(static_cast<EntityId>(before_e))
                                                                    : vocab.relations.label(static_cast<RelationId>(before_r));
        throw Error(ErrorCode::Lookup, path + ": label '" + label + "' is not in the model vocabulary");
    }
    return std::move(r.set);
}

struct ResourceFlags {
    std::string train;
    std::string symmetric;
    std::string types;
};

void add_resource_flags(CLI::App* app, ResourceFlags& f) {
    app->add_option("--train", f.train, "training split TSV (enables frequency and cardinality features)");
    app->add_option("--symmetric", f.symmetric, "file listing symmetric relations, one per line");
    app->add_option("--types", f.types, "entity type map TSV");
}

BucketResources load_resources(const ResourceFlags& f, std::string* fingerprint, std::ostream& err) {
    BucketResources res;
    std::string fp;
    if (!f.train.empty()) {
        auto vocab = std::make_shared<Vocabulary>();
        TripleSet train = load_split(f.train, *vocab, Split::Train, false, err);
        res.stats = std::make_shared<GraphStats>(compute_stats(train, *vocab));
        res.vocab = vocab;
        fp += "train:" + sha256_hex(read_text(f.train));
    }
    if (!f.symmetric.empty()) {
        res.symmetric_relations = std::make_shared<std::unordered_set<std::string>>(load_relation_list_file(f.symmetric));
        fp += "|symmetric:" + sha256_hex(read_text(f.symmetric));
    }
    if (!f.types.empty()) {
        res.types = std::make_shared<TypeMap>(TypeMap::load_file(f.types));
        fp += "|types:" + sha256_hex(read_text(f.types));
    }
    if (fingerprint != nullptr) *fingerprint = fp.empty() ? "" : sha256_hex(fp);
    return res;
}

CLI::Option* add_choice(CLI::App* app, const std::string& name, std::string& target, std::vector<std::string> choices,
                        const std::string& help) {
    return app->add_option(name, target, help)->check(CLI::IsMember(std::move(choices)))->capture_default_str();
}

TieStrategy tie_of(const std::string& s) { return *parse_tie_strategy(s); }

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    SyntheticConfig config;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    const SyntheticDataset ds = generate_synthetic(a.config);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    auto write_split = [&](const TripleSet& set, const char* name) {
        std::ostringstream ss;
        write_tsv(ss, set, ds.vocab);
        write_text((dir / name).string(), ss.str());
    };
    write_split(ds.train, "train.tsv");
    write_split(ds.valid, "valid.tsv");
    write_split(ds.test, "test.tsv");
    std::string sym;
    for (RelationId r : ds.symmetric_relations) sym += ds.vocab.relations.label(r) + "\n";
    write_text((dir / "symmetric.txt").string(), sym);
    // Two-level types mirroring the generator's clusters.
    const std::uint32_t n_clusters = a.config.n_entities / a.config.cluster_size;
    std::string types;
    for (std::size_t e = 0; e < ds.vocab.entities.size(); ++e) {
        const auto c = static_cast<std::uint32_t>(e % n_clusters);
        types += ds.vocab.entities.label(static_cast<EntityId>(e)) + "\tgroup-" + std::to_string(c % 4) + "\tcluster-" +
                 std::to_string(c) + "\n";
    }
    write_text((dir / "types.tsv").string(), types);
    out << "synth: " << ds.vocab.entities.size() << " entities, " << ds.vocab.relations.size() << " relations, "
        << ds.train.triples.size() << "/" << ds.valid.triples.size() << "/" << ds.test.triples.size()
        << " train/valid/test triples, " << ds.symmetric_relations.size() << " symmetric relations -> " << a.out
        << "\n";
    return kOk;
}

struct TrainArgs {
    std::string train, valid, test, model, log;
    std::string kind = "distmult", optimizer = "adagrad", loss = "bce";
    TrainConfig config;
};

int cmd_train(TrainArgs& a, std::ostream& out, std::ostream& err) {
    a.config.kind = *parse_model_kind(a.kind);
    a.config.optimizer = a.optimizer == "sgd" ? OptimizerKind::SGD : OptimizerKind::Adagrad;
    a.config.loss = a.loss == "margin" ? LossKind::MarginRanking : LossKind::BinaryCrossEntropy;
    auto vocab = std::make_shared<Vocabulary>();
    const TripleSet train = load_split(a.train, *vocab, Split::Train, false, err);
    std::optional<TripleSet> valid;
    if (!a.valid.empty()) valid = load_split(a.valid, *vocab, Split::Valid, false, err);
    if (!a.test.empty()) load_split(a.test, *vocab, Split::Test, false, err);
    const TrainResult result = kgx::train(a.config, train, valid ? &*valid : nullptr, vocab);
    save_model(result.model, a.model);

    ordered_json meta;
    meta["model"] = a.model;
    meta["kind"] = model_kind_name(a.config.kind);
    meta["dim"] = a.config.dim;
    meta["epochs"] = a.config.epochs;
    meta["batch_size"] = a.config.batch_size;
    meta["negatives"] = a.config.negatives;
    meta["learning_rate"] = a.config.learning_rate;
    meta["optimizer"] = a.optimizer;
    meta["loss"] = a.loss;
    meta["margin"] = a.config.margin;
    meta["l2"] = a.config.l2;
    meta["seed"] = a.config.seed;
    meta["epoch_losses"] = result.epoch_losses;
    write_text(a.log.empty() ? a.model + ".json" : a.log, meta.dump(2) + "\n");
    out << "train: " << model_kind_name(a.config.kind) << " dim " << a.config.dim << ", " << a.config.epochs
        << " epochs, seed " << a.config.seed;
    if (!result.epoch_losses.empty()) out << ", final loss " << result.epoch_losses.back();
    out << " -> " << a.model << "\n";
    return kOk;
}

struct PredictArgs {
    std::string model, train, valid, test, sysout;
    std::string directions = "both", tie = "realistic", basis = "filtered";
    std::string system_name, dataset_name = "dataset";
    std::size_t top_k = 0;
    unsigned workers = 1;
};

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
    const KgeModel model = load_model(a.model);
    Vocabulary vocab = *model.vocab;
    const TripleSet test = load_split(a.test, vocab, Split::Test, true, err);
    FilterIndex filter;
    filter.add(test);
    if (!a.train.empty()) filter.add(load_split(a.train, vocab, Split::Train, true, err));
    if (!a.valid.empty()) filter.add(load_split(a.valid, vocab, Split::Valid, true, err));
    EvalOptions opt;
    opt.directions = *parse_eval_directions(a.directions);
    opt.tie = tie_of(a.tie);
    opt.system_name = a.system_name.empty() ? model_kind_name(model.kind) : a.system_name;
    opt.dataset_name = a.dataset_name;
    opt.top_k = a.top_k;
    opt.workers = a.workers;
    const SystemOutput s = evaluate_to_system_output(model, test, a.basis == "raw" ? nullptr : &filter, opt);
    write_system_output_file(s, a.sysout);
    std::vector<double> ranks;
    for (const auto& r : s.records) ranks.push_back(*r.gold_rank);
    out << "predict: " << s.records.size() << " records, " << rank_basis_name(s.header.rank_basis) << " MRR "
        << std::setprecision(6) << (ranks.empty() ? 0.0 : aggregate(Metric::mrr(), ranks)) << " -> " << a.sysout
        << "\n";
    return kOk;
}

struct IngestArgs {
    std::string input, format = "native", out, store;
    std::string system_name, dataset_name, basis = "filtered";
};

int cmd_ingest(const IngestArgs& a, std::ostream& out) {
    SystemOutput s;
    if (a.format == "native") {
        s = read_system_output_file(a.input);
    } else {
        if (a.system_name.empty() || a.dataset_name.empty()) {
            throw Error(ErrorCode::Config, "--system-name and --dataset-name are required for --format " + a.format);
        }
        AdapterMeta meta{a.system_name, a.dataset_name, *parse_rank_basis(a.basis)};
        std::ifstream in(a.input, std::ios::binary);
        if (!in) throw Error(ErrorCode::NotFound, "cannot open " + a.input);
        s = a.format == "pykeen" ? import_pykeen(in, meta) : import_libkge(in, meta);
    }
    validate(s);
    if (a.out.empty() && a.store.empty()) throw Error(ErrorCode::Config, "ingest needs --out or --store");
    if (!a.out.empty()) write_system_output_file(s, a.out);
    out << "ingest: " << s.records.size() << " records from " << a.input << " (" << a.format << ")";
    if (!a.store.empty()) {
        Store store(a.store);
        out << ", stored as " << store.put(s);
    }
    if (!a.out.empty()) out << " -> " << a.out;
    out << "\n";
    return kOk;
}

struct EvalArgs {
    std::string sysout, report, metric, features, ci = "bootstrap", tie = "realistic";
    double ci_level = 0.95;
    int ci_resamples = 1000;
    std::uint64_t ci_seed = 0;
    std::size_t min_bucket = 5;
    int buckets = 4;
    ResourceFlags resources;
};

AnalysisRequest eval_request(const EvalArgs& a, const SystemOutput& s, const BucketResources& res) {
    AnalysisRequest req;
    if (!a.metric.empty()) req.metrics = parse_metric_list(a.metric);
    req.ci.method = *parse_ci_method(a.ci);
    req.ci.level = a.ci_level;
    req.ci.resamples = a.ci_resamples;
    req.ci.seed = a.ci_seed;
    req.ci.min_bucket_size = a.min_bucket;
    req.tie = tie_of(a.tie);
    req.buckets.continuous_buckets = a.buckets;
    if (!a.features.empty()) {
        std::stringstream ss(a.features);
        for (std::string f; std::getline(ss, f, ',');) {
            if (!f.empty()) req.features.push_back(f);
        }
    } else {
        req.features = available_features(s, res);
    }
    return req;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    if (!(a.ci_level > 0.0 && a.ci_level < 1.0)) throw Error(ErrorCode::Config, "--ci-level must be in (0, 1)");
    const SystemOutput s = read_system_output_file(a.sysout);
    const BucketResources res = load_resources(a.resources, nullptr, err);
    const SingleAnalysisReport report = single_analysis(s, eval_request(a, s, res), res);
    write_text(a.report, analysis_report_json(report));
    out << "eval: " << report.system_name << " on " << report.dataset_name << ", n=" << report.overall.n << "\n";
    out << std::fixed << std::setprecision(6);
    for (const auto& m : report.overall.metrics) {
        out << "  " << std::left << std::setw(8) << m.metric << " " << m.value;
        if (m.interval) out << "  [" << m.interval->low << ", " << m.interval->high << "]";
        out << "\n";
    }
    for (const auto& f : report.features) out << "  feature " << f.name << ": " << f.buckets.size() << " buckets\n";
    out << "  report -> " << a.report << "\n";
    return kOk;
}

struct CompareArgs {
    std::vector<std::string> reports;
    std::string metric = "mrr", out;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
    std::vector<SingleAnalysisReport> reports;
    for (const auto& path : a.reports) reports.push_back(parse_analysis_report(read_text(path)));
    const ComparisonReport cmp = compare_systems(reports, parse_metric(a.metric));
    const std::string doc = comparison_report_json(cmp);
    if (!a.out.empty()) write_text(a.out, doc);
    out << "compare: " << cmp.metric << ", " << cmp.systems.size() << " systems, " << cmp.buckets.size()
        << " buckets\n";
    out << std::fixed << std::setprecision(4);
    for (std::size_t i = 0; i < cmp.systems.size(); ++i) {
        out << "  " << std::left << std::setw(24) << cmp.systems[i].system_name << " overall " << cmp.overall_values[i]
            << " rank " << cmp.overall_ranks[i] << "  b_eq " << cmp.agreement[i].b_eq << "  b_neq "
            << cmp.agreement[i].b_neq << "\n";
    }
    if (!a.out.empty()) out << "  report -> " << a.out << "\n";
    return kOk;
}

struct ServeArgs {
    std::string store = "kgx-store", addr = "127.0.0.1:8080", dataset, ready_file;
    ResourceFlags resources;
};

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
    const auto colon = a.addr.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::Config, "--addr must be host:port");
    const std::string host = a.addr.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(a.addr.substr(colon + 1));
    } catch (const std::exception&) {
        throw Error(ErrorCode::Config, "--addr port is not a number");
    }
    Store store(a.store);
    if (!a.dataset.empty()) {
        std::string fp;
        BucketResources res = load_resources(a.resources, &fp, err);
        store.register_resources(a.dataset, std::move(res), fp);
    } else if (!a.resources.train.empty() || !a.resources.symmetric.empty() || !a.resources.types.empty()) {
        throw Error(ErrorCode::Config, "--dataset is required with --train/--symmetric/--types");
    }
    ApiServer server(store);
    const int bound = server.bind(host, port);
    g_stop = false;
    if (!a.ready_file.empty()) write_text(a.ready_file, std::to_string(bound) + "\n");
    out << "serve: http://" << host << ":" << bound << " store " << a.store << std::endl;
    server.start();
    while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
    out << "serve: stopped\n";
    return kOk;
}

struct DebugArgs {
    std::string model, train, test, relation, symmetric, strategy = "in-danger", report, sysout, tie = "realistic";
    std::string dataset_name = "dataset";
    DebugConfig config;
};

int cmd_debug(DebugArgs& a, std::ostream& out, std::ostream& err) {
    const KgeModel model = load_model(a.model);
    Vocabulary vocab = *model.vocab;
    const TripleSet train = load_split(a.train, vocab, Split::Train, true, err);
    const TripleSet test = load_split(a.test, vocab, Split::Test, true, err);
    std::optional<RelationId> relation;
    if (!a.relation.empty()) {
        auto id = vocab.relations.find(a.relation);
        if (!id) throw Error(ErrorCode::Lookup, "--relation '" + a.relation + "' is not in the model vocabulary");
        relation = *id;
    } else if (!a.symmetric.empty()) {
        std::vector<RelationId> allowed;
        for (const auto& label : load_relation_list_file(a.symmetric)) {
            if (auto id = vocab.relations.find(label)) allowed.push_back(*id);
        }
        const ViolationScan scan = find_symmetry_violations(model, train, std::nullopt, a.config);
        relation = most_violated_among(scan, allowed);
        if (!relation) throw Error(ErrorCode::InsufficientViolations, "no symmetric relation has violations");
    }
    a.config.tie = tie_of(a.tie);
    a.config.dataset_name = a.dataset_name;
    const DebugSession session = run_debug_session(model, train, test, relation, a.config);
    write_text(a.report, debug_report_json(session.report, vocab));
    const std::size_t chosen = a.strategy == "naive" ? 1 : 2;
    if (!a.sysout.empty()) write_system_output_file(session.outputs[chosen], a.sysout);

    const auto& r = session.report;
    out << "debug: relation " << r.relation << ", " << r.violations << " violations, debug set " << r.debug_set.size()
        << ", debugging-test " << r.debug_test.size() << ", in-danger " << r.in_danger.size() << "\n";
    out << std::fixed << std::setprecision(4);
    for (const auto& v : r.variants) {
        out << "  " << std::left << std::setw(10) << debug_variant_name(v.variant) << " debugging-test hits@1 "
            << v.debug_test.value("hits@1") << " mrr " << v.debug_test.value("mrr") << " | original-test hits@1 "
            << v.original_test.value("hits@1") << " mrr " << v.original_test.value("mrr");
        if (v.variant != DebugVariant::Before) out << (v.converged ? "  converged" : "  not converged") << " after " << v.epochs << " epochs";
        out << "\n";
    }
    out << "  strategy " << a.strategy << ", report -> " << a.report;
    if (!a.sysout.empty()) out << ", system output -> " << a.sysout;
    out << "\n";
    return kOk;
}

int exit_code_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::Config: return kUsage;
        case ErrorCode::Storage: return kInternal;
        default: return kDataError;
    }
}

}  // namespace

void request_stop() { g_stop = true; }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bucketized evaluation and debugging of knowledge-graph link prediction", "kgx"};
    app.require_subcommand(1);
    app.fallthrough(false);

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "generate a synthetic dataset");
    c_synth->add_option("--out", synth.out, "output directory")->required();
    c_synth->add_option("--entities", synth.config.n_entities)->capture_default_str();
    c_synth->add_option("--relations", synth.config.n_relations)->capture_default_str();
    c_synth->add_option("--triples", synth.config.n_triples, "base triples")->capture_default_str();
    c_synth->add_option("--symmetric-fraction", synth.config.symmetric_fraction)->capture_default_str();
    c_synth->add_option("--reverse-probability", synth.config.reverse_probability)->capture_default_str();
    c_synth->add_option("--cluster-size", synth.config.cluster_size)->capture_default_str();
    c_synth->add_option("--valid-fraction", synth.config.valid_fraction)->capture_default_str();
    c_synth->add_option("--test-fraction", synth.config.test_fraction)->capture_default_str();
    c_synth->add_option("--seed", synth.config.seed)->capture_default_str();

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "train an embedding model");
    c_train->add_option("--train", tr.train)->required();
    c_train->add_option("--valid", tr.valid);
    c_train->add_option("--test", tr.test, "test split; only its labels enter the vocabulary");
    c_train->add_option("--model", tr.model, "output model file")->required();
    c_train->add_option("--log", tr.log, "training log (default <model>.json)");
    add_choice(c_train, "--kind", tr.kind, {"transe", "distmult", "rescal", "rotate"}, "model kind");
    c_train->add_option("--dim", tr.config.dim)->capture_default_str()->check(CLI::PositiveNumber);
    c_train->add_option("--epochs", tr.config.epochs)->capture_default_str()->check(CLI::NonNegativeNumber);
    c_train->add_option("--batch-size", tr.config.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
    c_train->add_option("--negatives", tr.config.negatives)->capture_default_str()->check(CLI::PositiveNumber);
    c_train->add_option("--lr", tr.config.learning_rate)->capture_default_str()->check(CLI::PositiveNumber);
    add_choice(c_train, "--optimizer", tr.optimizer, {"sgd", "adagrad"}, "optimizer");
    add_choice(c_train, "--loss", tr.loss, {"bce", "margin"}, "loss");
    c_train->add_option("--margin", tr.config.margin)->capture_default_str();
    c_train->add_option("--l2", tr.config.l2)->capture_default_str()->check(CLI::NonNegativeNumber);
    c_train->add_option("--seed", tr.config.seed)->capture_default_str();

    PredictArgs pr;
    auto* c_predict = app.add_subcommand("predict", "rank a test split with a trained model");
    c_predict->add_option("--model", pr.model)->required();
    c_predict->add_option("--test", pr.test)->required();
    c_predict->add_option("--train", pr.train, "known triples for filtering");
    c_predict->add_option("--valid", pr.valid, "known triples for filtering");
    c_predict->add_option("--sysout", pr.sysout, "output system-output file")->required();
    add_choice(c_predict, "--directions", pr.directions, {"tail", "head", "both"}, "query directions");
    add_choice(c_predict, "--tie", pr.tie, {"optimistic", "pessimistic", "realistic"}, "tie handling");
    add_choice(c_predict, "--rank-basis", pr.basis, {"filtered", "raw"}, "rank basis");
    c_predict->add_option("--system-name", pr.system_name);
    c_predict->add_option("--dataset-name", pr.dataset_name)->capture_default_str();
    c_predict->add_option("--top-k", pr.top_k, "candidates listed per record")->capture_default_str();
    c_predict->add_option("--workers", pr.workers)->capture_default_str()->check(CLI::PositiveNumber);

    IngestArgs in;
    auto* c_ingest = app.add_subcommand("ingest", "validate or convert a system output");
    c_ingest->add_option("--sysout", in.input, "input file")->required();
    add_choice(c_ingest, "--format", in.format, {"native", "pykeen", "libkge"}, "input format");
    c_ingest->add_option("--out", in.out, "native output file");
    c_ingest->add_option("--store", in.store, "store directory to upload into");
    c_ingest->add_option("--system-name", in.system_name);
    c_ingest->add_option("--dataset-name", in.dataset_name);
    add_choice(c_ingest, "--rank-basis", in.basis, {"filtered", "raw"}, "rank basis of a dump");

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "single-system bucketized analysis");
    c_eval->add_option("--sysout", ev.sysout)->required();
    c_eval->add_option("--report", ev.report, "output report file")->required();
    c_eval->add_option("--metric", ev.metric, "comma-separated metrics (default hits@1,hits@3,hits@10,mrr,mr)");
    c_eval->add_option("--features", ev.features, "comma-separated features (default: all available)");
    add_choice(c_eval, "--ci", ev.ci, {"none", "bootstrap", "ttest"}, "interval method");
    c_eval->add_option("--ci-level", ev.ci_level)->capture_default_str();
    c_eval->add_option("--ci-resamples", ev.ci_resamples)->capture_default_str();
    c_eval->add_option("--ci-seed", ev.ci_seed)->capture_default_str();
    c_eval->add_option("--ci-min-bucket", ev.min_bucket)->capture_default_str();
    c_eval->add_option("--buckets", ev.buckets, "quantile buckets for continuous features")->capture_default_str();
    add_choice(c_eval, "--tie", ev.tie, {"optimistic", "pessimistic", "realistic"}, "tie handling");
    add_resource_flags(c_eval, ev.resources);

    CompareArgs cmp;
    auto* c_compare = app.add_subcommand("compare", "compare analysis reports bucket by bucket");
    c_compare->add_option("--reports", cmp.reports)->required()->expected(2, -1);
    c_compare->add_option("--metric", cmp.metric)->capture_default_str();
    c_compare->add_option("--out", cmp.out, "output comparison report");

    ServeArgs sv;
    auto* c_serve = app.add_subcommand("serve", "run the HTTP API");
    c_serve->add_option("--store", sv.store)->capture_default_str();
    c_serve->add_option("--addr", sv.addr, "host:port (port 0 picks one)")->capture_default_str();
    c_serve->add_option("--dataset", sv.dataset, "dataset name the resource flags apply to");
    c_serve->add_option("--ready-file", sv.ready_file, "file receiving the bound port");
    add_resource_flags(c_serve, sv.resources);

    DebugArgs db;
    auto* c_debug = app.add_subcommand("debug", "symmetry-violation debugging");
    c_debug->add_option("--model", db.model)->required();
    c_debug->add_option("--train", db.train)->required();
    c_debug->add_option("--test", db.test)->required();
    c_debug->add_option("--relation", db.relation, "relation label (default: most violated)");
    c_debug->add_option("--symmetric", db.symmetric, "restrict the default relation to those listed in this file");
    add_choice(c_debug, "--strategy", db.strategy, {"naive", "in-danger"}, "variant written to --sysout");
    c_debug->add_option("--report", db.report)->required();
    c_debug->add_option("--sysout", db.sysout, "system output of the chosen strategy");
    c_debug->add_option("--seed", db.config.seed)->capture_default_str();
    c_debug->add_option("--epoch-cap", db.config.epoch_cap)->capture_default_str()->check(CLI::PositiveNumber);
    c_debug->add_option("--lr", db.config.finetune_lr)->capture_default_str()->check(CLI::PositiveNumber);
    c_debug->add_option("--debug-size", db.config.debug_set_size)->capture_default_str()->check(CLI::PositiveNumber);
    c_debug->add_option("--in-danger-size", db.config.in_danger_size)->capture_default_str()->check(CLI::PositiveNumber);
    c_debug->add_option("--workers", db.config.workers)->capture_default_str()->check(CLI::PositiveNumber);
    c_debug->add_option("--dataset-name", db.dataset_name)->capture_default_str();
    add_choice(c_debug, "--tie", db.tie, {"optimistic", "pessimistic", "realistic"}, "tie handling");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) return kOk;
        err << app.help();
        return kUsage;
    }

    try {
        if (c_synth->parsed()) return cmd_synth(synth, out);
        if (c_train->parsed()) return cmd_train(tr, out, err);
        if (c_predict->parsed()) return cmd_predict(pr, out, err);
        if (c_ingest->parsed()) return cmd_ingest(in, out);
        if (c_eval->parsed()) return cmd_eval(ev, out, err);
        if (c_compare->parsed()) return cmd_compare(cmp, out);
        if (c_serve->parsed()) return cmd_serve(sv, out, err);
        if (c_debug->parsed()) return cmd_debug(db, out, err);
    } catch (const Error& e) {
        err << "kgx: " << error_code_name(e.code()) << ": " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "kgx: internal error: " << e.what() << "\n";
        return kInternal;
    }
    err << app.help();
    return kUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace kgx::cli
