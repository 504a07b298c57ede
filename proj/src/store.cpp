#include "kgx/store.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "kgx/error.hpp"
#include "kgx/hash.hpp"

namespace kgx {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool is_system_id(std::string_view id) {
    return id.size() == 64 &&
           std::all_of(id.begin(), id.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

std::vector<std::string> available_features(const SystemOutput& s, const BucketResources& resources) {
    std::vector<std::string> out;
    for (BuiltinKind kind : all_builtins()) {
        try {
            assign_builtin(s, kind, resources);
            out.emplace_back(builtin_name(kind));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Config) throw;
        }
    }
    for (const auto& [name, def] : s.header.custom_features) {
        if (!parse_builtin(name)) out.push_back(name);
    }
    return out;
}

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::Storage, "cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, std::string_view data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Storage, "cannot write " + p.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::Storage, "write failed for " + p.string());
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string unique_suffix() {
    static std::atomic<std::uint64_t> counter{0};
    const auto ticks = std::chrono::steady_clock::now().time_since_epoch().count();
    return std::to_string(ticks) + "-" + std::to_string(counter.fetch_add(1));
}

}  // namespace

Store::Store(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_ / "systems", ec);
    if (ec) throw Error(ErrorCode::Storage, "cannot create store at " + root_.string() + ": " + ec.message());
    // Anything left in tmp belongs to an interrupted write.
    fs::remove_all(root_ / "tmp", ec);
    fs::create_directories(root_ / "tmp", ec);
    if (ec) throw Error(ErrorCode::Storage, "cannot create " + (root_ / "tmp").string() + ": " + ec.message());
    for (const auto& dir : fs::directory_iterator(root_ / "systems")) {
        if (!dir.is_directory() || !is_system_id(dir.path().filename().string())) continue;
        const auto e = read_entry(dir.path());
        next_sequence_ = std::max(next_sequence_, e.sequence + 1);
    }
}

fs::path Store::system_dir(const std::string& id) const { return root_ / "systems" / id; }

void Store::fault(std::string_view stage) const {
    if (fault_hook_) fault_hook_(stage);
}

SystemEntry Store::read_entry(const fs::path& dir) const {
    json meta;
    try {
        meta = json::parse(read_file(dir / "meta.json"));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Storage, "corrupt metadata in " + dir.string() + ": " + e.what());
    }
    SystemEntry e;
    e.id = meta.at("id").get<std::string>();
    e.sequence = meta.at("sequence").get<std::uint64_t>();
    e.created_at = meta.at("created_at").get<std::string>();
    e.record_count = meta.at("record_count").get<std::size_t>();
    e.header = parse_system_output(meta.at("header").dump()).header;
    e.directory = dir;
    return e;
}

std::string Store::put(const SystemOutput& s) {
    validate(s);
    const std::string text = emit_system_output(s);
    const std::string id = sha256_hex(text);
    std::unique_lock lock(mu_);
    const fs::path final_dir = system_dir(id);
    if (fs::exists(final_dir / "meta.json")) return id;

    const fs::path tmp = root_ / "tmp" / (id + "." + unique_suffix());
    try {
        fs::create_directories(tmp / "reports");
        write_file(tmp / "records.jsonl", text);
        ordered_json meta;
        meta["id"] = id;
        meta["sequence"] = next_sequence_;
        meta["created_at"] = utc_now();
        meta["record_count"] = s.records.size();
        meta["header"] = ordered_json::parse(text.substr(0, text.find('\n')));
        write_file(tmp / "meta.json", meta.dump(2) + "\n");
        fault("system-temp-written");
        fs::rename(tmp, final_dir);
    } catch (const fs::filesystem_error& e) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw Error(ErrorCode::Storage, std::string("storing system failed: ") + e.what());
    } catch (const Error&) {
        std::error_code ec;
        fs::remove_all(tmp, ec);
        throw;
    }
    ++next_sequence_;
    return id;
}

bool Store::contains(const std::string& id) const {
    if (!is_system_id(id)) return false;
    std::shared_lock lock(mu_);
    return fs::exists(system_dir(id) / "meta.json");
}

std::vector<SystemEntry> Store::list() const {
    std::shared_lock lock(mu_);
    std::vector<SystemEntry> out;
    for (const auto& dir : fs::directory_iterator(root_ / "systems")) {
        if (!dir.is_directory() || !is_system_id(dir.path().filename().string())) continue;
        out.push_back(read_entry(dir.path()));
    }
    std::sort(out.begin(), out.end(), [](const SystemEntry& a, const SystemEntry& b) { return a.sequence < b.sequence; });
    return out;
}

SystemEntry Store::entry(const std::string& id) const {
    if (!is_system_id(id)) throw Error(ErrorCode::NotFound, "unknown system id '" + id + "'");
    std::shared_lock lock(mu_);
    const auto dir = system_dir(id);
    if (!fs::exists(dir / "meta.json")) throw Error(ErrorCode::NotFound, "unknown system id '" + id + "'");
    return read_entry(dir);
}

SystemOutput Store::get(const std::string& id) const {
    if (!is_system_id(id)) throw Error(ErrorCode::NotFound, "unknown system id '" + id + "'");
    std::shared_lock lock(mu_);
    const auto dir = system_dir(id);
    if (!fs::exists(dir / "meta.json")) throw Error(ErrorCode::NotFound, "unknown system id '" + id + "'");
    return parse_system_output(read_file(dir / "records.jsonl"));
}

void Store::remove(const std::string& id) {
    if (!is_system_id(id)) throw Error(ErrorCode::NotFound, "unknown system id '" + id + "'");
    std::unique_lock lock(mu_);
    const auto dir = system_dir(id);
    if (!fs::exists(dir / "meta.json")) throw Error(ErrorCode::NotFound, "unknown system id '" + id + "'");
    const fs::path doomed = root_ / "tmp" / (id + ".deleted." + unique_suffix());
    std::error_code ec;
    fs::rename(dir, doomed, ec);
    if (ec) throw Error(ErrorCode::Storage, "cannot delete " + id + ": " + ec.message());
    fs::remove_all(doomed, ec);
}

void Store::register_resources(const std::string& dataset, BucketResources resources, std::string fingerprint) {
    std::unique_lock lock(mu_);
    resources_[dataset] = Registered{std::move(resources), std::move(fingerprint)};
}

BucketResources Store::resources_for(const std::string& dataset) const {
    std::shared_lock lock(mu_);
    auto it = resources_.find(dataset);
    return it == resources_.end() ? BucketResources{} : it->second.resources;
}

AnalysisRequest Store::normalize(const std::string&, const AnalysisRequest& request, const SystemOutput& s) const {
    AnalysisRequest r = request;
    r.ci.workers = 1;
    if (r.features.empty()) {
        r.features = available_features(s, resources_for(s.header.dataset_name));
    } else {
        std::vector<std::string> unique;
        std::set<std::string> seen;
        for (const auto& f : r.features) {
            if (seen.insert(f).second) unique.push_back(f);
        }
        r.features = std::move(unique);
    }
    return r;
}

std::string Store::cache_key(const AnalysisRequest& r, const std::string& dataset) const {
    ordered_json k;
    k["features"] = r.features;
    k["metrics"] = json::array();
    for (const auto& m : r.metrics) k["metrics"].push_back(m.name());
    k["ci"] = {{"method", ci_method_name(r.ci.method)},
               {"level", r.ci.level},
               {"resamples", r.ci.resamples},
               {"seed", r.ci.seed},
               {"min_bucket_size", r.ci.min_bucket_size}};
    k["tie"] = tie_strategy_name(r.tie);
    k["buckets"] = {r.buckets.continuous_buckets, r.buckets.relation_label_cap};
    k["sample_cap"] = r.sample_cap;
    {
        std::shared_lock lock(mu_);
        auto it = resources_.find(dataset);
        k["resources"] = it == resources_.end() ? "" : it->second.fingerprint;
    }
    return sha256_hex(k.dump()).substr(0, 32);
}

std::string Store::analysis_json(const std::string& id, const AnalysisRequest& request) {
    const SystemOutput s = get(id);
    const AnalysisRequest r = normalize(id, request, s);
    const std::string key = cache_key(r, s.header.dataset_name);
    const fs::path cached = system_dir(id) / "reports" / (key + ".json");
    {
        std::shared_lock lock(mu_);
        if (fs::exists(cached)) return read_file(cached);
    }
    const std::string doc = analysis_report_json(single_analysis(s, r, resources_for(s.header.dataset_name)));
    ++computations_;

    std::unique_lock lock(mu_);
    if (!fs::exists(system_dir(id) / "meta.json")) throw Error(ErrorCode::NotFound, "system '" + id + "' was deleted");
    if (fs::exists(cached)) return read_file(cached);
    const fs::path tmp = root_ / "tmp" / (key + "." + unique_suffix());
    try {
        write_file(tmp, doc);
        fault("report-temp-written");
        fs::rename(tmp, cached);
    } catch (const fs::filesystem_error& e) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw Error(ErrorCode::Storage, std::string("caching report failed: ") + e.what());
    } catch (const Error&) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
    return doc;
}

SingleAnalysisReport Store::analysis(const std::string& id, const AnalysisRequest& request) {
    return parse_analysis_report(analysis_json(id, request));
}

}  // namespace kgx
