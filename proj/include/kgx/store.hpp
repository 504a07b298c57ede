#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "kgx/analysis.hpp"
#include "kgx/bucketizer.hpp"
#include "kgx/system_output.hpp"

namespace kgx {

struct SystemEntry {
    std::string id;  // sha256 of the canonical serialization
    SystemHeader header;
    std::string created_at;  // UTC, ISO 8601
    std::uint64_t sequence = 0;  // insertion order
    std::size_t record_count = 0;
    std::filesystem::path directory;
};

// Features resolvable for `s`: every built-in whose resources are present,
// then the header's custom features (names not shadowed by a built-in).
std::vector<std::string> available_features(const SystemOutput& s, const BucketResources& resources);

// Directory-backed store:
//   <root>/systems/<id>/meta.json
//   <root>/systems/<id>/records.jsonl
//   <root>/systems/<id>/reports/<key>.json
// New systems are written under <root>/tmp and renamed into place.
class Store {
public:
    explicit Store(std::filesystem::path root);

    // Idempotent: identical canonical content gives the same id and one copy.
    // Throws Error(Validation) for invalid outputs, Error(Storage) on IO failure.
    std::string put(const SystemOutput& s);

    std::vector<SystemEntry> list() const;  // by insertion order
    SystemEntry entry(const std::string& id) const;  // Error(NotFound)
    SystemOutput get(const std::string& id) const;
    void remove(const std::string& id);
    bool contains(const std::string& id) const;

    // Cached single analysis, keyed by id and the normalized request. An empty
    // feature list means available_features(). Returns the report document.
    std::string analysis_json(const std::string& id, const AnalysisRequest& request);
    SingleAnalysisReport analysis(const std::string& id, const AnalysisRequest& request);

    // Bucket resources used for systems whose header names `dataset`.
    // `fingerprint` identifies the resource content in cache keys.
    void register_resources(const std::string& dataset, BucketResources resources, std::string fingerprint);
    BucketResources resources_for(const std::string& dataset) const;

    // Number of analyses computed (cache misses).
    std::size_t computations() const { return computations_.load(); }

    // Test hook, called at named points of a write ("system-temp-written",
    // "report-temp-written"); throwing from it simulates a crash.
    using FaultHook = std::function<void(std::string_view stage)>;
    void set_fault_hook(FaultHook hook) { fault_hook_ = std::move(hook); }

    const std::filesystem::path& root() const { return root_; }

private:
    struct Registered {
        BucketResources resources;
        std::string fingerprint;
    };

    std::filesystem::path system_dir(const std::string& id) const;
    SystemEntry read_entry(const std::filesystem::path& dir) const;
    AnalysisRequest normalize(const std::string& id, const AnalysisRequest& request, const SystemOutput& s) const;
    std::string cache_key(const AnalysisRequest& request, const std::string& dataset) const;
    void fault(std::string_view stage) const;

    std::filesystem::path root_;
    mutable std::shared_mutex mu_;
    std::map<std::string, Registered> resources_;
    std::uint64_t next_sequence_ = 1;
    std::atomic<std::size_t> computations_{0};
    FaultHook fault_hook_;
};

// Id shape check: 64 lowercase hex characters.
bool is_system_id(std::string_view id);

}  // namespace kgx
