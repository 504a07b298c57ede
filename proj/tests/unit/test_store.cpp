#include <gtest/gtest.h>

#include <random>

#include "kgx/error.hpp"
#include "kgx/store.hpp"
#include "test_support.hpp"

using namespace kgx;
using namespace kgx::testing;
namespace fs = std::filesystem;

namespace {

SystemOutput sample(std::uint64_t seed, const std::string& name = "sys") {
    std::mt19937_64 rng(seed);
    return random_output(rng, 60, 30, name);
}

std::size_t entries_in(const fs::path& dir) {
    if (!fs::exists(dir)) return 0;
    return static_cast<std::size_t>(std::distance(fs::directory_iterator(dir), fs::directory_iterator()));
}

AnalysisRequest colour_request() {
    AnalysisRequest r;
    r.features = {"colour", "relation-label"};
    r.ci.resamples = 200;
    return r;
}

}  // namespace

TEST(Store, EmptyStore) {
    Store store(scratch_dir("store-empty"));
    EXPECT_TRUE(store.list().empty());
    EXPECT_FALSE(store.contains(std::string(64, 'a')));
    EXPECT_FALSE(store.contains("not-an-id"));
    try {
        store.get(std::string(64, 'b'));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotFound);
    }
}

TEST(Store, PutIsIdempotentAndRoundTrips) {
    const auto root = scratch_dir("store-put");
    Store store(root);
    const auto s = sample(1);
    const auto id = store.put(s);
    EXPECT_TRUE(is_system_id(id));
    EXPECT_EQ(store.put(s), id);
    EXPECT_EQ(entries_in(root / "systems"), 1u);
    EXPECT_EQ(store.get(id), s);
    const auto e = store.entry(id);
    EXPECT_EQ(e.header, s.header);
    EXPECT_EQ(e.record_count, s.records.size());
    EXPECT_FALSE(e.created_at.empty());

    auto invalid = s;
    invalid.records[0].gold_rank = 0.0;
    EXPECT_THROW(store.put(invalid), Error);
}

TEST(Store, ListInInsertionOrderSurvivesReopen) {
    const auto root = scratch_dir("store-list");
    std::vector<std::string> ids;
    {
        Store store(root);
        for (std::uint64_t seed : {5u, 2u, 9u}) ids.push_back(store.put(sample(seed)));
    }
    Store reopened(root);
    auto list = reopened.list();
    ASSERT_EQ(list.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(list[i].id, ids[i]);
    const auto next = reopened.put(sample(11));
    EXPECT_GT(reopened.entry(next).sequence, list.back().sequence);
}

TEST(Store, DeleteThenNotFound) {
    const auto root = scratch_dir("store-del");
    Store store(root);
    const auto id = store.put(sample(3));
    store.analysis_json(id, colour_request());
    store.remove(id);
    EXPECT_FALSE(store.contains(id));
    EXPECT_TRUE(store.list().empty());
    for (auto fn : std::vector<std::function<void()>>{[&] { store.get(id); }, [&] { store.entry(id); },
                                                      [&] { store.remove(id); },
                                                      [&] { store.analysis_json(id, colour_request()); }}) {
        try {
            fn();
            ADD_FAILURE();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::NotFound);
        }
    }
    EXPECT_EQ(entries_in(root / "tmp"), 0u);
}

TEST(Store, CrashDuringWriteLeavesNoTrace) {
    const auto root = scratch_dir("store-fault");
    std::string kept;
    {
        Store store(root);
        kept = store.put(sample(1));
        store.set_fault_hook([](std::string_view stage) {
            if (stage == "system-temp-written") throw std::runtime_error("simulated crash");
        });
        EXPECT_THROW(store.put(sample(2)), std::runtime_error);
    }
    Store reopened(root);
    EXPECT_EQ(entries_in(root / "tmp"), 0u);
    auto list = reopened.list();
    ASSERT_EQ(list.size(), 1u);
    EXPECT_EQ(list[0].id, kept);
    // The interrupted system can be stored afterwards.
    EXPECT_NO_THROW(reopened.put(sample(2)));
}

TEST(Store, CrashDuringReportWriteLeavesNoCache) {
    const auto root = scratch_dir("store-fault-report");
    std::string id;
    {
        Store store(root);
        id = store.put(sample(4));
        store.set_fault_hook([](std::string_view stage) {
            if (stage == "report-temp-written") throw std::runtime_error("simulated crash");
        });
        EXPECT_THROW(store.analysis_json(id, colour_request()), std::runtime_error);
    }
    Store reopened(root);
    EXPECT_EQ(entries_in(root / "tmp"), 0u);
    EXPECT_EQ(entries_in(root / "systems" / id / "reports"), 0u);
    reopened.analysis_json(id, colour_request());
    EXPECT_EQ(reopened.computations(), 1u);
}

TEST(Store, AnalysisCache) {
    Store store(scratch_dir("store-cache"));
    const auto s = sample(6);
    const auto id = store.put(s);
    const auto req = colour_request();
    const auto first = store.analysis_json(id, req);
    EXPECT_EQ(store.computations(), 1u);
    EXPECT_EQ(store.analysis_json(id, req), first);
    EXPECT_EQ(store.computations(), 1u);

    // Duplicated features and worker counts normalize to the same key.
    auto dup = req;
    dup.features.push_back("colour");
    dup.ci.workers = 4;
    EXPECT_EQ(store.analysis_json(id, dup), first);
    EXPECT_EQ(store.computations(), 1u);

    auto reseeded = req;
    reseeded.ci.seed = 99;
    store.analysis_json(id, reseeded);
    EXPECT_EQ(store.computations(), 2u);

    // Cached document equals a fresh computation.
    auto direct = req;
    EXPECT_EQ(first, analysis_report_json(single_analysis(s, direct)));

    // New resources for the dataset change the key.
    store.register_resources(s.header.dataset_name, {}, "v2");
    store.analysis_json(id, req);
    EXPECT_EQ(store.computations(), 3u);
}

TEST(Store, DefaultFeaturesFollowResources) {
    Store store(scratch_dir("store-features"));
    const auto s = sample(8);
    const auto id = store.put(s);
    auto feats = available_features(s, {});
    EXPECT_NE(std::find(feats.begin(), feats.end(), "relation-label"), feats.end());
    EXPECT_NE(std::find(feats.begin(), feats.end(), "colour"), feats.end());
    EXPECT_EQ(std::find(feats.begin(), feats.end(), "relation-symmetry"), feats.end());

    BucketResources res;
    res.symmetric_relations = std::make_shared<std::unordered_set<std::string>>(std::unordered_set<std::string>{"p1"});
    store.register_resources(s.header.dataset_name, res, "sym");
    auto report = store.analysis(id, AnalysisRequest{});
    bool has_sym = false;
    for (const auto& f : report.features) has_sym |= f.name == "relation-symmetry";
    EXPECT_TRUE(has_sym);
}

TEST(Store, IdShape) {
    EXPECT_TRUE(is_system_id(std::string(64, 'f')));
    EXPECT_FALSE(is_system_id(std::string(63, 'f')));
    EXPECT_FALSE(is_system_id(std::string(64, 'g')));
    EXPECT_FALSE(is_system_id("../" + std::string(61, 'a')));
}
