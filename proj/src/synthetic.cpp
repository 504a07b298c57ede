#include "kgx/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kgx/error.hpp"
#include "kgx/random.hpp"

namespace kgx {
namespace {

enum class Shape { Uniform, HeadPool, TailPool };

std::string padded(char prefix, std::uint32_t value, std::uint32_t count) {
    const auto width = std::to_string(count > 0 ? count - 1 : 0).size();
    auto digits = std::to_string(value);
    return std::string(1, prefix) + std::string(width - digits.size(), '0') + digits;
}

void validate(const SyntheticConfig& c) {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::Validation, "synthetic config: " + msg); };
    if (c.n_triples < 10) fail("n_triples must be >= 10");
    if (c.n_relations < 1) fail("n_relations must be >= 1");
    if (c.cluster_size < 2) fail("cluster_size must be >= 2");
    if (c.n_entities < 2 * c.cluster_size) fail("n_entities must be >= 2 * cluster_size");
    if (!(c.symmetric_fraction >= 0.0 && c.symmetric_fraction <= 1.0)) fail("symmetric_fraction must lie in [0,1]");
    if (!(c.valid_fraction >= 0.0 && c.test_fraction >= 0.0 && c.valid_fraction + c.test_fraction < 1.0)) {
        fail("valid_fraction + test_fraction must lie in [0,1)");
    }
    if (!(c.reverse_probability >= 0.5 && c.reverse_probability <= 1.0)) {
        fail("reverse_probability must lie in [0.5,1]");
    }
    const double per_relation = std::ceil(static_cast<double>(c.n_triples) / c.n_relations);
    const auto n_sym = static_cast<std::uint32_t>(std::lround(c.symmetric_fraction * c.n_relations));
    // Demand at most half of the smallest per-relation capacity. Pool-restricted
    // shapes draw one side from a third of the entities.
    const double slots = static_cast<double>(c.cluster_size - 1);
    double capacity = static_cast<double>(c.n_entities) * slots;
    if (n_sym < c.n_relations) capacity = std::max(1u, c.n_entities / 3) * slots;
    if (per_relation > 0.5 * capacity) {
        fail("n_triples too large for n_entities/n_relations/cluster_size");
    }
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticConfig& config) {
    validate(config);
    Rng rng(config.seed);
    SyntheticDataset out;

    const std::uint32_t n_e = config.n_entities;
    const std::uint32_t n_clusters = n_e / config.cluster_size;
    for (std::uint32_t e = 0; e < n_e; ++e) out.vocab.entities.intern(padded('e', e, n_e));
    for (std::uint32_t r = 0; r < config.n_relations; ++r) out.vocab.relations.intern(padded('r', r, config.n_relations));

    // cluster(e) = e % n_clusters; trailing entities beyond a full grid join
    // the clusters round-robin as well.
    std::vector<std::vector<EntityId>> members(n_clusters);
    for (EntityId e = 0; e < n_e; ++e) members[e % n_clusters].push_back(e);
    auto cluster_of = [&](EntityId e) { return e % n_clusters; };

    const auto n_sym = static_cast<std::uint32_t>(std::lround(config.symmetric_fraction * config.n_relations));
    for (RelationId r = 0; r < n_sym; ++r) out.symmetric_relations.push_back(r);

    struct RelationPlan {
        std::vector<std::uint32_t> target;   // cluster -> cluster
        std::vector<std::uint32_t> source;   // inverse of target
        Shape shape = Shape::Uniform;
        std::vector<EntityId> pool;
    };
    std::vector<RelationPlan> plans(config.n_relations);
    for (RelationId r = 0; r < config.n_relations; ++r) {
        auto& plan = plans[r];
        std::vector<std::uint32_t> order(n_clusters);
        std::iota(order.begin(), order.end(), 0u);
        shuffle(std::span(order), rng);
        plan.target.assign(n_clusters, 0);
        if (r < n_sym) {
            for (std::size_t i = 0; i + 1 < order.size(); i += 2) {
                plan.target[order[i]] = order[i + 1];
                plan.target[order[i + 1]] = order[i];
            }
            if (order.size() % 2 == 1) plan.target[order.back()] = order.back();
        } else {
            for (std::uint32_t c = 0; c < n_clusters; ++c) plan.target[c] = order[c];
            const std::uint32_t k = r - n_sym;
            plan.shape = static_cast<Shape>(k % 3);
        }
        plan.source.assign(n_clusters, 0);
        for (std::uint32_t c = 0; c < n_clusters; ++c) plan.source[plan.target[c]] = c;
        if (plan.shape != Shape::Uniform) {
            std::vector<EntityId> all(n_e);
            std::iota(all.begin(), all.end(), 0u);
            shuffle(std::span(all), rng);
            all.resize(std::max(1u, n_e / 3));
            std::sort(all.begin(), all.end());
            plan.pool = std::move(all);
        }
    }

    auto pick = [&](const std::vector<EntityId>& from) { return from[uniform_index(rng, from.size())]; };

    TripleIndex seen;
    std::vector<Triple> base;
    base.reserve(config.n_triples);
    for (RelationId r = 0; r < config.n_relations; ++r) {
        const std::uint32_t quota = config.n_triples / config.n_relations + (r < config.n_triples % config.n_relations ? 1 : 0);
        const auto& plan = plans[r];
        std::uint32_t made = 0;
        std::uint64_t attempts = 0;
        const std::uint64_t max_attempts = 200ull * quota + 1000;
        while (made < quota) {
            if (++attempts > max_attempts) {
                throw Error(ErrorCode::Validation, "synthetic config: could not place enough distinct triples");
            }
            EntityId h = 0;
            EntityId t = 0;
            switch (plan.shape) {
                case Shape::Uniform:
                    h = static_cast<EntityId>(uniform_index(rng, n_e));
                    t = pick(members[plan.target[cluster_of(h)]]);
                    break;
                case Shape::HeadPool:
                    h = pick(plan.pool);
                    t = pick(members[plan.target[cluster_of(h)]]);
                    break;
                case Shape::TailPool:
                    t = pick(plan.pool);
                    h = pick(members[plan.source[cluster_of(t)]]);
                    break;
            }
            if (h == t) continue;
            const Triple triple{h, r, t};
            if (!seen.insert(triple).second) continue;
            base.push_back(triple);
            ++made;
        }
    }

    shuffle(std::span(base), rng);
    const auto n_test = static_cast<std::size_t>(std::lround(config.test_fraction * base.size()));
    const auto n_valid = static_cast<std::size_t>(std::lround(config.valid_fraction * base.size()));
    out.test.triples.assign(base.begin(), base.begin() + n_test);
    out.valid.triples.assign(base.begin() + n_test, base.begin() + n_test + n_valid);
    out.train.triples.assign(base.begin() + n_test + n_valid, base.end());

    for (const auto& t : base) {
        if (t.relation >= n_sym) continue;
        if (uniform_unit(rng) >= config.reverse_probability) continue;
        const Triple rev{t.tail, t.relation, t.head};
        if (!seen.insert(rev).second) continue;
        out.train.triples.push_back(rev);
    }
    return out;
}

}  // namespace kgx
