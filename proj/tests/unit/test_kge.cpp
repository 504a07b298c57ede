#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "kgx/error.hpp"
#include "kgx/kge_eval.hpp"
#include "kgx/kge_model.hpp"
#include "kgx/kge_train.hpp"
#include "kgx/synthetic.hpp"

using namespace kgx;

namespace {

constexpr ModelKind kAllKinds[] = {ModelKind::TransE, ModelKind::DistMult, ModelKind::RESCAL, ModelKind::RotatE};

std::shared_ptr<Vocabulary> vocab_of(int entities, int relations) {
    auto v = std::make_shared<Vocabulary>();
    for (int i = 0; i < entities; ++i) v->entities.intern("e" + std::to_string(i));
    for (int i = 0; i < relations; ++i) v->relations.intern("r" + std::to_string(i));
    return v;
}

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST(KgeMath, GradientsMatchFiniteDifferences) {
    std::mt19937_64 rng(17);
    const std::uint32_t dim = 5;
    const double eps = 1e-5;
    for (auto kind : kAllKinds) {
        for (int trial = 0; trial < 10; ++trial) {
            auto h = random_vec(rng, entity_width(kind, dim));
            auto r = kind == ModelKind::RotatE ? random_vec(rng, dim, 0.0, kge_math::kTwoPi)
                                               : random_vec(rng, relation_width(kind, dim));
            auto t = random_vec(rng, entity_width(kind, dim));
            std::vector<double> gh(h.size()), gr(r.size()), gt(t.size());
            const double s = kge_math::score_grad<double>(kind, h, r, t, dim, gh, gr, gt);
            EXPECT_NEAR(s, kge_math::score<double>(kind, h, r, t, dim), 1e-12);

            auto check = [&](std::vector<double>& p, const std::vector<double>& g, const char* block) {
                for (std::size_t i = 0; i < p.size(); ++i) {
                    const double keep = p[i];
                    p[i] = keep + eps;
                    const double up = kge_math::score<double>(kind, h, r, t, dim);
                    p[i] = keep - eps;
                    const double down = kge_math::score<double>(kind, h, r, t, dim);
                    p[i] = keep;
                    const double numeric = (up - down) / (2 * eps);
                    const double rel = std::fabs(numeric - g[i]) / std::max(1.0, std::fabs(numeric) + std::fabs(g[i]));
                    EXPECT_LT(rel, 1e-4) << model_kind_name(kind) << " " << block << "[" << i << "]";
                }
            };
            check(h, gh, "head");
            check(r, gr, "relation");
            check(t, gt, "tail");
        }
    }
}

TEST(KgeMath, DistMultIsSymmetric) {
    std::mt19937_64 rng(1);
    auto m = make_model(ModelKind::DistMult, 16, vocab_of(20, 3));
    initialize(m, 5);
    for (EntityId h = 0; h < 20; ++h) {
        for (EntityId t = 0; t < 20; ++t) {
            EXPECT_EQ(score_triple(m, {h, 1, t}), score_triple(m, {t, 1, h}));
        }
    }
}

TEST(KgeMath, RotatEZeroPhaseIsIdentity) {
    auto m = make_model(ModelKind::RotatE, 4, vocab_of(3, 1));
    initialize(m, 2);
    std::fill(m.relations.begin(), m.relations.end(), 0.0f);
    EXPECT_NEAR(score_triple(m, {1, 0, 1}), 0.0, 1e-12);
    EXPECT_LT(score_triple(m, {1, 0, 2}), 0.0);
    // A half-turn maps x to -x.
    std::fill(m.relations.begin(), m.relations.end(), static_cast<float>(kge_math::kTwoPi / 2));
    auto e = m.entity_mut(2);
    auto src = m.entity(1);
    for (std::size_t k = 0; k < e.size(); ++k) e[k] = -src[k];
    EXPECT_NEAR(score_triple(m, {1, 0, 2}), 0.0, 1e-6);
}

TEST(KgeMath, TransEHandExample) {
    auto m = make_model(ModelKind::TransE, 2, vocab_of(2, 1));
    const float ents[] = {0, 0, 3, 4};
    m.entities.assign(std::begin(ents), std::end(ents));
    m.relations = {0, 0};
    EXPECT_DOUBLE_EQ(score_triple(m, {0, 0, 1}), -5.0);
    m.relations = {3, 4};
    EXPECT_DOUBLE_EQ(score_triple(m, {0, 0, 1}), 0.0);
    EXPECT_THROW(score_triple(m, {0, 0, 2}), Error);
    EXPECT_THROW(score_triple(m, {0, 1, 1}), Error);
}

TEST(KgeMath, ScoreAllMatchesScoreTriple) {
    for (auto kind : kAllKinds) {
        auto m = make_model(kind, 6, vocab_of(12, 2));
        initialize(m, 3);
        std::vector<double> out(12);
        score_all(m, 4, 1, QuerySide::Tail, out);
        for (EntityId e = 0; e < 12; ++e) EXPECT_NEAR(out[e], score_triple(m, {4, 1, e}), 1e-9);
        score_all(m, 4, 1, QuerySide::Head, out);
        for (EntityId e = 0; e < 12; ++e) EXPECT_NEAR(out[e], score_triple(m, {e, 1, 4}), 1e-9);
    }
}

TEST(KgeMath, PhaseWrap) {
    std::vector<float> p{-0.5f, 7.0f, 3.0f, static_cast<float>(4 * kge_math::kTwoPi + 1)};
    wrap_phases(p);
    for (float x : p) {
        EXPECT_GE(x, 0.0f);
        EXPECT_LT(x, static_cast<float>(kge_math::kTwoPi));
    }
    EXPECT_NEAR(p[0], kge_math::kTwoPi - 0.5, 1e-5);
    EXPECT_NEAR(p[2], 3.0, 1e-6);
    EXPECT_NEAR(p[3], 1.0, 1e-4);
}

TEST(ModelFile, RoundTripAndSize) {
    for (auto kind : kAllKinds) {
        auto m = make_model(kind, 7, vocab_of(9, 3));
        initialize(m, 11);
        const auto bytes = serialize_model(m);
        std::size_t vocab_bytes = 8;
        for (const auto& l : m.vocab->entities.labels()) vocab_bytes += 4 + l.size();
        for (const auto& l : m.vocab->relations.labels()) vocab_bytes += 4 + l.size();
        EXPECT_EQ(bytes.size(), 4 + 1 + 1 + 4 + vocab_bytes + 4 * (m.entities.size() + m.relations.size()));
        EXPECT_EQ(bytes.substr(0, 4), "KGXM");
        const auto back = deserialize_model(bytes);
        EXPECT_EQ(back.kind, kind);
        EXPECT_EQ(back.dim, 7u);
        EXPECT_EQ(*back.vocab, *m.vocab);
        EXPECT_TRUE(bitwise_equal(back.entities, m.entities));
        EXPECT_TRUE(bitwise_equal(back.relations, m.relations));
        EXPECT_EQ(serialize_model(back), bytes);
    }
}

TEST(ModelFile, CorruptionIsFormatError) {
    auto m = make_model(ModelKind::RESCAL, 3, vocab_of(4, 2));
    initialize(m, 1);
    const auto bytes = serialize_model(m);
    auto expect_format = [](std::string_view b) {
        try {
            deserialize_model(b);
            ADD_FAILURE();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::Format) << e.what();
        }
    };
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{9}, bytes.size() / 2, bytes.size() - 1}) {
        expect_format(std::string_view(bytes).substr(0, cut));
    }
    auto bad = bytes;
    bad[0] = 'X';
    expect_format(bad);
    bad = bytes;
    bad[4] = 9;
    expect_format(bad);
    expect_format(bytes + "z");
}

TEST(Training, ZeroEpochsReturnsInitialization) {
    auto data = generate_synthetic({});
    auto vocab = std::make_shared<const Vocabulary>(data.vocab);
    TrainConfig c;
    c.epochs = 0;
    c.seed = 9;
    auto res = train(c, data.train, nullptr, vocab);
    auto init = make_model(c.kind, c.dim, vocab);
    initialize(init, 9);
    EXPECT_TRUE(bitwise_equal(res.model.entities, init.entities));
    EXPECT_TRUE(res.epoch_losses.empty());
}

TEST(Training, DeterministicUnderSeedAndLossDecreases) {
    SyntheticConfig sc;
    sc.n_entities = 100;
    sc.n_relations = 4;
    sc.n_triples = 500;
    auto data = generate_synthetic(sc);
    auto vocab = std::make_shared<const Vocabulary>(data.vocab);
    for (auto kind : kAllKinds) {
        TrainConfig c;
        c.kind = kind;
        c.dim = 8;
        c.epochs = 15;
        c.seed = 3;
        if (kind == ModelKind::TransE || kind == ModelKind::RotatE) c.loss = LossKind::MarginRanking;
        auto a = train(c, data.train, &data.valid, vocab);
        auto b = train(c, data.train, &data.valid, vocab);
        EXPECT_TRUE(bitwise_equal(a.model.entities, b.model.entities)) << model_kind_name(kind);
        EXPECT_TRUE(bitwise_equal(a.model.relations, b.model.relations));
        ASSERT_EQ(a.epoch_losses.size(), 15u);
        EXPECT_LT(a.epoch_losses.back(), a.epoch_losses.front()) << model_kind_name(kind);
        if (kind == ModelKind::RotatE) {
            for (float p : a.model.relations) {
                EXPECT_GE(p, 0.0f);
                EXPECT_LT(p, static_cast<float>(kge_math::kTwoPi));
            }
        }
        c.seed = 4;
        EXPECT_FALSE(bitwise_equal(train(c, data.train, nullptr, vocab).model.entities, a.model.entities));
    }
}

TEST(Training, ConfigAndNumericErrors) {
    auto data = generate_synthetic({});
    auto vocab = std::make_shared<const Vocabulary>(data.vocab);
    TrainConfig c;
    c.epochs = -1;
    EXPECT_THROW(train(c, data.train, nullptr, vocab), Error);
    c = {};
    c.learning_rate = 0;
    c.epochs = 1;
    EXPECT_THROW(train(c, data.train, nullptr, vocab), Error);

    auto m = make_model(ModelKind::DistMult, 4, vocab);
    initialize(m, 0);
    std::fill(m.entities.begin(), m.entities.end(), std::numeric_limits<float>::quiet_NaN());
    OptimizerState st;
    Rng rng(1);
    try {
        train_epoch(m, data.train.triples, TrainConfig{}, st, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Training);
    }
}

TEST(Training, RelationOnlyMaskFreezesEntities) {
    auto data = generate_synthetic({});
    auto vocab = std::make_shared<const Vocabulary>(data.vocab);
    auto m = make_model(ModelKind::RESCAL, 6, vocab);
    initialize(m, 1);
    const auto before = m;
    OptimizerState st;
    Rng rng(2);
    train_epoch(m, std::span(data.train.triples).first(50), TrainConfig{}, st, rng, NegativeMode::AllTails, {false, true});
    EXPECT_TRUE(bitwise_equal(m.entities, before.entities));
    EXPECT_FALSE(bitwise_equal(m.relations, before.relations));
}

TEST(Ranking, HandModelThreeEntities) {
    // DistMult, dim 1: score(h,r,t) = h*r*t with entity values 1, 2, 3.
    auto m = make_model(ModelKind::DistMult, 1, vocab_of(3, 1));
    m.entities = {1, 2, 3};
    m.relations = {1};
    EXPECT_DOUBLE_EQ(rank_of(m, {0, 0, 2}, QuerySide::Tail, nullptr), 1.0);
    EXPECT_DOUBLE_EQ(rank_of(m, {0, 0, 1}, QuerySide::Tail, nullptr), 2.0);
    EXPECT_DOUBLE_EQ(rank_of(m, {0, 0, 0}, QuerySide::Tail, nullptr), 3.0);
    FilterIndex f;
    f.add({0, 0, 2});
    EXPECT_DOUBLE_EQ(rank_of(m, {0, 0, 0}, QuerySide::Tail, &f), 2.0);
    EXPECT_DOUBLE_EQ(rank_of(m, {0, 0, 2}, QuerySide::Tail, &f), 1.0);
    EXPECT_DOUBLE_EQ(rank_of(m, {0, 0, 1}, QuerySide::Head, nullptr), 3.0);
    // All-equal scores: realistic puts the gold in the middle.
    m.entities = {1, 1, 1};
    EXPECT_DOUBLE_EQ(rank_of(m, {0, 0, 1}, QuerySide::Tail, nullptr, TieStrategy::Realistic), 2.0);
    EXPECT_DOUBLE_EQ(rank_of(m, {0, 0, 1}, QuerySide::Tail, nullptr, TieStrategy::Optimistic), 1.0);
    EXPECT_DOUBLE_EQ(rank_of(m, {0, 0, 1}, QuerySide::Tail, nullptr, TieStrategy::Pessimistic), 3.0);
}

TEST(Evaluation, RecordsAndFilteredBound) {
    SyntheticConfig sc;
    sc.n_entities = 100;
    sc.n_relations = 6;
    sc.n_triples = 600;
    auto data = generate_synthetic(sc);
    auto vocab = std::make_shared<const Vocabulary>(data.vocab);
    TrainConfig c;
    c.epochs = 10;
    c.dim = 8;
    auto model = train(c, data.train, nullptr, vocab).model;
    FilterIndex filter{&data.train, &data.valid, &data.test};
    EvalOptions opt;
    opt.top_k = 5;
    auto filtered = evaluate_to_system_output(model, data.test, &filter, opt);
    auto raw = evaluate_to_system_output(model, data.test, nullptr, opt);
    opt.workers = 3;
    EXPECT_EQ(evaluate_to_system_output(model, data.test, &filter, opt), filtered);
    validate(filtered);
    EXPECT_EQ(raw.header.rank_basis, RankBasis::Raw);
    ASSERT_EQ(filtered.records.size(), 2 * data.test.size());
    EXPECT_EQ(filtered.records[0].id, "0-tail");
    EXPECT_EQ(filtered.records[1].id, "0-head");
    for (std::size_t i = 0; i < filtered.records.size(); ++i) {
        EXPECT_LE(*filtered.records[i].gold_rank, *raw.records[i].gold_rank);
        const auto& top = *filtered.records[i].top_k;
        ASSERT_EQ(top.size(), 5u);
        for (std::size_t k = 1; k < top.size(); ++k) EXPECT_GE(top[k - 1].score, top[k].score);
    }
}

TEST(Evaluation, PerfectModelRanksFirst) {
    // Entities on orthogonal axes, relation = identity: only (e, r, e) scores 1.
    auto m = make_model(ModelKind::RESCAL, 3, vocab_of(3, 1));
    m.entities = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    m.relations = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    TripleSet test;
    test.triples = {{0, 0, 0}, {1, 0, 1}, {2, 0, 2}};
    auto out = evaluate_to_system_output(m, test, nullptr);
    for (const auto& r : out.records) EXPECT_EQ(*r.gold_rank, 1.0);
}
