#include "kgx/kge_train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "kgx/error.hpp"

namespace kgx {
namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

// Sparse gradient for one mini-batch, keyed by row id. Ordered maps keep the
// update order fixed.
struct BatchGradient {
    std::map<EntityId, std::vector<double>> entities;
    std::map<RelationId, std::vector<double>> relations;

    std::vector<double>& entity(EntityId e, std::size_t width) {
        auto [it, inserted] = entities.try_emplace(e);
        if (inserted) it->second.assign(width, 0.0);
        return it->second;
    }
    std::vector<double>& relation(RelationId r, std::size_t width) {
        auto [it, inserted] = relations.try_emplace(r);
        if (inserted) it->second.assign(width, 0.0);
        return it->second;
    }
};

class Accumulator {
public:
    Accumulator(const KgeModel& m, UpdateMask mask)
        : m_(m), mask_(mask), gh_(m.entity_width()), gr_(m.relation_width()), gt_(m.entity_width()) {}

    // Adds coef * d(score)/d(params) of (h, r, t) to the batch gradient and
    // returns the score.
    double add(BatchGradient& g, const Triple& t, double coef) {
        const auto ew = m_.entity_width();
        const auto rw = m_.relation_width();
        std::span<double> gh = mask_.entities ? std::span<double>(gh_) : std::span<double>();
        std::span<double> gt = mask_.entities ? std::span<double>(gt_) : std::span<double>();
        std::span<double> gr = mask_.relations ? std::span<double>(gr_) : std::span<double>();
        const double s = kge_math::score_grad<float>(m_.kind, m_.entity(t.head), m_.relation(t.relation),
                                                     m_.entity(t.tail), m_.dim, gh, gr, gt);
        if (coef == 0.0) return s;
        if (mask_.entities) {
            auto& h = g.entity(t.head, ew);
            for (std::size_t k = 0; k < ew; ++k) h[k] += coef * gh_[k];
            auto& tt = g.entity(t.tail, ew);
            for (std::size_t k = 0; k < ew; ++k) tt[k] += coef * gt_[k];
        }
        if (mask_.relations) {
            auto& r = g.relation(t.relation, rw);
            for (std::size_t k = 0; k < rw; ++k) r[k] += coef * gr_[k];
        }
        return s;
    }

private:
    const KgeModel& m_;
    UpdateMask mask_;
    std::vector<double> gh_, gr_, gt_;
};

void apply_rows(std::span<float> params, std::vector<double>& accum, std::size_t width, std::size_t row,
                const std::vector<double>& grad, double scale, const TrainConfig& config) {
    float* p = params.data() + row * width;
    double* acc = accum.empty() ? nullptr : accum.data() + row * width;
    for (std::size_t k = 0; k < width; ++k) {
        double g = grad[k] * scale + config.l2 * static_cast<double>(p[k]);
        if (config.optimizer == OptimizerKind::Adagrad) {
            acc[k] += g * g;
            g /= std::sqrt(acc[k]) + 1e-10;
        }
        p[k] = static_cast<float>(static_cast<double>(p[k]) - config.learning_rate * g);
    }
}

void apply(KgeModel& m, const BatchGradient& g, double scale, const TrainConfig& config, OptimizerState& state) {
    if (config.optimizer == OptimizerKind::Adagrad) {
        if (state.entity_accum.size() != m.entities.size()) state.entity_accum.assign(m.entities.size(), 0.0);
        if (state.relation_accum.size() != m.relations.size()) state.relation_accum.assign(m.relations.size(), 0.0);
    }
    const auto ew = m.entity_width();
    const auto rw = m.relation_width();
    for (const auto& [e, grad] : g.entities) apply_rows(m.entities, state.entity_accum, ew, e, grad, scale, config);
    for (const auto& [r, grad] : g.relations) {
        apply_rows(m.relations, state.relation_accum, rw, r, grad, scale, config);
        if (m.kind == ModelKind::RotatE) wrap_phases(m.relation_mut(r));
    }
}

// 1-vs-all binary cross-entropy over every candidate tail.
double all_tails_loss(const KgeModel& m, const Triple& pos, BatchGradient& g, Accumulator& acc,
                      std::vector<double>& scores, UpdateMask mask) {
    const auto n = m.num_entities();
    scores.resize(n);
    score_all(m, pos.head, pos.relation, QuerySide::Tail, scores);
    double loss = 0.0;
    std::vector<double> coef(n);
    for (std::size_t e = 0; e < n; ++e) {
        const bool gold = e == pos.tail;
        loss += gold ? softplus(-scores[e]) : softplus(scores[e]);
        coef[e] = sigmoid(scores[e]) - (gold ? 1.0 : 0.0);
    }
    const bool linear_in_tail = m.kind == ModelKind::DistMult || m.kind == ModelKind::RESCAL;
    if (linear_in_tail && !mask.entities) {
        // Score is linear in the tail vector, so the summed relation gradient
        // equals the gradient at the coefficient-weighted tail mixture.
        if (!mask.relations) return loss;
        const auto w = m.entity_width();
        std::vector<double> mix(w, 0.0);
        for (std::size_t e = 0; e < n; ++e) {
            const float* row = m.entities.data() + e * w;
            for (std::size_t k = 0; k < w; ++k) mix[k] += coef[e] * static_cast<double>(row[k]);
        }
        const auto hrow = m.entity(pos.head);
        const auto rrow = m.relation(pos.relation);
        const std::vector<double> h(hrow.begin(), hrow.end());
        const std::vector<double> r(rrow.begin(), rrow.end());
        std::vector<double> gr(m.relation_width());
        kge_math::score_grad<double>(m.kind, std::span<const double>(h), std::span<const double>(r),
                                     std::span<const double>(mix), m.dim, {}, gr, {});
        auto& dst = g.relation(pos.relation, m.relation_width());
        for (std::size_t k = 0; k < gr.size(); ++k) dst[k] += gr[k];
        return loss;
    }
    for (std::size_t e = 0; e < n; ++e) {
        acc.add(g, Triple{pos.head, pos.relation, static_cast<EntityId>(e)}, coef[e]);
    }
    return loss;
}

}  // namespace

double train_epoch(KgeModel& m, std::span<const Triple> triples, const TrainConfig& config, OptimizerState& state,
                   Rng& rng, NegativeMode negatives, UpdateMask mask) {
    if (triples.empty()) return 0.0;
    if (config.batch_size < 1) throw Error(ErrorCode::Config, "batch_size must be positive");
    if (!(config.learning_rate > 0.0)) throw Error(ErrorCode::Config, "learning_rate must be positive");
    if (negatives == NegativeMode::Sampled && config.negatives < 1) {
        throw Error(ErrorCode::Config, "negatives per positive must be positive");
    }
    const auto n_entities = m.num_entities();
    std::vector<std::size_t> order(triples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span(order), rng);

    Accumulator acc(m, mask);
    std::vector<double> scores;
    double total = 0.0;
    const auto batch = static_cast<std::size_t>(config.batch_size);
    for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t end = std::min(start + batch, order.size());
        BatchGradient g;
        double batch_loss = 0.0;
        for (std::size_t i = start; i < end; ++i) {
            const Triple& pos = triples[order[i]];
            if (negatives == NegativeMode::AllTails) {
                batch_loss += all_tails_loss(m, pos, g, acc, scores, mask);
                continue;
            }
            std::vector<Triple> corrupted(static_cast<std::size_t>(config.negatives));
            for (auto& c : corrupted) {
                c = pos;
                const auto e = static_cast<EntityId>(uniform_index(rng, n_entities));
                if (uniform_index(rng, 2) == 0) {
                    c.head = e;
                } else {
                    c.tail = e;
                }
            }
            if (config.loss == LossKind::BinaryCrossEntropy) {
                const double s = kge_math::score<float>(m.kind, m.entity(pos.head), m.relation(pos.relation),
                                                        m.entity(pos.tail), m.dim);
                acc.add(g, pos, sigmoid(s) - 1.0);
                batch_loss += softplus(-s);
                for (const auto& c : corrupted) {
                    const double sn = kge_math::score<float>(m.kind, m.entity(c.head), m.relation(c.relation),
                                                             m.entity(c.tail), m.dim);
                    acc.add(g, c, sigmoid(sn));
                    batch_loss += softplus(sn);
                }
            } else {
                const double s = kge_math::score<float>(m.kind, m.entity(pos.head), m.relation(pos.relation),
                                                        m.entity(pos.tail), m.dim);
                for (const auto& c : corrupted) {
                    const double sn = kge_math::score<float>(m.kind, m.entity(c.head), m.relation(c.relation),
                                                             m.entity(c.tail), m.dim);
                    const double violation = config.margin - s + sn;
                    if (violation <= 0.0) continue;
                    batch_loss += violation;
                    acc.add(g, pos, -1.0);
                    acc.add(g, c, 1.0);
                }
            }
        }
        if (!std::isfinite(batch_loss)) throw Error(ErrorCode::Training, "non-finite loss");
        total += batch_loss;
        apply(m, g, 1.0 / static_cast<double>(end - start), config, state);
    }
    return total / static_cast<double>(triples.size());
}

TrainResult train(const TrainConfig& config, const TripleSet& train_set, const TripleSet* valid,
                  std::shared_ptr<const Vocabulary> vocab, const EpochCallback& on_epoch) {
    if (config.epochs < 0) throw Error(ErrorCode::Config, "epochs must be non-negative");
    auto check_ids = [&](const TripleSet& set) {
        for (const auto& t : set.triples) {
            if (t.head >= vocab->entities.size() || t.tail >= vocab->entities.size() ||
                t.relation >= vocab->relations.size()) {
                throw Error(ErrorCode::Config, std::string(split_name(set.split)) + " split uses ids outside the vocabulary");
            }
        }
    };
    if (!vocab) throw Error(ErrorCode::Config, "training needs a vocabulary");
    check_ids(train_set);
    if (valid != nullptr) check_ids(*valid);

    TrainResult result{make_model(config.kind, config.dim, vocab), {}};
    initialize(result.model, config.seed);
    OptimizerState state;
    Rng rng(derive_seed(config.seed, 1));
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        double loss = 0.0;
        try {
            loss = train_epoch(result.model, train_set.triples, config, state, rng);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Training) throw;
            throw Error(ErrorCode::Training, "epoch " + std::to_string(epoch) + ": " + e.what());
        }
        result.epoch_losses.push_back(loss);
        if (on_epoch) on_epoch(epoch, loss);
    }
    return result;
}

}  // namespace kgx
