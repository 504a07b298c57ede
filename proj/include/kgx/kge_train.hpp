#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "kgx/kge_model.hpp"
#include "kgx/random.hpp"
#include "kgx/triples.hpp"

namespace kgx {

enum class OptimizerKind { SGD, Adagrad };
enum class LossKind { BinaryCrossEntropy, MarginRanking };

struct TrainConfig {
    ModelKind kind = ModelKind::DistMult;
    std::uint32_t dim = 32;
    int epochs = 100;
    int batch_size = 128;
    int negatives = 8;
    double learning_rate = 0.05;
    OptimizerKind optimizer = OptimizerKind::Adagrad;
    LossKind loss = LossKind::BinaryCrossEntropy;
    double margin = 1.0;  // MarginRanking only
    double l2 = 0.0;      // weight decay on touched rows
    std::uint64_t seed = 0;
};

// How corrupted triples are drawn for each positive.
enum class NegativeMode {
    Sampled,   // `negatives` corruptions, head or tail with equal odds, uniform entity
    AllTails,  // every entity other than the gold tail, deterministic
};

struct UpdateMask {
    bool entities = true;
    bool relations = true;
};

// Adagrad accumulators; empty until first use.
struct OptimizerState {
    std::vector<double> entity_accum;
    std::vector<double> relation_accum;
};

// One pass over `triples` in mini-batches (shuffled with `rng`). Returns the
// mean loss per positive. Throws Error(Training) on a non-finite loss.
double train_epoch(KgeModel& m, std::span<const Triple> triples, const TrainConfig& config, OptimizerState& state,
                   Rng& rng, NegativeMode negatives = NegativeMode::Sampled, UpdateMask mask = {});

struct TrainResult {
    KgeModel model;
    std::vector<double> epoch_losses;
};

using EpochCallback = std::function<void(int epoch, double loss)>;

// Initializes a model from config.seed and trains it. Deterministic under the
// seed. `valid`, when given, must use ids from the same vocabulary.
TrainResult train(const TrainConfig& config, const TripleSet& train_set, const TripleSet* valid,
                  std::shared_ptr<const Vocabulary> vocab, const EpochCallback& on_epoch = {});

}  // namespace kgx
