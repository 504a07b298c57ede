#pragma once

#include <cstdint>
#include <vector>

#include "kgx/triples.hpp"

namespace kgx {

// Desk-scale generator for knowledge graphs with learnable structure.
//
// Entities are split into clusters of `cluster_size`; every relation maps
// each cluster onto a target cluster, and triples connect an entity to a
// member of its relation's target cluster. Symmetric relations use an
// involutive cluster map, so reversed triples are consistent with the
// structure. Asymmetric relations cycle through three shapes: unrestricted,
// a restricted head pool, and a restricted tail pool, giving the cardinality
// feature more than one class to report.
//
// For every base triple of a symmetric relation (in any split), the reversed
// triple is added to train with `reverse_probability` unless it already
// exists somewhere.
struct SyntheticConfig {
    std::uint32_t n_entities = 200;
    std::uint32_t n_relations = 8;
    std::uint32_t n_triples = 2000;  // base triples, before symmetric reversals
    double symmetric_fraction = 0.25;
    std::uint64_t seed = 0;
    double valid_fraction = 0.05;
    double test_fraction = 0.1;
    double reverse_probability = 0.7;
    std::uint32_t cluster_size = 10;
};

struct SyntheticDataset {
    Vocabulary vocab;
    TripleSet train{Split::Train, {}};
    TripleSet valid{Split::Valid, {}};
    TripleSet test{Split::Test, {}};
    std::vector<RelationId> symmetric_relations;  // ascending
};

// Throws Error(Validation) on infeasible configurations.
SyntheticDataset generate_synthetic(const SyntheticConfig& config);

}  // namespace kgx
