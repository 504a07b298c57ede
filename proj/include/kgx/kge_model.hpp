#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgx/triples.hpp"

namespace kgx {

enum class ModelKind : std::uint8_t { TransE = 0, DistMult = 1, RESCAL = 2, RotatE = 3 };

const char* model_kind_name(ModelKind k);
std::optional<ModelKind> parse_model_kind(std::string_view s);

// Parameter widths per row.
//   entity:   dim (RotatE: 2*dim, real parts then imaginary parts)
//   relation: dim (RESCAL: dim*dim row-major; RotatE: dim phases in [0, 2pi))
std::size_t entity_width(ModelKind kind, std::uint32_t dim);
std::size_t relation_width(ModelKind kind, std::uint32_t dim);

struct KgeModel {
    ModelKind kind = ModelKind::DistMult;
    std::uint32_t dim = 0;
    std::shared_ptr<const Vocabulary> vocab;
    std::vector<float> entities;   // entity-major, |E| x entity_width
    std::vector<float> relations;  // relation-major, |R| x relation_width

    std::size_t entity_width() const { return kgx::entity_width(kind, dim); }
    std::size_t relation_width() const { return kgx::relation_width(kind, dim); }
    std::size_t num_entities() const { return entity_width() == 0 ? 0 : entities.size() / entity_width(); }
    std::size_t num_relations() const { return relation_width() == 0 ? 0 : relations.size() / relation_width(); }

    std::span<const float> entity(EntityId e) const;
    std::span<const float> relation(RelationId r) const;
    std::span<float> entity_mut(EntityId e);
    std::span<float> relation_mut(RelationId r);
};

// Zero-filled tables sized to the vocabulary.
KgeModel make_model(ModelKind kind, std::uint32_t dim, std::shared_ptr<const Vocabulary> vocab);

// Real tables ~ U(-0.5/sqrt(dim), 0.5/sqrt(dim)); RotatE phases ~ U(0, 2pi).
void initialize(KgeModel& m, std::uint64_t seed);

// Throws Error(Lookup) for out-of-range ids.
double score_triple(const KgeModel& m, const Triple& t);

enum class QuerySide { Tail, Head };  // (h,r,?) or (?,r,t)

// Scores every entity as the missing side of the query; `out` has one slot
// per entity.
void score_all(const KgeModel& m, EntityId anchor, RelationId relation, QuerySide side, std::span<double> out);

void wrap_phases(std::span<float> phases);

// Model file: "KGXM", version byte, kind byte, dim (u32 LE), vocabulary
// block (u32 LE counts, then u32 LE length-prefixed UTF-8 labels, entities
// before relations), then f32 LE entity table and relation table.
inline constexpr std::uint8_t kModelFormatVersion = 1;

std::string serialize_model(const KgeModel& m);
KgeModel deserialize_model(std::string_view bytes);  // throws Error(Format)
void save_model(const KgeModel& m, const std::string& path);
KgeModel load_model(const std::string& path);

// Scoring functions and their analytic gradients, written against plain
// spans so they can be checked in double precision. Accumulation is in
// double for every element type.
namespace kge_math {

constexpr double kTwoPi = 6.283185307179586476925286766559;

template <typename T>
double score(ModelKind kind, std::span<const T> h, std::span<const T> r, std::span<const T> t, std::uint32_t dim) {
    switch (kind) {
        case ModelKind::TransE: {
            double ss = 0.0;
            for (std::uint32_t k = 0; k < dim; ++k) {
                const double d = static_cast<double>(h[k]) + static_cast<double>(r[k]) - static_cast<double>(t[k]);
                ss += d * d;
            }
            return -std::sqrt(ss);
        }
        case ModelKind::DistMult: {
            // (h*t) first: exact in double for float inputs, so the score is
            // bitwise symmetric in h and t.
            double s = 0.0;
            for (std::uint32_t k = 0; k < dim; ++k) {
                s += (static_cast<double>(h[k]) * static_cast<double>(t[k])) * static_cast<double>(r[k]);
            }
            return s;
        }
        case ModelKind::RESCAL: {
            double s = 0.0;
            for (std::uint32_t j = 0; j < dim; ++j) {
                double q = 0.0;
                for (std::uint32_t i = 0; i < dim; ++i) q += static_cast<double>(h[i]) * static_cast<double>(r[i * dim + j]);
                s += q * static_cast<double>(t[j]);
            }
            return s;
        }
        case ModelKind::RotatE: {
            double ss = 0.0;
            for (std::uint32_t k = 0; k < dim; ++k) {
                const double c = std::cos(static_cast<double>(r[k]));
                const double sn = std::sin(static_cast<double>(r[k]));
                const double hr = h[k];
                const double hi = h[dim + k];
                const double dre = hr * c - hi * sn - static_cast<double>(t[k]);
                const double dim_ = hr * sn + hi * c - static_cast<double>(t[dim + k]);
                ss += dre * dre + dim_ * dim_;
            }
            return -std::sqrt(ss);
        }
    }
    return 0.0;
}

// Returns the score and writes d(score)/d(param) into gh, gr, gt (each sized
// like its parameter row; overwritten, not accumulated). Any of the gradient
// spans may be empty to skip that block.
template <typename T>
double score_grad(ModelKind kind, std::span<const T> h, std::span<const T> r, std::span<const T> t, std::uint32_t dim,
                  std::span<double> gh, std::span<double> gr, std::span<double> gt) {
    switch (kind) {
        case ModelKind::TransE: {
            double ss = 0.0;
            std::vector<double> d(dim);
            for (std::uint32_t k = 0; k < dim; ++k) {
                d[k] = static_cast<double>(h[k]) + static_cast<double>(r[k]) - static_cast<double>(t[k]);
                ss += d[k] * d[k];
            }
            const double norm = std::sqrt(ss);
            const double inv = norm > 0.0 ? 1.0 / norm : 0.0;
            for (std::uint32_t k = 0; k < dim; ++k) {
                if (!gh.empty()) gh[k] = -d[k] * inv;
                if (!gr.empty()) gr[k] = -d[k] * inv;
                if (!gt.empty()) gt[k] = d[k] * inv;
            }
            return -norm;
        }
        case ModelKind::DistMult: {
            double s = 0.0;
            for (std::uint32_t k = 0; k < dim; ++k) {
                const double hk = h[k];
                const double rk = r[k];
                const double tk = t[k];
                s += (hk * tk) * rk;
                if (!gh.empty()) gh[k] = rk * tk;
                if (!gr.empty()) gr[k] = hk * tk;
                if (!gt.empty()) gt[k] = hk * rk;
            }
            return s;
        }
        case ModelKind::RESCAL: {
            double s = 0.0;
            if (!gh.empty()) std::fill(gh.begin(), gh.end(), 0.0);
            for (std::uint32_t j = 0; j < dim; ++j) {
                double q = 0.0;
                for (std::uint32_t i = 0; i < dim; ++i) {
                    const double w = r[i * dim + j];
                    q += static_cast<double>(h[i]) * w;
                    if (!gh.empty()) gh[i] += w * static_cast<double>(t[j]);
                    if (!gr.empty()) gr[i * dim + j] = static_cast<double>(h[i]) * static_cast<double>(t[j]);
                }
                s += q * static_cast<double>(t[j]);
                if (!gt.empty()) gt[j] = q;
            }
            return s;
        }
        case ModelKind::RotatE: {
            std::vector<double> dre(dim), dimv(dim), rre(dim), rim(dim), c(dim), sn(dim);
            double ss = 0.0;
            for (std::uint32_t k = 0; k < dim; ++k) {
                c[k] = std::cos(static_cast<double>(r[k]));
                sn[k] = std::sin(static_cast<double>(r[k]));
                const double hr = h[k];
                const double hi = h[dim + k];
                rre[k] = hr * c[k] - hi * sn[k];
                rim[k] = hr * sn[k] + hi * c[k];
                dre[k] = rre[k] - static_cast<double>(t[k]);
                dimv[k] = rim[k] - static_cast<double>(t[dim + k]);
                ss += dre[k] * dre[k] + dimv[k] * dimv[k];
            }
            const double norm = std::sqrt(ss);
            const double inv = norm > 0.0 ? 1.0 / norm : 0.0;
            for (std::uint32_t k = 0; k < dim; ++k) {
                if (!gh.empty()) {
                    gh[k] = (-dre[k] * c[k] - dimv[k] * sn[k]) * inv;
                    gh[dim + k] = (dre[k] * sn[k] - dimv[k] * c[k]) * inv;
                }
                if (!gt.empty()) {
                    gt[k] = dre[k] * inv;
                    gt[dim + k] = dimv[k] * inv;
                }
                if (!gr.empty()) gr[k] = (dre[k] * rim[k] - dimv[k] * rre[k]) * inv;
            }
            return -norm;
        }
    }
    return 0.0;
}

}  // namespace kge_math
}  // namespace kgx
