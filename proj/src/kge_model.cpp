#include "kgx/kge_model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "kgx/error.hpp"
#include "kgx/random.hpp"

namespace kgx {

const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::TransE: return "transe";
        case ModelKind::DistMult: return "distmult";
        case ModelKind::RESCAL: return "rescal";
        case ModelKind::RotatE: return "rotate";
    }
    return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) {
    if (s == "transe" || s == "TransE") return ModelKind::TransE;
    if (s == "distmult" || s == "DistMult") return ModelKind::DistMult;
    if (s == "rescal" || s == "RESCAL") return ModelKind::RESCAL;
    if (s == "rotate" || s == "RotatE") return ModelKind::RotatE;
    return std::nullopt;
}

std::size_t entity_width(ModelKind kind, std::uint32_t dim) { return kind == ModelKind::RotatE ? 2u * dim : dim; }

std::size_t relation_width(ModelKind kind, std::uint32_t dim) {
    return kind == ModelKind::RESCAL ? static_cast<std::size_t>(dim) * dim : dim;
}

std::span<const float> KgeModel::entity(EntityId e) const {
    const auto w = entity_width();
    if (static_cast<std::size_t>(e) >= num_entities()) throw Error(ErrorCode::Lookup, "entity id " + std::to_string(e) + " out of range");
    return {entities.data() + static_cast<std::size_t>(e) * w, w};
}

std::span<const float> KgeModel::relation(RelationId r) const {
    const auto w = relation_width();
    if (static_cast<std::size_t>(r) >= num_relations()) throw Error(ErrorCode::Lookup, "relation id " + std::to_string(r) + " out of range");
    return {relations.data() + static_cast<std::size_t>(r) * w, w};
}

std::span<float> KgeModel::entity_mut(EntityId e) {
    auto c = std::as_const(*this).entity(e);
    return {const_cast<float*>(c.data()), c.size()};
}

std::span<float> KgeModel::relation_mut(RelationId r) {
    auto c = std::as_const(*this).relation(r);
    return {const_cast<float*>(c.data()), c.size()};
}

KgeModel make_model(ModelKind kind, std::uint32_t dim, std::shared_ptr<const Vocabulary> vocab) {
    if (dim == 0) throw Error(ErrorCode::Config, "embedding dimension must be positive");
    if (!vocab) throw Error(ErrorCode::Config, "model needs a vocabulary");
    KgeModel m;
    m.kind = kind;
    m.dim = dim;
    m.entities.assign(vocab->entities.size() * entity_width(kind, dim), 0.0f);
    m.relations.assign(vocab->relations.size() * relation_width(kind, dim), 0.0f);
    m.vocab = std::move(vocab);
    return m;
}

void wrap_phases(std::span<float> phases) {
    constexpr float two_pi = static_cast<float>(kge_math::kTwoPi);
    for (float& p : phases) {
        p = std::fmod(p, two_pi);
        if (p < 0.0f) p += two_pi;
        if (p >= two_pi) p = 0.0f;
    }
}

void initialize(KgeModel& m, std::uint64_t seed) {
    Rng rng(seed);
    const double bound = 0.5 / std::sqrt(static_cast<double>(m.dim));
    for (float& v : m.entities) v = static_cast<float>(uniform_real(rng, -bound, bound));
    if (m.kind == ModelKind::RotatE) {
        for (float& v : m.relations) v = static_cast<float>(uniform_real(rng, 0.0, kge_math::kTwoPi));
        wrap_phases(m.relations);
    } else {
        for (float& v : m.relations) v = static_cast<float>(uniform_real(rng, -bound, bound));
    }
}

double score_triple(const KgeModel& m, const Triple& t) {
    return kge_math::score<float>(m.kind, m.entity(t.head), m.relation(t.relation), m.entity(t.tail), m.dim);
}

void score_all(const KgeModel& m, EntityId anchor, RelationId relation, QuerySide side, std::span<double> out) {
    const auto n = m.num_entities();
    if (out.size() != n) throw Error(ErrorCode::Config, "score_all: output size must equal the entity count");
    const auto a = m.entity(anchor);
    const auto r = m.relation(relation);
    if (m.kind == ModelKind::RESCAL) {
        const std::uint32_t d = m.dim;
        std::vector<double> q(d, 0.0);
        if (side == QuerySide::Tail) {
            for (std::uint32_t j = 0; j < d; ++j) {
                double acc = 0.0;
                for (std::uint32_t i = 0; i < d; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(r[i * d + j]);
                q[j] = acc;
            }
        } else {
            for (std::uint32_t i = 0; i < d; ++i) {
                double acc = 0.0;
                for (std::uint32_t j = 0; j < d; ++j) acc += static_cast<double>(r[i * d + j]) * static_cast<double>(a[j]);
                q[i] = acc;
            }
        }
        for (std::size_t e = 0; e < n; ++e) {
            const float* row = m.entities.data() + e * d;
            double s = 0.0;
            for (std::uint32_t k = 0; k < d; ++k) s += q[k] * static_cast<double>(row[k]);
            out[e] = s;
        }
        return;
    }
    const auto w = m.entity_width();
    for (std::size_t e = 0; e < n; ++e) {
        std::span<const float> other(m.entities.data() + e * w, w);
        out[e] = side == QuerySide::Tail ? kge_math::score<float>(m.kind, a, r, other, m.dim)
                                         : kge_math::score<float>(m.kind, other, r, a, m.dim);
    }
}

// ---------------------------------------------------------------------------
// Binary format

namespace {

constexpr char kMagic[4] = {'K', 'G', 'X', 'M'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) throw Error(ErrorCode::Format, std::string("model file truncated in ") + what);
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return static_cast<std::uint8_t>(bytes_[pos_++]);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::string_view take(std::size_t n, const char* what) {
        need(n, what);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

void put_labels(std::string& out, const LabelTable& table) {
    put_u32(out, static_cast<std::uint32_t>(table.size()));
    for (const auto& label : table.labels()) {
        put_u32(out, static_cast<std::uint32_t>(label.size()));
        out.append(label);
    }
}

void read_labels(Reader& in, LabelTable& table, const char* what) {
    const auto count = in.u32(what);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = in.u32(what);
        const auto label = in.take(len, what);
        if (table.intern(label) != i) throw Error(ErrorCode::Format, std::string("duplicate label in ") + what);
    }
}

}  // namespace

std::string serialize_model(const KgeModel& m) {
    std::string out(kMagic, 4);
    out.push_back(static_cast<char>(kModelFormatVersion));
    out.push_back(static_cast<char>(m.kind));
    put_u32(out, m.dim);
    put_labels(out, m.vocab->entities);
    put_labels(out, m.vocab->relations);
    out.reserve(out.size() + 4 * (m.entities.size() + m.relations.size()));
    for (float f : m.entities) put_f32(out, f);
    for (float f : m.relations) put_f32(out, f);
    return out;
}

KgeModel deserialize_model(std::string_view bytes) {
    Reader in(bytes);
    if (in.take(4, "magic") != std::string_view(kMagic, 4)) throw Error(ErrorCode::Format, "bad magic: not a KGXM model file");
    const auto version = in.u8("version");
    if (version != kModelFormatVersion) throw Error(ErrorCode::Format, "unsupported model format version " + std::to_string(version));
    const auto kind_byte = in.u8("kind");
    if (kind_byte > static_cast<std::uint8_t>(ModelKind::RotatE)) throw Error(ErrorCode::Format, "unknown model kind");
    const auto dim = in.u32("dim");
    if (dim == 0) throw Error(ErrorCode::Format, "zero embedding dimension");
    auto vocab = std::make_shared<Vocabulary>();
    read_labels(in, vocab->entities, "entity vocabulary");
    read_labels(in, vocab->relations, "relation vocabulary");
    KgeModel m = make_model(static_cast<ModelKind>(kind_byte), dim, vocab);
    const std::size_t floats = m.entities.size() + m.relations.size();
    if (in.remaining() != 4 * floats) {
        throw Error(ErrorCode::Format, in.remaining() < 4 * floats ? "model file truncated in tables" : "trailing bytes after tables");
    }
    for (float& f : m.entities) f = std::bit_cast<float>(in.u32("entity table"));
    for (float& f : m.relations) f = std::bit_cast<float>(in.u32("relation table"));
    return m;
}

void save_model(const KgeModel& m, const std::string& path) {
    const auto bytes = serialize_model(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Storage, "cannot open " + path + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Storage, "write failed for " + path);
}

KgeModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

}  // namespace kgx
