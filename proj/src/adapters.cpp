#include "kgx/adapters.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <optional>
#include <vector>

#include "kgx/error.hpp"

namespace kgx {
namespace {

struct DumpSchema {
    std::array<const char*, 5> columns;  // head, relation, tail, direction, rank
    const char* tail_token;
    const char* head_token;
};

constexpr DumpSchema kPykeen{{"head", "relation", "tail", "side", "rank"}, "tail", "head"};
constexpr DumpSchema kLibkge{{"s", "p", "o", "direction", "rank"}, "o", "s"};

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto end = line.find('\t', start);
        out.push_back(line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

std::optional<long long> parse_int(std::string_view s) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

SystemOutput import_dump(std::istream& in, const AdapterMeta& meta, const DumpSchema& schema) {
    if (meta.system_name.empty() || meta.dataset_name.empty()) {
        throw Error(ErrorCode::Config, "adapter metadata needs system_name and dataset_name");
    }
    SystemOutput out;
    out.header.system_name = meta.system_name;
    out.header.dataset_name = meta.dataset_name;
    out.header.rank_basis = meta.rank_basis;

    std::string line;
    std::size_t line_no = 0;
    std::array<std::size_t, 5> col{};
    bool have_header = false;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (!have_header) {
            for (std::size_t i = 0; i < schema.columns.size(); ++i) {
                std::size_t found = fields.size();
                for (std::size_t f = 0; f < fields.size(); ++f) {
                    if (fields[f] == schema.columns[i]) found = f;
                }
                if (found == fields.size()) {
                    throw ParseError(line_no, std::string("missing column '") + schema.columns[i] + "'");
                }
                col[i] = found;
            }
            have_header = true;
            continue;
        }
        for (std::size_t c : col) {
            if (c >= fields.size()) throw ParseError(line_no, "row has fewer columns than the header");
        }
        ExampleRecord r;
        r.head = std::string(fields[col[0]]);
        r.relation = std::string(fields[col[1]]);
        r.tail = std::string(fields[col[2]]);
        if (r.head.empty() || r.relation.empty() || r.tail.empty()) throw ParseError(line_no, "empty triple field");
        const auto dir = fields[col[3]];
        if (dir == schema.tail_token) {
            r.direction = Direction::Tail;
        } else if (dir == schema.head_token) {
            r.direction = Direction::Head;
        } else {
            throw ParseError(line_no, std::string("column '") + schema.columns[3] + "' must be '" + schema.head_token +
                                          "' or '" + schema.tail_token + "'");
        }
        const auto rank = parse_int(fields[col[4]]);
        if (!rank) throw ParseError(line_no, "rank is not an integer");
        if (*rank < 1) throw Error(ErrorCode::Domain, "line " + std::to_string(line_no) + ": rank must be positive");
        r.gold_rank = static_cast<double>(*rank);
        r.id = std::to_string(row) + "-" + direction_name(r.direction);
        ++row;
        out.records.push_back(std::move(r));
    }
    if (!have_header) throw ParseError(1, "missing header row");
    return out;
}

}  // namespace

SystemOutput import_pykeen(std::istream& in, const AdapterMeta& meta) { return import_dump(in, meta, kPykeen); }

SystemOutput import_libkge(std::istream& in, const AdapterMeta& meta) { return import_dump(in, meta, kLibkge); }

}  // namespace kgx
