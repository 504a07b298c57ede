#pragma once

#include <iosfwd>
#include <string>

#include "kgx/system_output.hpp"

namespace kgx {

// Converters from the rank dumps written by the exporter shims.
//
//   pykeen-dump:  TSV, header `head relation tail side rank`, side in {head, tail}
//   libkge-dump:  TSV, header `s p o direction rank`, direction in {s, o}
//
// Columns are located by header name; extra columns are ignored. Record ids
// are "{row-index}-{direction}" with a 0-based data-row index and direction
// "tail" or "head".

struct AdapterMeta {
    std::string system_name;
    std::string dataset_name;
    RankBasis rank_basis = RankBasis::Filtered;
};

SystemOutput import_pykeen(std::istream& in, const AdapterMeta& meta);
SystemOutput import_libkge(std::istream& in, const AdapterMeta& meta);

}  // namespace kgx
