#pragma once

#include <iosfwd>
#include <string>

#include "rml/ensembles.hpp"

namespace rml {

// Binary container: 8-byte magic "RMLMAT01", uint32 dtype (0 = float64,
// 1 = complex128 as re/im pairs), uint32 reserved, uint64 rows, uint64 cols,
// then the row-major payload.  All fields little-endian.
void write_matrix_binary(std::ostream& os, const std::variant<RMat, CMat>& m);
std::variant<RMat, CMat> read_matrix_binary(std::istream& is);

// CSV, one matrix row per line, values with 17 significant digits.  Complex
// entries are written as "re+imi".
void write_matrix_csv(std::ostream& os, const std::variant<RMat, CMat>& m);
// Reads a real CSV matrix (used for vector files: a single row).
RMat read_matrix_csv(std::istream& is);

}  // namespace rml
