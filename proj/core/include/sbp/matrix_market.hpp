#pragma once

#include "sbp/linalg.hpp"

#include <iosfwd>
#include <string>

namespace sbp {

/// Reads `%%MatrixMarket matrix coordinate|array real|integer general|symmetric`
/// into a dense matrix. Unlisted coordinate entries are zero; duplicates are
/// summed. Errors carry `source` and the offending line number.
Matrix read_matrix_market(std::istream& in, const std::string& source = "<stream>");
Matrix load_matrix_market(const std::string& path);

/// A matrix file with a single column (or a single row) as a vector.
Vector load_vector_market(const std::string& path);

/// Array format, real general, 17 significant digits.
void write_matrix_market(std::ostream& out, const Matrix& M);
void save_matrix_market(const std::string& path, const Matrix& M);

}  // namespace sbp
