#pragma once

#include "rk/linop.hpp"

#include <string>

namespace rk {

/// Matrix Market coordinate file (real, general) to sparse matrix.
SparseMatrix load_matrix_market(const std::string& path);

/// Plain-text vectors, one value per line.
Vector load_vector(const std::string& path);
void save_vector(const std::string& path, const Vector& v);

} // namespace rk
