#pragma once

// MatrixMarket reader and writer (real general, array or coordinate).

#include <iosfwd>
#include <string>

#include "qrdm/matrix.hpp"

namespace qrdm::harness {

/// Coordinate entries are scattered into a dense zero matrix; repeated
/// coordinates are summed.  Throws parse_error carrying the offending line.
Matrix<double> read_matrix_market(std::istream& in);
Matrix<double> read_matrix_market(const std::string& path);

/// Array format, column-major, 17 significant digits (exact round trip).
void write_matrix_market(std::ostream& out, const Matrix<double>& a);
void write_matrix_market(const std::string& path, const Matrix<double>& a);

}  // namespace qrdm::harness
