#pragma once

#include <span>
#include <vector>

#include "cric/matrix.hpp"

namespace cric {

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
/// Throws NumericError if a pivot is non-positive or non-finite.
Matrix cholesky(const Matrix& a);

/// Solve L L^T x = b given the lower factor L.
std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b);

/// log det(A) = 2 * sum(log diag(L)).
double cholesky_logdet(const Matrix& l);

}  // namespace cric
