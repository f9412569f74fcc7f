#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pdm/matrix.hpp"

namespace pdm {

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column j is the unit eigenvector of values[j]
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
/// below 1e-12 (scaled up for matrices whose norm exceeds 1e3). Throws
/// NotSymmetricError if |a_ij - a_ji| exceeds 1e-12 relative to max|a|.
EigenDecomposition symmetric_eigen(const Matrix& matrix);

/// Solves A x = b for symmetric positive-definite A by Cholesky.
/// Returns nullopt when a pivot is not safely positive.
std::optional<std::vector<double>> solve_spd(const Matrix& a, std::span<const double> b);

}  // namespace pdm
