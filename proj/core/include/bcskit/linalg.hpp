#pragma once

#include <span>
#include <vector>

#include "bcskit/rng.hpp"

namespace bcskit {

// ============================================================================
// Dense row-major matrix of doubles. Deliberately minimal: storage plus the
// handful of operations the sampling and reconstruction code needs.
// ============================================================================
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  static Matrix identity(int n);
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

// y = a * x
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
// y = a^T * x without forming the transpose
std::vector<double> matvec_t(const Matrix& a, std::span<const double> x);

double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Moore-Penrose pseudo-inverse via SVD. Singular values at or below
// rcond * sigma_max are treated as zero, so exact rank deficiency is handled
// (pinv(diag(2,0)) = diag(0.5,0)). Throws std::runtime_error if the SVD fails.
Matrix pseudo_inverse(const Matrix& a, double rcond = 1e-12);

// Orthonormalizes the rows (QR on the transpose). Requires rows <= cols and
// linearly independent rows; a pivot below 1e-10 * ||a||_F raises
// std::runtime_error. An already orthonormal input comes back with each row
// equal to the original up to sign.
Matrix orthonormalize_rows(const Matrix& a);

// i.i.d. N(0, 1/n) entries, the standard compressive-sensing scaling.
Matrix gauss_matrix(Rng& rng, int m, int n);

}  // namespace bcskit
