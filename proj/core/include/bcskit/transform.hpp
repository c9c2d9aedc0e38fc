#pragma once

#include "bcskit/linalg.hpp"

namespace bcskit {

// Orthonormal 2-D DCT-II and its inverse, applied separably. Works on any
// rectangular shape; transform matrices are cached per size.
Matrix dct2(const Matrix& x);
Matrix idct2(const Matrix& y);

// The orthonormal 1-D DCT-II matrix C with C * C^T = I. Row k, column i:
// sqrt((k == 0 ? 1 : 2) / n) * cos(pi * k * (2i + 1) / (2n)).
const Matrix& dct_matrix(int n);

}  // namespace bcskit
