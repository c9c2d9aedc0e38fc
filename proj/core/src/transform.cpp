#include "bcskit/transform.hpp"

#include <Eigen/Core>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace bcskit {

namespace {

using EigenRowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const EigenRowMat> as_eigen(const Matrix& a) {
  return {a.data.data(), a.rows, a.cols};
}

Matrix make_dct_matrix(int n) {
  Matrix c(n, n);
  double s0 = std::sqrt(1.0 / n);
  double s = std::sqrt(2.0 / n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      c.at(k, i) = (k == 0 ? s0 : s) *
                   std::cos(std::numbers::pi * k * (2.0 * i + 1.0) / (2.0 * n));
  return c;
}

}  // namespace

const Matrix& dct_matrix(int n) {
  if (n <= 0) throw std::invalid_argument("dct_matrix: size must be positive");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Matrix>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Matrix>(make_dct_matrix(n));
  return *slot;
}

Matrix dct2(const Matrix& x) {
  if (x.rows == 0 || x.cols == 0)
    throw std::invalid_argument("dct2: empty input");
  const Matrix& cr = dct_matrix(x.rows);
  const Matrix& cc = dct_matrix(x.cols);
  Matrix out(x.rows, x.cols);
  Eigen::Map<EigenRowMat>(out.data.data(), out.rows, out.cols).noalias() =
      as_eigen(cr) * as_eigen(x) * as_eigen(cc).transpose();
  return out;
}

Matrix idct2(const Matrix& y) {
  if (y.rows == 0 || y.cols == 0)
    throw std::invalid_argument("idct2: empty input");
  const Matrix& cr = dct_matrix(y.rows);
  const Matrix& cc = dct_matrix(y.cols);
  Matrix out(y.rows, y.cols);
  Eigen::Map<EigenRowMat>(out.data.data(), out.rows, out.cols).noalias() =
      as_eigen(cr).transpose() * as_eigen(y) * as_eigen(cc);
  return out;
}

}  // namespace bcskit
