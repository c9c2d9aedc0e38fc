#include "bcskit/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace bcskit {

using EigenRowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRowMat = Eigen::Map<EigenRowMat>;
using ConstMapRowMat = Eigen::Map<const EigenRowMat>;

namespace {

ConstMapRowMat as_eigen(const Matrix& a) {
  return ConstMapRowMat(a.data.data(), a.rows, a.cols);
}

MapRowMat as_eigen(Matrix& a) { return MapRowMat(a.data.data(), a.rows, a.cols); }

}  // namespace

Matrix Matrix::identity(int n) {
  Matrix out(n, n);
  for (int i = 0; i < n; ++i) out.at(i, i) = 1.0;
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("matmul: inner dimensions disagree");
  Matrix out(a.rows, b.cols);
  as_eigen(out).noalias() = as_eigen(a) * as_eigen(b);
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  as_eigen(out) = as_eigen(a).transpose();
  return out;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (static_cast<int>(x.size()) != a.cols)
    throw std::invalid_argument("matvec: vector length disagrees");
  std::vector<double> y(a.rows);
  Eigen::Map<Eigen::VectorXd>(y.data(), a.rows).noalias() =
      as_eigen(a) * Eigen::Map<const Eigen::VectorXd>(x.data(), a.cols);
  return y;
}

std::vector<double> matvec_t(const Matrix& a, std::span<const double> x) {
  if (static_cast<int>(x.size()) != a.rows)
    throw std::invalid_argument("matvec_t: vector length disagrees");
  std::vector<double> y(a.cols);
  Eigen::Map<Eigen::VectorXd>(y.data(), a.cols).noalias() =
      as_eigen(a).transpose() * Eigen::Map<const Eigen::VectorXd>(x.data(), a.rows);
  return y;
}

double frobenius_norm(const Matrix& a) { return as_eigen(a).norm(); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument("max_abs_diff: shapes disagree");
  if (a.data.empty()) return 0.0;
  return (as_eigen(a) - as_eigen(b)).cwiseAbs().maxCoeff();
}

Matrix pseudo_inverse(const Matrix& a, double rcond) {
  if (a.rows == 0 || a.cols == 0)
    throw std::invalid_argument("pseudo_inverse: empty matrix");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(as_eigen(a),
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success)
    throw std::runtime_error("pseudo_inverse: SVD did not converge");
  const auto& s = svd.singularValues();
  double cutoff = rcond * (s.size() > 0 ? s(0) : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  Matrix out(a.cols, a.rows);
  as_eigen(out).noalias() =
      svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return out;
}

Matrix orthonormalize_rows(const Matrix& a) {
  if (a.rows > a.cols)
    throw std::invalid_argument("orthonormalize_rows: more rows than columns");
  Eigen::MatrixXd at = as_eigen(a).transpose();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(at);
  Eigen::MatrixXd r = qr.matrixQR().topRows(a.rows).triangularView<Eigen::Upper>();
  double scale = 1e-10 * frobenius_norm(a);
  for (int i = 0; i < a.rows; ++i)
    if (std::abs(r(i, i)) < scale)
      throw std::runtime_error("orthonormalize_rows: rank-deficient input");
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.cols, a.rows);
  // Householder can flip directions; undo so an orthonormal input round-trips
  // with positive alignment.
  for (int i = 0; i < a.rows; ++i)
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  Matrix out(a.rows, a.cols);
  as_eigen(out) = q.transpose();
  return out;
}

Matrix gauss_matrix(Rng& rng, int m, int n) {
  if (m <= 0 || n <= 0)
    throw std::invalid_argument("gauss_matrix: dimensions must be positive");
  Matrix out(m, n);
  double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& v : out.data) v = rng.normal() * scale;
  return out;
}

}  // namespace bcskit
