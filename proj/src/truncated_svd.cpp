#include "qpdrive/truncated_svd.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/SVD>

namespace qpdrive {

namespace {

// Classical Gram-Schmidt applied twice against the first `count` columns.
void reorthogonalize(const Matrix& basis, Index count, Vector& x) {
  if (count == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Vector h = basis.leftCols(count).transpose() * x;
    x.noalias() -= basis.leftCols(count) * h;
  }
}

// Unit vector orthogonal to the first `count` columns of `basis`.
Vector fresh_direction(const Matrix& basis, Index count, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x(basis.rows());
  for (int attempt = 0; attempt < 8; ++attempt) {
    for (Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
    reorthogonalize(basis, count, x);
    const double norm = x.norm();
    if (norm > 1e-8) return x / norm;
  }
  throw NumericalError("lanczos: unable to extend the Krylov basis");
}

} // namespace

TruncatedSvd lanczos_svd(const LinearOperator& op, Index rank, const LanczosOptions& options) {
  const Index m = op.rows;
  const Index n = op.cols;
  const Index full = std::min(m, n);
  if (rank < 1 || rank > full) throw InputError("lanczos: requested rank out of range");
  const Index kmax = options.max_dimension > 0 ? std::min(options.max_dimension, full) : full;

  std::mt19937_64 rng(options.seed);
  Matrix U(m, kmax);
  Matrix V(n, kmax + 1);
  Vector alpha = Vector::Zero(kmax);
  Vector beta = Vector::Zero(kmax);

  V.col(0) = fresh_direction(V, 0, rng);
  Vector u(m);
  Vector v(n);

  // Check points grow geometrically so the small SVDs stay a minor cost.
  Index next_check = std::min(kmax, std::max<Index>(2 * rank, rank + 20));
  const double breakdown = 1e-14;

  TruncatedSvd result;
  Index k = 0;
  while (k < kmax) {
    op.apply(V.col(k), u);
    if (k > 0) u.noalias() -= beta(k - 1) * U.col(k - 1);
    reorthogonalize(U, k, u);
    alpha(k) = u.norm();
    if (alpha(k) <= breakdown) {
      alpha(k) = 0.0;
      U.col(k) = fresh_direction(U, k, rng);
    } else {
      U.col(k) = u / alpha(k);
    }

    op.apply_transpose(U.col(k), v);
    v.noalias() -= alpha(k) * V.col(k);
    reorthogonalize(V, k + 1, v);
    beta(k) = v.norm();
    ++k;
    if (k < n) {
      if (beta(k - 1) <= breakdown) {
        beta(k - 1) = 0.0;
        V.col(k) = fresh_direction(V, k, rng);
      } else {
        V.col(k) = v / beta(k - 1);
      }
    } else {
      beta(k - 1) = 0.0;
    }

    if (k < next_check && k < kmax) continue;

    Matrix B = Matrix::Zero(k, k);
    for (Index j = 0; j < k; ++j) {
      B(j, j) = alpha(j);
      if (j + 1 < k) B(j, j + 1) = beta(j);
    }
    Eigen::BDCSVD<Matrix> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const Index r = std::min(rank, k);
    Vector residuals(r);
    for (Index i = 0; i < r; ++i) residuals(i) = std::abs(beta(k - 1) * svd.matrixU()(k - 1, i));
    const double scale = s.size() > 0 ? s(0) : 0.0;
    const bool done = k >= kmax || (r == rank && residuals.maxCoeff() <= options.tolerance * scale);
    if (done) {
      result.singular_values = s.head(r);
      result.left = U.leftCols(k) * svd.matrixU().leftCols(r);
      result.right = V.leftCols(k) * svd.matrixV().leftCols(r);
      result.residuals = residuals;
      result.krylov_dimension = k;
      result.converged = residuals.maxCoeff() <= options.tolerance * scale || k == full;
      return result;
    }
    next_check = std::min(kmax, k + std::max<Index>(rank / 2, 10));
  }
  return result;
}

} // namespace qpdrive
