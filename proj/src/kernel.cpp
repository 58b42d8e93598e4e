#include "qpdrive/kernel.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "qpdrive/truncated_svd.hpp"

namespace qpdrive {

Index storage_size(const KernelStorage& s) {
  return std::visit([](const auto& m) -> Index { return m.rows(); }, s);
}

bool is_sparse(const KernelStorage& s) { return std::holds_alternative<SparseMatrix>(s); }

Vector multiply(const KernelStorage& s, const Vector& x) {
  return std::visit([&](const auto& m) -> Vector { return m * x; }, s);
}

Vector multiply_transpose(const KernelStorage& s, const Vector& x) {
  return std::visit([&](const auto& m) -> Vector { return m.transpose() * x; }, s);
}

Matrix to_dense(const KernelStorage& s) {
  if (const auto* dense = std::get_if<Matrix>(&s)) return *dense;
  return Matrix(std::get<SparseMatrix>(s));
}

std::string to_string(StorageKind kind) { return kind == StorageKind::Dense ? "dense" : "sparse"; }

std::string to_string(SvdMethod method) {
  switch (method) {
    case SvdMethod::Auto: return "auto";
    case SvdMethod::Dense: return "dense";
    case SvdMethod::Lanczos: return "lanczos";
  }
  return "auto";
}

KernelMatrix gaussian_kernel_matrix(const EmbeddedSeries& emb, double epsilon, double tau,
                                    StorageKind storage) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw InputError("kernel bandwidth epsilon must be positive");
  if (!(tau >= 0.0 && tau < 1.0)) throw InputError("prune threshold tau must lie in [0, 1)");
  const Index n = emb.size();
  const RowMatrix& x = emb.states;

  KernelMatrix km;
  km.epsilon = epsilon;
  km.prune_threshold = tau;

  auto entry = [&](Index i, Index j) {
    const double dist = squared_distance(x.row(i), x.row(j));
    if (!std::isfinite(dist))
      throw InputError("non-finite distance between states " + std::to_string(i) + " and " +
                       std::to_string(j));
    const double value = std::exp(-dist / epsilon);
    return value < tau ? 0.0 : value;
  };

  if (storage == StorageKind::Dense) {
    Matrix K(n, n);
    for (Index i = 0; i < n; ++i) {
      K(i, i) = 1.0;
      for (Index j = i + 1; j < n; ++j) K(i, j) = K(j, i) = entry(i, j);
    }
    km.entries = std::move(K);
    return km;
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    triplets.emplace_back(i, i, 1.0);
    for (Index j = i + 1; j < n; ++j) {
      const double value = entry(i, j);
      if (value > 0.0 || tau == 0.0) {
        triplets.emplace_back(i, j, value);
        triplets.emplace_back(j, i, value);
      }
    }
  }
  SparseMatrix K(n, n);
  K.setFromTriplets(triplets.begin(), triplets.end());
  km.entries = std::move(K);
  return km;
}

NormalizedKernel bistochastic_normalize(const KernelMatrix& km) {
  const Index n = km.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  NormalizedKernel nk;
  nk.d = multiply(km.entries, Vector::Ones(n)) * inv_n;
  for (Index i = 0; i < n; ++i) {
    if (!(nk.d(i) > 0.0))
      throw NumericalError("kernel row " + std::to_string(i) +
                           " has zero mass; increase epsilon or lower the prune threshold");
  }
  nk.q = multiply_transpose(km.entries, nk.d.cwiseInverse()) * inv_n;
  const Vector inv_d = nk.d.cwiseInverse();
  const Vector inv_sqrt_q = nk.q.cwiseSqrt().cwiseInverse();

  if (const auto* dense = std::get_if<Matrix>(&km.entries)) {
    nk.ktilde = Matrix(inv_d.asDiagonal() * (*dense) * inv_sqrt_q.asDiagonal());
  } else {
    SparseMatrix kt = std::get<SparseMatrix>(km.entries);
    for (Index i = 0; i < kt.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(kt, i); it; ++it)
        it.valueRef() *= inv_d(it.row()) * inv_sqrt_q(it.col());
    nk.ktilde = std::move(kt);
  }
  return nk;
}

KernelBasis kernel_eigenbasis(const NormalizedKernel& nk, Index num_eigs,
                              const EigenbasisOptions& options) {
  const Index n = nk.size();
  if (num_eigs < 1) throw InputError("number of eigenpairs must be positive");
  KernelBasis basis;
  basis.d = nk.d;
  basis.q = nk.q;

  Index wanted = num_eigs;
  if (wanted > n) {
    basis.warnings.push_back("requested " + std::to_string(num_eigs) +
                             " eigenpairs but only " + std::to_string(n) +
                             " states are available; truncating");
    wanted = n;
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  const bool dense = options.method == SvdMethod::Dense ||
                     (options.method == SvdMethod::Auto && n <= options.dense_threshold);
  Vector sigma;
  Matrix left;
  Matrix right;
  if (dense) {
    const Matrix M = to_dense(nk.ktilde) * inv_n;
    Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sigma = svd.singularValues().head(wanted);
    left = svd.matrixU().leftCols(wanted);
    right = svd.matrixV().leftCols(wanted);
  } else {
    LinearOperator op;
    op.rows = n;
    op.cols = n;
    op.apply = [&](const Vector& x, Vector& y) { y = multiply(nk.ktilde, x) * inv_n; };
    op.apply_transpose = [&](const Vector& x, Vector& y) {
      y = multiply_transpose(nk.ktilde, x) * inv_n;
    };
    LanczosOptions lopt;
    lopt.tolerance = options.lanczos_tolerance;
    auto svd = lanczos_svd(op, wanted, lopt);
    if (!svd.converged)
      basis.warnings.push_back("truncated SVD did not reach the residual tolerance");
    sigma = std::move(svd.singular_values);
    left = std::move(svd.left);
    right = std::move(svd.right);
  }

  // Drop directions whose eigenvalue falls under the floor; Nystrom
  // formulas divide by sigma.
  const double lambda_top = sigma.size() > 0 ? sigma(0) * sigma(0) : 0.0;
  Index keep = 0;
  while (keep < sigma.size() && sigma(keep) * sigma(keep) >= options.lambda_floor * lambda_top &&
         sigma(keep) > 0.0)
    ++keep;
  if (keep < wanted) {
    basis.warnings.push_back("numerical rank is " + std::to_string(keep) + "; dropped " +
                             std::to_string(wanted - keep) + " eigenpairs below the floor");
  }
  if (keep == 0) throw NumericalError("kernel operator has no singular value above the floor");

  const double root_n = std::sqrt(static_cast<double>(n));
  basis.lambdas = sigma.head(keep).array().square();
  basis.phis = left.leftCols(keep) * root_n;
  basis.gammas = right.leftCols(keep) * root_n;

  for (Index l = 0; l < keep; ++l) {
    Index first = 0;
    while (first < n && std::abs(basis.phis(first, l)) <= 1e-12) ++first;
    if (first < n && basis.phis(first, l) < 0.0) {
      basis.phis.col(l) *= -1.0;
      basis.gammas.col(l) *= -1.0;
    }
  }
  return basis;
}

} // namespace qpdrive
