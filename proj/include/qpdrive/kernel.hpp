#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>

#include "qpdrive/timeseries.hpp"
#include "qpdrive/types.hpp"

namespace qpdrive {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Dense or pruned-sparse storage of an N' x N' kernel-type matrix.
using KernelStorage = std::variant<Matrix, SparseMatrix>;

enum class StorageKind { Dense, Sparse };

Index storage_size(const KernelStorage& s);
bool is_sparse(const KernelStorage& s);
Vector multiply(const KernelStorage& s, const Vector& x);
Vector multiply_transpose(const KernelStorage& s, const Vector& x);
Matrix to_dense(const KernelStorage& s);

/// Squared Euclidean distance, summed term by term (never negative).
template <typename DerivedA, typename DerivedB>
double squared_distance(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).squaredNorm();
}

/// Gaussian kernel values exp(-|x_n - y|^2 / epsilon) between every row of
/// `states` and the point `y`.
template <typename Derived>
Vector kernel_section(const RowMatrix& states, const Eigen::MatrixBase<Derived>& y, double epsilon) {
  Vector out(states.rows());
  for (Index n = 0; n < states.rows(); ++n)
    out(n) = std::exp(-squared_distance(states.row(n), y) / epsilon);
  return out;
}

/// Gaussian kernel matrix on delay-embedded states.
struct KernelMatrix {
  KernelStorage entries;
  double epsilon = 1.0;
  double prune_threshold = 0.0;   // entries below this are zero (dropped when sparse)

  Index size() const { return storage_size(entries); }
};

/// K_ij = exp(-|x_i - x_j|^2 / epsilon). Entries below `tau` are set to zero
/// in dense storage and omitted in sparse storage, so both kinds represent
/// the same matrix.
KernelMatrix gaussian_kernel_matrix(const EmbeddedSeries& emb, double epsilon, double tau = 0.0,
                                    StorageKind storage = StorageKind::Dense);

/// Bistochastic normalization of a kernel matrix:
///   d = (1/N) K 1,   q = (1/N) K^T (1/d),   ktilde = diag(d)^-1 K diag(q)^-1/2.
struct NormalizedKernel {
  Vector d;
  Vector q;
  KernelStorage ktilde;

  Index size() const { return d.size(); }
};

NormalizedKernel bistochastic_normalize(const KernelMatrix& km);

enum class SvdMethod { Auto, Dense, Lanczos };

/// Leading singular triplets of psi -> (1/N) ktilde psi on L^2 of the
/// sampling measure. Left vectors phi_l and right vectors gamma_l are
/// orthonormal under <u, v> = (1/N) sum u_n v_n; lambda_l = sigma_l^2.
struct KernelBasis {
  Vector lambdas;   // decreasing, lambda_1 = 1
  Matrix phis;      // N' x L
  Matrix gammas;    // N' x L
  Vector d;
  Vector q;
  double epsilon = 1.0;
  Index delays = 0;
  std::vector<std::string> warnings;

  Index size() const { return phis.rows(); }
  Index rank() const { return lambdas.size(); }
  Vector sigmas() const { return lambdas.cwiseSqrt(); }
};

struct EigenbasisOptions {
  SvdMethod method = SvdMethod::Auto;
  double lambda_floor = 1e-10;     // relative to lambda_1
  Index dense_threshold = 800;     // Auto uses the dense SVD up to this size
  double lanczos_tolerance = 1e-12;
};

KernelBasis kernel_eigenbasis(const NormalizedKernel& nk, Index num_eigs,
                              const EigenbasisOptions& options = {});

std::string to_string(StorageKind kind);
std::string to_string(SvdMethod method);

} // namespace qpdrive
