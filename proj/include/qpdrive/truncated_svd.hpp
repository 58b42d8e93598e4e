#pragma once

#include <cstdint>
#include <functional>

#include "qpdrive/types.hpp"

namespace qpdrive {

/// Matrix-free access to a real operator A (rows x cols) and its transpose.
struct LinearOperator {
  Index rows = 0;
  Index cols = 0;
  std::function<void(const Vector& x, Vector& y)> apply;            // y = A x
  std::function<void(const Vector& x, Vector& y)> apply_transpose;  // y = A^T x
};

struct LanczosOptions {
  double tolerance = 1e-12;     // residual bound relative to the largest singular value
  Index max_dimension = 0;      // 0: min(rows, cols)
  std::uint64_t seed = 0x5eedULL;
};

/// Leading singular triplets, sorted by decreasing singular value.
struct TruncatedSvd {
  Vector singular_values;
  Matrix left;        // rows x r, orthonormal columns
  Matrix right;       // cols x r, orthonormal columns
  Vector residuals;   // ||A^T u_i - sigma_i v_i||
  Index krylov_dimension = 0;
  bool converged = false;
};

/// Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization.
/// The Krylov space grows until the leading `rank` triplets meet the
/// residual tolerance or the space is exhausted (then the result is exact).
TruncatedSvd lanczos_svd(const LinearOperator& op, Index rank, const LanczosOptions& options = {});

} // namespace qpdrive
