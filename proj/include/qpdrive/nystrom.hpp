#pragma once

#include <string>

#include "qpdrive/harmonic.hpp"
#include "qpdrive/kernel.hpp"
#include "qpdrive/timeseries.hpp"

namespace qpdrive {

/// Row weight applied to the right singular vectors.
///   Consistent: q_n^{-1/2}, matching the normalized kernel, so evaluation at
///               a training state reproduces the training projection.
///   PaperExact: q_n^{-1}.
enum class EvaluatorMode { Consistent, PaperExact };

std::string to_string(EvaluatorMode mode);
EvaluatorMode evaluator_mode_from_string(const std::string& name);

inline constexpr double kDefaultSupportFloor = 1e-12;

/// Precomputed tables for out-of-sample evaluation of the chaotic map.
struct EvaluatorTable {
  Matrix gamma_tilde;    // N' x L, gamma_{n,l} lambda_l^{-1/2} w_n
  EvaluatorMode mode = EvaluatorMode::Consistent;
  Matrix products;       // gamma_tilde * E, N' x k
};

EvaluatorTable build_evaluator(const KernelBasis& basis, const ChaoticCoefficients& chaotic,
                               EvaluatorMode mode = EvaluatorMode::Consistent);

/// Kernel section k(x_n, y) over the training states together with its mean s.
struct KernelSection {
  Vector values;
  double mass = 0.0;
};

KernelSection kernel_section_with_mass(const EmbeddedSeries& train, double epsilon,
                                       const Eigen::Ref<const RowVector>& y);

/// Continuous extension of phi_l:
///   phibar_l(y) = 1/(N' sigma_l) sum_n k(y, x_n) / (deg_R(y) sqrt(q_n)) gamma_{n,l}.
/// `l` is zero-based. Throws OutOfSupportError when deg_R(y) < s_min.
double nystrom_phi(const KernelBasis& basis, const EmbeddedSeries& train,
                   const Eigen::Ref<const RowVector>& y, Index l,
                   double s_min = kDefaultSupportFloor);

/// All L extended eigenfunctions at y.
RowVector nystrom_phis(const KernelBasis& basis, const EmbeddedSeries& train,
                       const Eigen::Ref<const RowVector>& y, double s_min = kDefaultSupportFloor);

/// g_chaos^(0)(y) = k_os^T (Gamma~ E) / (N' s): a convex combination of the
/// rows of Gamma~ E.
RowVector eval_gchaos0(const EvaluatorTable& table, const EmbeddedSeries& train, double epsilon,
                       const Eigen::Ref<const RowVector>& y, double s_min = kDefaultSupportFloor);

} // namespace qpdrive
