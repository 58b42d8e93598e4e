#pragma once

#include "qpdrive/kernel.hpp"
#include "qpdrive/spectral.hpp"
#include "qpdrive/types.hpp"

namespace qpdrive {

/// F(n, j) = w_j exp(i omega_j t_n) with w_1 = 1 and w_j = 2 otherwise; the
/// doubled weight stands in for the dropped conjugate twin of each bin.
ComplexMatrix build_fourier_matrix(const FrequencySet& freqs, const Eigen::Ref<const Vector>& times);

/// Periodic component g_per(t) = Re sum_j w_j A_j exp(i omega_j t).
struct HarmonicModel {
  ComplexMatrix A;         // m x k
  FrequencySet freqs;
  Vector residual_norm;    // per-channel RMS of the non-periodic residual

  Index channels() const { return A.cols(); }
};

/// Least-squares fit of Re(F A) to Y via the equivalent real design
/// [1, cos, -sin, ...]. Near-duplicate frequencies make the design rank
/// deficient and raise NumericalError naming the closest pair.
HarmonicModel fit_periodic(const Eigen::Ref<const Matrix>& Y, const ComplexMatrix& F,
                           const FrequencySet& freqs);

/// Re(F A), the periodic part on the training times.
Matrix periodic_part(const ComplexMatrix& F, const ComplexMatrix& A);

struct ChaoticCoefficients {
  Matrix E;   // L x k
};

/// E = (1/N') Phi^T (Y - Re(F A)); Phi E is the L^2(mu_N) projection of the residual.
ChaoticCoefficients chaotic_coefficients(const Eigen::Ref<const Matrix>& Y,
                                         const HarmonicModel& harmonic, const KernelBasis& basis,
                                         const ComplexMatrix& F);

RowVector eval_gper(const HarmonicModel& harmonic, double t);

} // namespace qpdrive
