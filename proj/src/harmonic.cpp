#include "qpdrive/harmonic.hpp"

#include <cmath>
#include <limits>

#include <Eigen/QR>

namespace qpdrive {

namespace {

double fourier_weight(Index j) { return j == 0 ? 1.0 : 2.0; }

} // namespace

ComplexMatrix build_fourier_matrix(const FrequencySet& freqs, const Eigen::Ref<const Vector>& times) {
  const Index n = times.size();
  const Index m = freqs.size();
  ComplexMatrix F(n, m);
  for (Index j = 0; j < m; ++j) {
    const double w = fourier_weight(j);
    for (Index i = 0; i < n; ++i) F(i, j) = w * std::polar(1.0, freqs.omegas(j) * times(i));
  }
  return F;
}

Matrix periodic_part(const ComplexMatrix& F, const ComplexMatrix& A) {
  return (F * A).real();
}

HarmonicModel fit_periodic(const Eigen::Ref<const Matrix>& Y, const ComplexMatrix& F,
                           const FrequencySet& freqs) {
  const Index n = Y.rows();
  const Index k = Y.cols();
  const Index m = F.cols();
  if (F.rows() != n) throw InputError("Fourier matrix rows do not match the data");
  if (freqs.size() != m) throw InputError("Fourier matrix columns do not match the frequency set");
  if (n < 2 * m - 1)
    throw InputError("harmonic fit needs at least 2m-1 = " + std::to_string(2 * m - 1) + " samples");

  // Real design: Re(F A) = Re(F) Re(A) - Im(F) Im(A). A sine column that
  // vanishes on the sample grid (omega = 0 or Nyquist) is left out and the
  // corresponding Im(A) fixed at zero.
  std::vector<std::pair<Index, bool>> columns;   // (frequency, is_imaginary_part)
  for (Index j = 0; j < m; ++j) {
    columns.emplace_back(j, false);
    if (F.col(j).imag().norm() > 1e-10 * F.col(j).real().norm() + 1e-300) columns.emplace_back(j, true);
  }
  Matrix design(n, static_cast<Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto [j, imag] = columns[c];
    design.col(static_cast<Index>(c)) = imag ? Vector(-F.col(j).imag()) : Vector(F.col(j).real());
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    Index a = 0;
    Index b = std::min<Index>(1, m - 1);
    double gap = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < m; ++i)
      for (Index j = i + 1; j < m; ++j)
        if (std::abs(freqs.omegas(i) - freqs.omegas(j)) < gap) {
          gap = std::abs(freqs.omegas(i) - freqs.omegas(j));
          a = i;
          b = j;
        }
    throw NumericalError("harmonic design is rank deficient; closest frequency pair is omega = " +
                         std::to_string(freqs.omegas(a)) + " and omega = " +
                         std::to_string(freqs.omegas(b)));
  }
  const Matrix coef = qr.solve(Matrix(Y));

  HarmonicModel model;
  model.freqs = freqs;
  model.A = ComplexMatrix::Zero(m, k);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto [j, imag] = columns[c];
    if (imag)
      model.A.row(j).imag() = coef.row(static_cast<Index>(c));
    else
      model.A.row(j).real() = coef.row(static_cast<Index>(c));
  }
  const Matrix residual = Y - periodic_part(F, model.A);
  model.residual_norm = (residual.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().transpose();
  return model;
}

ChaoticCoefficients chaotic_coefficients(const Eigen::Ref<const Matrix>& Y,
                                         const HarmonicModel& harmonic, const KernelBasis& basis,
                                         const ComplexMatrix& F) {
  const Index n = Y.rows();
  if (basis.size() != n || F.rows() != n || harmonic.A.rows() != F.cols() ||
      harmonic.A.cols() != Y.cols())
    throw InputError("chaotic coefficients: inconsistent shapes");
  const Matrix residual = Y - periodic_part(F, harmonic.A);
  ChaoticCoefficients out;
  out.E = basis.phis.transpose() * residual / static_cast<double>(n);
  return out;
}

RowVector eval_gper(const HarmonicModel& harmonic, double t) {
  const Index m = harmonic.A.rows();
  RowVector out = RowVector::Zero(harmonic.A.cols());
  for (Index j = 0; j < m; ++j) {
    const Complex phase = fourier_weight(j) * std::polar(1.0, harmonic.freqs.omegas(j) * t);
    out += (phase * harmonic.A.row(j)).real();
  }
  return out;
}

} // namespace qpdrive
