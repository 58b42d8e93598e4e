#pragma once

#include <string>
#include <vector>

#include "qpdrive/kernel.hpp"
#include "qpdrive/types.hpp"

namespace qpdrive {

/// Frequency scores of the kernel eigenvectors.
///   H = F Phi Lambda^{-1/2} with F the unitary DFT (factor 1/sqrt(N')),
///   W(n, l) = sum_{i <= l} |H(n, i)|.
struct ScoreMatrix {
  Matrix W;                          // N' x L, rows nondecreasing in l
  ComplexMatrix H;                   // N' x L
  std::string dft_norm = "unitary";

  Index bins() const { return W.rows(); }
  Index columns() const { return W.cols(); }
};

ScoreMatrix frequency_scores(const KernelBasis& basis);

/// How W(., L0) is scaled before the eps1 test. `Max` divides by the largest
/// nonzero-bin score so eps1 becomes a fraction of the strongest frequency;
/// the eps2 test is a log ratio and unaffected either way.
enum class ScoreNormalization { None, Max };

std::string to_string(ScoreNormalization mode);
ScoreNormalization score_normalization_from_string(const std::string& name);

struct SelectionParams {
  double eps1 = 0.1;     // minimum score W(j, L0)
  double eps2 = 3.1;     // maximum log growth ln W(j, L) - ln W(j, L0)
  Index L0 = 100;        // 1-based column index, 1 < L0 < L
  bool drop_bin1 = false;
  ScoreNormalization normalization = ScoreNormalization::None;
};

/// Selected eigenfrequencies in radians per time unit, ascending, with
/// omega_1 = 0 always present and every omega in [0, pi/dt].
struct FrequencySet {
  Vector omegas;
  std::vector<Index> bins;
  Index grid_size = 0;   // N' of the DFT the bins refer to
  double dt = 1.0;
  SelectionParams params;

  Index size() const { return omegas.size(); }

  /// Frequencies on an N'-point grid from explicit bins (bin 0 is added).
  static FrequencySet from_bins(std::vector<Index> bins, Index grid_size, double dt);
};

/// Raw DFT bins (0..N'-1) passing both filters, before conjugate merging.
std::vector<Index> surviving_bins(const ScoreMatrix& scores, const SelectionParams& params);

FrequencySet select_frequencies(const ScoreMatrix& scores, const SelectionParams& params, double dt);

/// Slope-change candidates for L0 and eps2 (diagnostic only; both lists ascending).
struct ThresholdSuggestion {
  std::vector<Index> L0_candidates;
  std::vector<double> eps2_candidates;
  Index L0_used = 0;
};

ThresholdSuggestion suggest_thresholds(const ScoreMatrix& scores, double eps1, Index L0 = 0,
                                       Index num_candidates = 3);

/// Heuristic generator search: walks the nonzero bins in ascending order and
/// promotes a bin to a generator unless it lies within `tolerance` bins of
/// an integer combination (coefficients in [-max_coeff, max_coeff]) of the
/// generators found so far, folded into [0, N'/2]. Returns the generators;
/// their count is a rough quasiperiodicity dimension.
std::vector<Index> estimate_generators(const FrequencySet& freqs, int max_coeff = 5,
                                       Index tolerance = 1, Index max_generators = 6);

/// Fold an integer bin into [0, grid/2].
Index fold_bin(long long bin, Index grid);

/// Indices (ascending) of the largest |second differences| of a sampled curve.
std::vector<Index> elbow_indices(const Vector& curve, Index count);

} // namespace qpdrive
