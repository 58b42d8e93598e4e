#include "qpdrive/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <unsupported/Eigen/FFT>

namespace qpdrive {

ScoreMatrix frequency_scores(const KernelBasis& basis) {
  const Index n = basis.size();
  const Index L = basis.rank();
  if (L < 2) throw InputError("frequency scoring needs at least two eigenvectors");
  ScoreMatrix scores;
  scores.H.resize(n, L);
  scores.W.resize(n, L);

  Eigen::FFT<double> fft;
  const double unitary = 1.0 / std::sqrt(static_cast<double>(n));
  Vector column(n);
  ComplexVector spectrum(n);
  for (Index l = 0; l < L; ++l) {
    column = basis.phis.col(l);
    fft.fwd(spectrum, column);
    scores.H.col(l) = spectrum * (unitary / std::sqrt(basis.lambdas(l)));
  }
  scores.W.col(0) = scores.H.col(0).cwiseAbs();
  for (Index l = 1; l < L; ++l) scores.W.col(l) = scores.W.col(l - 1) + scores.H.col(l).cwiseAbs();
  return scores;
}

FrequencySet FrequencySet::from_bins(std::vector<Index> bins, Index grid_size, double dt) {
  bins.push_back(0);
  std::sort(bins.begin(), bins.end());
  bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
  FrequencySet set;
  set.grid_size = grid_size;
  set.dt = dt;
  set.bins = bins;
  set.omegas.resize(static_cast<Index>(bins.size()));
  for (std::size_t i = 0; i < bins.size(); ++i)
    set.omegas(static_cast<Index>(i)) =
        2.0 * std::numbers::pi * static_cast<double>(bins[i]) / (static_cast<double>(grid_size) * dt);
  return set;
}

namespace {

void check_params(const ScoreMatrix& scores, const SelectionParams& params) {
  const Index L = scores.columns();
  if (!(params.L0 > 1 && params.L0 < L))
    throw InputError("L0 must satisfy 1 < L0 < L (L0 = " + std::to_string(params.L0) +
                     ", L = " + std::to_string(L) + ")");
  if (!(params.eps1 > 0.0) || !(params.eps2 > 0.0))
    throw InputError("thresholds eps1 and eps2 must be positive");
}

// Divisor applied to W(., L0) before the eps1 test.
double eps1_scale(const ScoreMatrix& scores, const SelectionParams& params) {
  if (params.normalization == ScoreNormalization::None || scores.bins() < 2) return 1.0;
  const double peak = scores.W.col(params.L0 - 1).tail(scores.bins() - 1).maxCoeff();
  return peak > 0.0 ? peak : 1.0;
}

bool survives(const ScoreMatrix& scores, const SelectionParams& params, double scale, Index j) {
  const double base = scores.W(j, params.L0 - 1);
  if (!(base / scale >= params.eps1)) return false;
  const double growth = std::log(scores.W(j, scores.columns() - 1)) - std::log(base);
  return growth <= params.eps2;
}

} // namespace

std::vector<Index> surviving_bins(const ScoreMatrix& scores, const SelectionParams& params) {
  check_params(scores, params);
  const double scale = eps1_scale(scores, params);
  std::vector<Index> out;
  for (Index j = 0; j < scores.bins(); ++j)
    if (survives(scores, params, scale, j)) out.push_back(j);
  return out;
}

FrequencySet select_frequencies(const ScoreMatrix& scores, const SelectionParams& params, double dt) {
  check_params(scores, params);
  if (!(dt > 0.0)) throw InputError("sampling interval dt must be positive");
  const Index n = scores.bins();
  const double scale = eps1_scale(scores, params);
  std::vector<Index> bins;
  for (Index j = 1; j <= n / 2; ++j) {
    if (params.drop_bin1 && j == 1) continue;
    // Conjugate twins j and n - j stand for the same real frequency.
    if (survives(scores, params, scale, j) || survives(scores, params, scale, n - j)) bins.push_back(j);
  }
  auto set = FrequencySet::from_bins(std::move(bins), n, dt);
  set.params = params;
  return set;
}

std::string to_string(ScoreNormalization mode) {
  return mode == ScoreNormalization::Max ? "max" : "none";
}

ScoreNormalization score_normalization_from_string(const std::string& name) {
  if (name == "none") return ScoreNormalization::None;
  if (name == "max") return ScoreNormalization::Max;
  throw InputError("unknown score normalization '" + name + "' (expected none or max)");
}

std::vector<Index> elbow_indices(const Vector& curve, Index count) {
  std::vector<Index> idx;
  if (curve.size() < 3 || count <= 0) return idx;
  std::vector<std::pair<double, Index>> bends;
  for (Index i = 1; i + 1 < curve.size(); ++i) {
    const double second = curve(i + 1) - 2.0 * curve(i) + curve(i - 1);
    if (std::isfinite(second)) bends.emplace_back(std::abs(second), i);
  }
  std::stable_sort(bends.begin(), bends.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (Index i = 0; i < count && i < static_cast<Index>(bends.size()); ++i)
    idx.push_back(bends[static_cast<std::size_t>(i)].second);
  std::sort(idx.begin(), idx.end());
  return idx;
}

ThresholdSuggestion suggest_thresholds(const ScoreMatrix& scores, double eps1, Index L0,
                                       Index num_candidates) {
  const Index n = scores.bins();
  const Index L = scores.columns();
  if (L < 3) throw InputError("threshold suggestions need at least three eigenvectors");
  ThresholdSuggestion out;

  // Mean log-score as eigenvectors are added; slope breaks mark L0 candidates.
  Vector growth(L);
  for (Index l = 0; l < L; ++l) growth(l) = scores.W.col(l).array().max(1e-300).log().mean();
  for (Index i : elbow_indices(growth, num_candidates)) {
    const Index candidate = i + 1;   // 1-based column
    if (candidate > 1 && candidate < L) out.L0_candidates.push_back(candidate);
  }

  out.L0_used = L0 > 1 && L0 < L ? L0
                : !out.L0_candidates.empty() ? out.L0_candidates.front()
                                             : std::max<Index>(2, L / 2);
  std::vector<double> ratios;
  for (Index j = 0; j <= n / 2; ++j) {
    const double base = scores.W(j, out.L0_used - 1);
    if (base >= eps1) ratios.push_back(std::log(scores.W(j, L - 1)) - std::log(base));
  }
  std::sort(ratios.begin(), ratios.end());
  Vector sorted = Eigen::Map<const Vector>(ratios.data(), static_cast<Index>(ratios.size()));
  for (Index i : elbow_indices(sorted, num_candidates)) out.eps2_candidates.push_back(sorted(i));
  std::sort(out.eps2_candidates.begin(), out.eps2_candidates.end());
  return out;
}

Index fold_bin(long long bin, Index grid) {
  long long r = bin % grid;
  if (r < 0) r += grid;
  return static_cast<Index>(std::min<long long>(r, grid - r));
}

namespace {

bool explained(Index bin, const std::vector<Index>& gens, int max_coeff, Index grid, Index tolerance) {
  std::vector<int> coeff(gens.size(), -max_coeff);
  if (gens.empty()) return false;
  while (true) {
    long long value = 0;
    for (std::size_t i = 0; i < gens.size(); ++i) value += static_cast<long long>(coeff[i]) * gens[i];
    const Index folded = fold_bin(value, grid);
    if (std::abs(static_cast<long long>(folded) - static_cast<long long>(bin)) <= tolerance) return true;
    std::size_t i = 0;
    while (i < coeff.size() && coeff[i] == max_coeff) coeff[i++] = -max_coeff;
    if (i == coeff.size()) return false;
    ++coeff[i];
  }
}

} // namespace

std::vector<Index> estimate_generators(const FrequencySet& freqs, int max_coeff, Index tolerance,
                                       Index max_generators) {
  std::vector<Index> gens;
  for (Index bin : freqs.bins) {
    if (bin == 0) continue;
    if (explained(bin, gens, max_coeff, freqs.grid_size, tolerance)) continue;
    gens.push_back(bin);
    if (static_cast<Index>(gens.size()) >= max_generators) break;
  }
  return gens;
}

} // namespace qpdrive
