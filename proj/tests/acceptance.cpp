// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
//
// The synthetic system is the two-channel skew product on the 2-torus with
// generators at DFT bins 55 and 89 of a 4096-point grid and contracting
// chaos 0.5 tanh(x). Training uses N' = 4096 state/target pairs so the
// generators sit exactly on the DFT grid of the training window.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "qpdrive/model_io.hpp"
#include "qpdrive/pipeline.hpp"
#include "qpdrive/synth.hpp"

using namespace qpdrive;

namespace {

// Pinned operating point for the synthetic system.
constexpr Index kGrid = 4096;
constexpr Index kGen1 = 55;
constexpr Index kGen2 = 89;
constexpr int kLatticeBound = 5;
constexpr Index kDelays = 4;
constexpr double kEpsilon = 1.0;
constexpr Index kNumEigs = 120;
constexpr Index kL0 = 30;
constexpr double kEps1 = 0.1;
constexpr double kEps2 = 2.5;
constexpr Index kRollout = 2000;
constexpr Index kWindow = 500;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (limit_seconds > 0.0 && secs > limit_seconds) {
    out.pass = false;
    out.detail += "; runtime over " + std::to_string(limit_seconds) + " s";
  }
  if (!out.pass) ++failures;
  std::printf("%s [%d] %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", id, name.c_str(), out.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << std::scientific << v;
  return ss.str();
}

AnalyzeOptions operating_point() {
  AnalyzeOptions o;
  o.delays = kDelays;
  o.epsilon = kEpsilon;
  o.num_eigs = kNumEigs;
  o.selection.eps1 = kEps1;
  o.selection.eps2 = kEps2;
  o.selection.L0 = kL0;
  o.seed = 7;
  return o;
}

KernelBasis small_basis(Index n_states, Index num_eigs, NormalizedKernel* normalized = nullptr) {
  const auto gen = generate(SynthSpec::two_torus(n_states + kDelays, 3));
  const auto [std_series, stats] = standardize(gen.series);
  const auto emb = delay_embed(std_series, kDelays);
  auto nk = bistochastic_normalize(gaussian_kernel_matrix(emb, kEpsilon));
  auto basis = kernel_eigenbasis(nk, num_eigs);
  if (normalized) *normalized = std::move(nk);
  return basis;
}

bool bitwise_equal(const RowMatrix& a, const RowMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

} // namespace

int main() {
  std::printf("qpdrive acceptance suite\n");

  // 1. Normalization invariants on N' = 500.
  report(1, "normalization invariants (N'=500)", 10.0, [] {
    const auto basis = small_basis(500, 50);
    const double n = static_cast<double>(basis.size());
    const double sigma_err = std::abs(basis.sigmas()(0) - 1.0);
    const Vector phi1 = basis.phis.col(0);
    const double phi_dev = (phi1.array() - phi1.mean()).abs().maxCoeff();
    const double gamma_dev = (basis.gammas.col(0) - basis.q.cwiseSqrt()).cwiseAbs().maxCoeff();
    const double q_mean = std::abs(basis.q.mean() - 1.0);
    const Index L = basis.rank();
    const double gram_phi = ((basis.phis.transpose() * basis.phis) / n - Matrix::Identity(L, L)).cwiseAbs().maxCoeff();
    const double gram_gamma =
        ((basis.gammas.transpose() * basis.gammas) / n - Matrix::Identity(L, L)).cwiseAbs().maxCoeff();
    const bool ok = sigma_err < 1e-8 && phi_dev < 1e-8 && gamma_dev < 1e-8 && q_mean < 1e-10 && gram_phi < 1e-8 &&
                    gram_gamma < 1e-8;
    return Outcome{ok, "|sigma1-1|=" + fmt(sigma_err) + " phi1 dev=" + fmt(phi_dev) + " |gamma1-sqrt q|=" +
                           fmt(gamma_dev) + " |mean q-1|=" + fmt(q_mean) + " gram(phi)=" + fmt(gram_phi) +
                           " gram(gamma)=" + fmt(gram_gamma)};
  });

  // 2. SVD path versus a dense eigensolver on the materialized operator p.
  report(2, "operator equivalence (N'=200)", 5.0, [] {
    NormalizedKernel nk;
    const Index L = 20;
    const auto basis = small_basis(200, L, &nk);
    const double n = static_cast<double>(basis.size());
    // p = (1/N') k~ k~^T as a kernel; as an operator on L2(mu_N) it carries
    // another 1/N' from the empirical measure.
    const Matrix kt = to_dense(nk.ktilde);
    const Matrix p = kt * kt.transpose() / n;
    Eigen::SelfAdjointEigenSolver<Matrix> es(p / n);
    const Vector evals = es.eigenvalues().reverse();
    const Matrix evecs = es.eigenvectors().rowwise().reverse();
    const double lambda_err = (evals.head(L) - basis.lambdas.head(L)).cwiseAbs().maxCoeff();
    const double angle = oracle::principal_angle(evecs.leftCols(10), basis.phis.leftCols(10));
    const double asym = (p - p.transpose()).cwiseAbs().maxCoeff();
    return Outcome{lambda_err < 1e-8 && angle < 1e-6,
                   "max|dlambda|=" + fmt(lambda_err) + " principal angle=" + fmt(angle) + " |p-p^T|=" + fmt(asym)};
  });

  // Shared synthetic data: training window plus the continuation used as
  // the rollout reference.
  const Index train_samples = kGrid + kDelays + 1;
  const auto full = generate(SynthSpec::two_torus(train_samples + kRollout, 0));
  TimeSeries training = full.series;
  training.values = full.series.values.topRows(train_samples);

  std::optional<Analysis> analysis;
  double analyze_seconds = 0.0;

  // 3. Frequency identification.
  report(3, "frequency identification (two-torus, bins 55/89)", 120.0, [&] {
    const auto start = Clock::now();
    analysis = analyze(training, operating_point());
    analyze_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    const auto& freqs = analysis->model.harmonic.freqs;
    if (freqs.grid_size != kGrid) return Outcome{false, "training grid is " + std::to_string(freqs.grid_size)};
    std::set<Index> selected(freqs.bins.begin(), freqs.bins.end());
    const bool has_generators = selected.count(kGen1) && selected.count(kGen2);
    Index combos = 0, off_lattice = 0;
    std::string listing;
    for (Index b : freqs.bins) {
      listing += (listing.empty() ? "" : ",") + std::to_string(b);
      if (b == 0) continue;
      const Index dist = oracle::lattice_distance(b, kGen1, kGen2, kLatticeBound, kGrid);
      if (dist > 1) ++off_lattice;
      else if (b != kGen1 && b != kGen2) ++combos;
    }
    // Raw-series cross-check: the strongest DFT peak of each channel must be a
    // generator, and both generators must be selected.
    std::set<Index> oracle_tops;
    for (Index c = 0; c < training.channels(); ++c) {
      const Vector x = full.series.values.col(c).segment(kDelays + 1, kGrid);
      const ComplexVector f = oracle::naive_dft(x.array() - x.mean());
      Index top = 1;
      for (Index j = 1; j <= kGrid / 2; ++j)
        if (std::abs(f(j)) > std::abs(f(top))) top = j;
      oracle_tops.insert(top);
    }
    const bool oracle_ok = oracle_tops == std::set<Index>{kGen1, kGen2};
    const bool ok = has_generators && combos >= 2 && off_lattice == 0 && oracle_ok;
    std::string tops;
    for (Index t : oracle_tops) tops += (tops.empty() ? "" : ",") + std::to_string(t);
    return Outcome{ok, "selected {" + listing + "}, combination bins=" + std::to_string(combos) +
                           ", off-lattice=" + std::to_string(off_lattice) + ", raw DFT peaks {" + tops + "}"};
  });

  if (!analysis) {
    std::printf("analysis failed; remaining criteria skipped\n");
    return 1;
  }
  const auto& model = analysis->model;
  const auto [init_state, t0] = training_initial_state(model, model.train.size() - 1);
  const Index first_ref = model.train.newest_index(model.train.size() - 1) + 1;
  std::optional<ReconstructionRun> rollout;

  // 4. Reconstruction error against the true continuation.
  report(4, "end-to-end reconstruction (ANMA T=500, 2000 steps)", 0.0, [&] {
    rollout = reconstruct(model, init_state, t0, kRollout);
    const RowMatrix reference = full.series.values.middleRows(first_ref, kRollout);
    const Matrix err = anma_error(reference, rollout->trajectory, kWindow, ErrorMode::Absolute);
    const double worst = err.maxCoeff();
    const Index half = err.rows() / 2;
    const double first_half = err.topRows(half).maxCoeff();
    const double second_half = err.bottomRows(err.rows() - half).maxCoeff();
    const bool ok = worst < 0.05 && second_half < 2.0 * first_half && rollout->support_fallbacks == 0;
    return Outcome{ok, "max ANMA=" + fmt(worst) + " first-half max=" + fmt(first_half) +
                           " second-half max=" + fmt(second_half) + " out-of-support steps=" +
                           std::to_string(rollout->support_fallbacks)};
  });

  // 5. Nystrom consistency at training states and convex-hull boundedness.
  report(5, "Nystrom training consistency and convex hull", 0.0, [&] {
    const Matrix phi_e = model.basis.phis * model.chaotic.E;
    const RowVector scale = phi_e.cwiseAbs().colwise().maxCoeff();
    double worst = 0.0;
    for (Index n = 0; n < model.train.size(); ++n) {
      const RowVector g = eval_gchaos0(model.evaluator, model.train, model.epsilon(), model.train.states.row(n));
      worst = std::max(worst, ((g - phi_e.row(n)).cwiseAbs().array() / scale.array()).maxCoeff());
    }
    std::vector<Eigen::Vector2d> rows;
    for (Index n = 0; n < model.evaluator.products.rows(); ++n)
      rows.emplace_back(model.evaluator.products(n, 0), model.evaluator.products(n, 1));
    const auto hull = oracle::convex_hull(rows);
    const double slack = 1e-9 * model.evaluator.products.cwiseAbs().maxCoeff();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, std::sqrt(model.epsilon()));
    std::uniform_int_distribution<Index> pick(0, model.train.size() - 1);
    Index probes = 0, violations = 0, out_of_support = 0;
    while (probes < 10000) {
      RowVector y = model.train.states.row(pick(rng));
      for (Index c = 0; c < y.size(); ++c) y(c) += noise(rng);
      try {
        const RowVector g = eval_gchaos0(model.evaluator, model.train, model.epsilon(), y);
        if (!oracle::inside_hull(hull, Eigen::Vector2d(g(0), g(1)), slack)) ++violations;
        ++probes;
      } catch (const OutOfSupportError&) {
        ++out_of_support;
      }
      if (out_of_support > 10000) break;
    }
    const bool ok = worst < 1e-3 && probes == 10000 && violations == 0;
    return Outcome{ok, "max relative deviation=" + fmt(worst) + ", hull violations=" + std::to_string(violations) +
                           "/" + std::to_string(probes) + " probes (" + std::to_string(out_of_support) +
                           " out of support skipped)"};
  });

  // 6. Monotone filtering over a 4 x 5 threshold grid.
  report(6, "monotone filtering (20-point threshold grid)", 0.0, [&] {
    const std::vector<double> e1s{0.01, 1.0, 100.0, 300.0};
    const std::vector<double> e2s{1.5, 2.0, 2.5, 3.0, 3.5};
    std::vector<std::vector<std::set<Index>>> sets(e1s.size(), std::vector<std::set<Index>>(e2s.size()));
    for (std::size_t a = 0; a < e1s.size(); ++a)
      for (std::size_t b = 0; b < e2s.size(); ++b) {
        SelectionParams p = operating_point().selection;
        p.eps1 = e1s[a];
        p.eps2 = e2s[b];
        const auto bins = surviving_bins(analysis->scores, p);
        sets[a][b] = std::set<Index>(bins.begin(), bins.end());
      }
    Index violations = 0, comparisons = 0;
    const auto subset = [](const std::set<Index>& small, const std::set<Index>& big) {
      return std::includes(big.begin(), big.end(), small.begin(), small.end());
    };
    for (std::size_t a = 0; a < e1s.size(); ++a)
      for (std::size_t b = 0; b < e2s.size(); ++b) {
        if (a + 1 < e1s.size()) {   // raising eps1
          ++comparisons;
          if (!subset(sets[a + 1][b], sets[a][b])) ++violations;
        }
        if (b + 1 < e2s.size()) {   // lowering eps2
          ++comparisons;
          if (!subset(sets[a][b], sets[a][b + 1])) ++violations;
        }
      }
    std::string sizes;
    for (std::size_t a = 0; a < e1s.size(); ++a)
      for (std::size_t b = 0; b < e2s.size(); ++b) sizes += (sizes.empty() ? "" : ",") + std::to_string(sets[a][b].size());
    return Outcome{violations == 0,
                   std::to_string(violations) + " violations in " + std::to_string(comparisons) +
                       " neighbour comparisons; survivor counts " + sizes};
  });

  // 7. Persistence and repeatability.
  report(7, "determinism and persistence", 0.0, [&] {
    if (!rollout) return Outcome{false, "no in-memory rollout"};
    const auto dir = std::filesystem::temp_directory_path() / "qpdrive_acceptance";
    std::filesystem::create_directories(dir);
    bool same_binary = false, same_portable = false;
    for (bool portable : {false, true}) {
      const auto path = dir / (portable ? "model_portable.json" : "model.json");
      save_model(path, model, {portable});
      const auto loaded = load_model(path);
      const auto [s, t] = training_initial_state(loaded, loaded.train.size() - 1);
      const auto run = reconstruct(loaded, s, t, kRollout);
      (portable ? same_portable : same_binary) = bitwise_equal(run.trajectory, rollout->trajectory);
    }
    const auto again = analyze(training, operating_point());
    const auto [s2, t2] = training_initial_state(again.model, again.model.train.size() - 1);
    const auto run2 = reconstruct(again.model, s2, t2, kRollout);
    const bool same_rerun = bitwise_equal(run2.trajectory, rollout->trajectory) &&
                            again.model.harmonic.freqs.bins == model.harmonic.freqs.bins;
    std::filesystem::remove_all(dir);
    return Outcome{same_binary && same_portable && same_rerun,
                   std::string("binary round-trip ") + (same_binary ? "identical" : "differs") + ", portable round-trip " +
                       (same_portable ? "identical" : "differs") + ", repeated analyze " +
                       (same_rerun ? "identical" : "differs")};
  });

  std::printf("analyze on N'=%lld took %.2f s\n", static_cast<long long>(model.train.size()), analyze_seconds);
  std::printf("%s: %d criteria failed\n", failures == 0 ? "OK" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
