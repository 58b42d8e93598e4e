#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qpdrive/kernel.hpp"
#include "qpdrive/synth.hpp"

using namespace qpdrive;

namespace {

EmbeddedSeries embedded_torus(Index states, Index delays, std::uint64_t seed = 0) {
  const auto gen = generate(SynthSpec::two_torus(states + delays, seed));
  return delay_embed(standardize(gen.series).first, delays);
}

EmbeddedSeries from_rows(const RowMatrix& rows) {
  EmbeddedSeries e;
  e.states = rows;
  e.channels = rows.cols();
  return e;
}

// Undo the per-column sign freedom of singular vectors.
Matrix align_signs(const Matrix& ref, Matrix other) {
  for (Index l = 0; l < ref.cols(); ++l)
    if (ref.col(l).dot(other.col(l)) < 0.0) other.col(l) *= -1.0;
  return other;
}

} // namespace

TEST(GaussianKernel, EntryAtSquaredDistanceEpsilonIsInverseE) {
  RowMatrix rows(2, 2);
  rows << 0.0, 0.0, 0.3, 0.4;   // squared distance 0.25
  const auto km = gaussian_kernel_matrix(from_rows(rows), 0.25);
  const Matrix k = to_dense(km.entries);
  EXPECT_NEAR(k(0, 1), std::exp(-1.0), 1e-15);
  EXPECT_EQ(k(0, 0), 1.0);
  EXPECT_EQ(k(0, 1), k(1, 0));
}

TEST(GaussianKernel, MatchesLoopOracle) {
  const auto emb = embedded_torus(60, 2);
  const Matrix k = to_dense(gaussian_kernel_matrix(emb, 0.7).entries);
  EXPECT_LT((k - oracle::naive_kernel(emb.states, 0.7)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(GaussianKernel, PruningDropsExactlyTheSmallEntries) {
  const auto emb = embedded_torus(80, 1);
  const double tau = 0.05;
  const auto sparse = gaussian_kernel_matrix(emb, 0.5, tau, StorageKind::Sparse);
  const Matrix full = oracle::naive_kernel(emb.states, 0.5);
  const Matrix kept = to_dense(sparse.entries);
  for (Index i = 0; i < full.rows(); ++i)
    for (Index j = 0; j < full.cols(); ++j) {
      if (full(i, j) >= tau)
        EXPECT_NEAR(kept(i, j), full(i, j), 1e-14);
      else
        EXPECT_EQ(kept(i, j), 0.0);
    }
  const auto& sm = std::get<SparseMatrix>(sparse.entries);
  for (int o = 0; o < sm.outerSize(); ++o)
    for (SparseMatrix::InnerIterator it(sm, o); it; ++it) EXPECT_GE(it.value(), tau);
}

TEST(Bistochastic, TwoByTwoHandOracle) {
  // K = [[1, a], [a, 1]] gives d = (1 + a)/2, q = 1, ktilde = K / d.
  const double a = std::exp(-1.0);
  RowMatrix rows(2, 1);
  rows << 0.0, 1.0;
  const auto nk = bistochastic_normalize(gaussian_kernel_matrix(from_rows(rows), 1.0));
  EXPECT_NEAR(nk.d(0), (1.0 + a) / 2.0, 1e-15);
  EXPECT_NEAR(nk.q(0), 1.0, 1e-15);
  EXPECT_NEAR(nk.q(1), 1.0, 1e-15);
  const Matrix kt = to_dense(nk.ktilde);
  EXPECT_NEAR(kt(0, 1), a / ((1.0 + a) / 2.0), 1e-15);
}

TEST(Bistochastic, DegreeIdentitiesHold) {
  const auto nk = bistochastic_normalize(gaussian_kernel_matrix(embedded_torus(150, 3), 1.0));
  const double n = static_cast<double>(nk.d.size());
  const Matrix kt = to_dense(nk.ktilde);
  EXPECT_NEAR(nk.q.mean(), 1.0, 1e-12);
  // (1/N') ktilde sqrt(q) = 1 and (1/N') ktilde^T 1 = sqrt(q).
  EXPECT_LT(((kt * nk.q.cwiseSqrt()) / n - Vector::Ones(nk.d.size())).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(((kt.transpose() * Vector::Ones(nk.d.size())) / n - nk.q.cwiseSqrt()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bistochastic, ZeroMassRowIsReported) {
  KernelMatrix km;
  Matrix k = Matrix::Identity(3, 3);
  k(1, 1) = 0.0;
  km.entries = k;
  km.epsilon = 1.0;
  EXPECT_THROW(bistochastic_normalize(km), NumericalError);
}

TEST(Eigenbasis, LeadingTripletIsConstantAndSqrtQ) {
  const auto nk = bistochastic_normalize(gaussian_kernel_matrix(embedded_torus(300, 2), 1.0));
  const auto basis = kernel_eigenbasis(nk, 30);
  EXPECT_NEAR(basis.lambdas(0), 1.0, 1e-12);
  EXPECT_LT((basis.phis.col(0).array() - 1.0).abs().maxCoeff(), 1e-10);
  EXPECT_LT((basis.gammas.col(0) - nk.q.cwiseSqrt()).cwiseAbs().maxCoeff(), 1e-10);
  for (Index l = 1; l < basis.rank(); ++l) EXPECT_LE(basis.lambdas(l), basis.lambdas(l - 1));
}

TEST(Eigenbasis, DenseAndLanczosAgree) {
  const auto nk = bistochastic_normalize(gaussian_kernel_matrix(embedded_torus(400, 2), 1.0));
  EigenbasisOptions dense_opts, lanczos_opts;
  dense_opts.method = SvdMethod::Dense;
  lanczos_opts.method = SvdMethod::Lanczos;
  const Index L = 15;
  const auto dense = kernel_eigenbasis(nk, L, dense_opts);
  const auto lanczos = kernel_eigenbasis(nk, L, lanczos_opts);
  EXPECT_LT((dense.lambdas - lanczos.lambdas).cwiseAbs().maxCoeff(), 1e-10);
  // Compare spans rather than vectors: near-degenerate pairs may rotate.
  EXPECT_LT(oracle::principal_angle(dense.phis.leftCols(8), lanczos.phis.leftCols(8)), 1e-5);
}

TEST(Eigenbasis, SparseAndDenseStorageAgreeWithoutPruning) {
  const auto emb = embedded_torus(200, 2);
  const auto dense = kernel_eigenbasis(bistochastic_normalize(gaussian_kernel_matrix(emb, 1.0)), 10);
  const auto sparse = kernel_eigenbasis(
      bistochastic_normalize(gaussian_kernel_matrix(emb, 1.0, 0.0, StorageKind::Sparse)), 10);
  EXPECT_LT((dense.lambdas - sparse.lambdas).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Eigenbasis, PermutingStatesPermutesEigenvectors) {
  const auto emb = embedded_torus(120, 1);
  std::vector<Index> perm(static_cast<std::size_t>(emb.size()));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(5));
  EmbeddedSeries shuffled = emb;
  for (Index i = 0; i < emb.size(); ++i) shuffled.states.row(i) = emb.states.row(perm[static_cast<std::size_t>(i)]);
  EigenbasisOptions opts;
  opts.method = SvdMethod::Dense;
  const auto a = kernel_eigenbasis(bistochastic_normalize(gaussian_kernel_matrix(emb, 1.0)), 6, opts);
  const auto b = kernel_eigenbasis(bistochastic_normalize(gaussian_kernel_matrix(shuffled, 1.0)), 6, opts);
  EXPECT_LT((a.lambdas - b.lambdas).cwiseAbs().maxCoeff(), 1e-12);
  Matrix unshuffled(b.phis.rows(), b.phis.cols());
  for (Index i = 0; i < emb.size(); ++i) unshuffled.row(perm[static_cast<std::size_t>(i)]) = b.phis.row(i);
  const Matrix aligned = align_signs(a.phis.leftCols(3), unshuffled.leftCols(3));
  EXPECT_LT((aligned - a.phis.leftCols(3)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Eigenbasis, MaterializedOperatorIsSymmetric) {
  const auto nk = bistochastic_normalize(gaussian_kernel_matrix(embedded_torus(100, 2), 1.0));
  const Matrix kt = to_dense(nk.ktilde);
  const Matrix p = kt * kt.transpose() / static_cast<double>(kt.rows());
  EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Eigenbasis, RequestBeyondSizeTruncatesWithWarning) {
  const auto nk = bistochastic_normalize(gaussian_kernel_matrix(embedded_torus(20, 1), 1.0));
  const auto basis = kernel_eigenbasis(nk, 50);
  EXPECT_LE(basis.rank(), 20);
  EXPECT_FALSE(basis.warnings.empty());
}

TEST(Eigenbasis, SignConventionIsDeterministic) {
  const auto nk = bistochastic_normalize(gaussian_kernel_matrix(embedded_torus(100, 2), 1.0));
  const auto basis = kernel_eigenbasis(nk, 8);
  for (Index l = 0; l < basis.rank(); ++l) {
    Index first = 0;
    while (std::abs(basis.phis(first, l)) <= 1e-12) ++first;
    EXPECT_GT(basis.phis(first, l), 0.0);
  }
}
