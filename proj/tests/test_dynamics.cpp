#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "qpdrive/dynamics.hpp"

using namespace qpdrive;

namespace {

const DecompositionModel& model() { return fixture::small_analysis().model; }

DecompositionModel without_chaos(DecompositionModel m) {
  m.chaotic.E.setZero();
  m.evaluator = build_evaluator(m.basis, m.chaotic, m.evaluator.mode);
  return m;
}

} // namespace

TEST(Model, ShapesAreConsistent) {
  const auto& m = model();
  EXPECT_NO_THROW(m.check_consistency());
  EXPECT_EQ(m.harmonic.A.rows(), m.harmonic.freqs.size());
  EXPECT_EQ(m.harmonic.A.cols(), m.channels());
  EXPECT_EQ(m.chaotic.E.rows(), m.basis.rank());
  EXPECT_EQ(m.basis.phis.rows(), m.train.size());
  EXPECT_EQ(m.train.dimension(), m.channels() * (m.delays() + 1));
}

TEST(Rollout, WithoutChaosFollowsPeriodicPart) {
  const auto m = without_chaos(model());
  const auto [s, t0] = training_initial_state(m, 10);
  const auto run = reconstruct(m, s, t0, 50);
  for (Index n = 0; n < 50; ++n) {
    const RowVector expected = m.channel_stats.invert(eval_gper(m.harmonic, t0 + static_cast<double>(n + 1) * m.dt()));
    EXPECT_EQ(RowVector(run.trajectory.row(n)), expected);
  }
}

TEST(Rollout, StateLogIsAShiftRegister) {
  const auto& m = model();
  const auto [s, t0] = training_initial_state(m, 0);
  ReconstructOptions opts;
  opts.keep_states = true;
  const auto run = reconstruct(m, s, t0, 40, opts);
  ASSERT_TRUE(run.state_log.has_value());
  const Index k = m.channels();
  const auto& log = *run.state_log;
  for (Index n = 0; n + 1 < 40; ++n)
    for (Index q = 1; q <= m.delays(); ++q)
      EXPECT_EQ(RowVector(log.row(n + 1).segment(q * k, k)), RowVector(log.row(n).segment((q - 1) * k, k)));
  EXPECT_TRUE(run.trajectory.allFinite());
}

TEST(Rollout, ZeroStepsGivesEmptyTrajectory) {
  const auto& m = model();
  const auto [s, t0] = training_initial_state(m, 0);
  EXPECT_EQ(reconstruct(m, s, t0, 0).trajectory.rows(), 0);
}

TEST(Rollout, FirstStepMatchesOneStepPrediction) {
  const auto& m = model();
  const auto [s, t0] = training_initial_state(m, 5);
  const auto run = reconstruct(m, s, t0, 1);
  const RowVector p = predict_next(m, s, t0 + m.dt());
  EXPECT_EQ(RowVector(run.trajectory.row(0)), m.channel_stats.invert(p));
}

TEST(Rollout, StaysBoundedOverTenThousandSteps) {
  const auto& m = model();
  const auto [s, t0] = training_initial_state(m, m.train.size() - 1);
  const auto run = reconstruct(m, s, t0, 10000);
  ASSERT_TRUE(run.trajectory.allFinite());
  // |y| <= sup|g_per| + max|Gamma~ E| in standardized units; sample g_per densely.
  double gper_sup = 0.0;
  for (Index n = 0; n < 20000; ++n)
    gper_sup = std::max(gper_sup, eval_gper(m.harmonic, static_cast<double>(n) * 0.5).cwiseAbs().maxCoeff());
  const double bound = gper_sup + m.evaluator.products.cwiseAbs().maxCoeff();
  for (Index n = 0; n < run.trajectory.rows(); ++n) {
    const RowVector std_row = m.channel_stats.apply(run.trajectory.row(n));
    EXPECT_LE(std_row.cwiseAbs().maxCoeff(), bound * (1.0 + 1e-9));
  }
}

TEST(Rollout, IsDeterministic) {
  const auto& m = model();
  const auto [s, t0] = training_initial_state(m, 3);
  const auto a = reconstruct(m, s, t0, 300);
  const auto b = reconstruct(m, s, t0, 300);
  EXPECT_EQ(a.trajectory, b.trajectory);
}

TEST(Rollout, OutOfSupportPolicies) {
  const auto& m = model();
  const RowVector far = RowVector::Constant(m.train.dimension(), 1e3);
  ReconstructOptions abort_opts;
  abort_opts.policy = SupportPolicy::Abort;
  EXPECT_THROW(reconstruct(m, far, 0.0, 5, abort_opts), OutOfSupportError);
  const auto run = reconstruct(m, far, 0.0, 5);
  EXPECT_GE(run.support_fallbacks, 1);
  EXPECT_TRUE(run.trajectory.allFinite());
}

TEST(Rollout, WrongStateDimensionIsRejected) {
  EXPECT_THROW(reconstruct(model(), RowVector::Zero(3), 0.0, 1), InputError);
}

TEST(Anma, IdenticalSeriesGiveZero) {
  RowMatrix y = RowMatrix::Random(30, 2);
  EXPECT_EQ(anma_error(y, y, 5).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Anma, ConstantOffsetGivesRelativeOffsetInBothModes) {
  RowMatrix y(6, 1);
  y << 1, -4, 2, 0.5, 3, -1;
  const RowMatrix shifted = y.array() + 0.2;
  const Matrix abs_err = anma_error(y, shifted, 3, ErrorMode::Absolute);
  const Matrix signed_err = anma_error(y, shifted, 3, ErrorMode::Signed);
  ASSERT_EQ(abs_err.rows(), 4);
  for (Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(abs_err(i, 0), 0.2 / 4.0, 1e-15);
    EXPECT_NEAR(signed_err(i, 0), 0.2 / 4.0, 1e-15);
  }
  const RowMatrix below = y.array() - 0.2;
  EXPECT_NEAR(anma_error(y, below, 3, ErrorMode::Signed)(0, 0), -0.05, 1e-15);
}

TEST(Anma, RejectsBadShapesAndWindows) {
  RowMatrix y = RowMatrix::Random(10, 2);
  EXPECT_THROW(anma_error(y, RowMatrix::Random(9, 2), 3), InputError);
  EXPECT_THROW(anma_error(y, y, 0), InputError);
  EXPECT_THROW(anma_error(y, y, 11), InputError);
  RowMatrix flat = RowMatrix::Zero(10, 1);
  EXPECT_THROW(anma_error(flat, flat, 2), InputError);
}

TEST(InitialState, TimeStampIsNewestSample) {
  const auto& m = model();
  const auto [s, t0] = training_initial_state(m, 7);
  EXPECT_EQ(t0, static_cast<double>(m.train.newest_index(7)) * m.dt());
  EXPECT_THROW(training_initial_state(m, m.train.size()), InputError);
}
