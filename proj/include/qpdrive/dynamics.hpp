#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpdrive/harmonic.hpp"
#include "qpdrive/kernel.hpp"
#include "qpdrive/nystrom.hpp"
#include "qpdrive/spectral.hpp"
#include "qpdrive/timeseries.hpp"

namespace qpdrive {

/// Everything needed to iterate the learned model
///   y_{n+1} = g_per(t_{n+1}) + g_chaos^(0)(y_n, ..., y_{n-Q}),
/// with all quantities in standardized units.
struct DecompositionModel {
  HarmonicModel harmonic;
  ChaoticCoefficients chaotic;
  EvaluatorTable evaluator;
  EmbeddedSeries train;        // training states; target of row n is sample newest_index(n) + 1
  Matrix targets;              // N' x k, standardized
  KernelBasis basis;
  ChannelStats channel_stats;
  bool standardized = true;
  double prune_threshold = 0.0;
  StorageKind storage = StorageKind::Dense;
  SvdMethod svd_method = SvdMethod::Auto;
  std::uint64_t seed = 0;

  double epsilon() const { return basis.epsilon; }
  Index delays() const { return train.delays; }
  Index channels() const { return train.channels; }
  double dt() const { return train.dt; }
  const SelectionParams& thresholds() const { return harmonic.freqs.params; }

  /// Throws InputError if the stored shapes disagree.
  void check_consistency() const;
};

enum class SupportPolicy { FreezeChaotic, Abort };

std::string to_string(SupportPolicy policy);
SupportPolicy support_policy_from_string(const std::string& name);

struct ReconstructOptions {
  SupportPolicy policy = SupportPolicy::FreezeChaotic;
  bool keep_states = false;
  double support_floor = kDefaultSupportFloor;
};

struct ReconstructionRun {
  RowMatrix trajectory;                 // n_steps x k, original units
  std::optional<RowMatrix> state_log;   // n_steps x k(Q+1), standardized, state after each step
  Index support_fallbacks = 0;
};

/// Iterates the model from `initial_state` (standardized units). `t0` is the
/// time of the newest sample in the initial state; step n emits the sample
/// at t0 + (n+1) dt.
ReconstructionRun reconstruct(const DecompositionModel& model, const Eigen::Ref<const RowVector>& initial_state,
                              double t0, Index n_steps, const ReconstructOptions& options = {});

/// Initial condition taken from training state `index`, with its time stamp.
std::pair<RowVector, double> training_initial_state(const DecompositionModel& model, Index index);

/// Converts a delay state given in original units to standardized units.
RowVector standardize_state(const DecompositionModel& model, const Eigen::Ref<const RowVector>& state);

/// One application of the learned map (standardized units); throws on out-of-support.
RowVector predict_next(const DecompositionModel& model, const Eigen::Ref<const RowVector>& state, double t_next);

enum class ErrorMode { Absolute, Signed };

std::string to_string(ErrorMode mode);
ErrorMode error_mode_from_string(const std::string& name);

/// Amplitude-normalized moving-average error
///   e(n, c) = 1/(|y_c|_sup T) sum_{t<T} f(yhat(n+t, c) - y(n+t, c)),
/// f = |.| (Absolute) or identity (Signed). Result is (N - T + 1) x k.
Matrix anma_error(const Eigen::Ref<const RowMatrix>& reference,
                  const Eigen::Ref<const RowMatrix>& reconstruction, Index window,
                  ErrorMode mode = ErrorMode::Absolute);

} // namespace qpdrive
