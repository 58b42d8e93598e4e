#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qpdrive/dynamics.hpp"

namespace qpdrive {

/// Failure inside one pipeline stage; the message is prefixed with the stage name.
class PipelineError : public std::runtime_error {
public:
  PipelineError(std::string stage, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

private:
  std::string stage_;
};

struct AnalyzeOptions {
  Index delays = 0;
  double epsilon = 0.0;          // <= 0 selects 0.01 k
  double prune_threshold = 0.0;
  StorageKind storage = StorageKind::Dense;
  Index num_eigs = 100;
  SelectionParams selection;
  bool standardize = true;
  ScaleMode scale_mode = ScaleMode::StdDev;
  EvaluatorMode evaluator_mode = EvaluatorMode::Consistent;
  SvdMethod svd_method = SvdMethod::Auto;
  std::uint64_t seed = 0;
};

struct Analysis {
  DecompositionModel model;
  ScoreMatrix scores;
  std::vector<std::string> warnings;
};

/// Default bandwidth 0.01 k for standardized data.
double default_epsilon(Index channels);

/// Runs ingest -> kernel -> spectral -> harmonic -> evaluator on a raw series.
/// Training pairs are (state ending at sample s, sample s + 1), so the last
/// sample only appears as a target and N' = N - Q - 1.
Analysis analyze(const TimeSeries& series, const AnalyzeOptions& options);

/// Frequency scores only (ingest -> kernel -> spectral), for threshold studies.
struct SpectralAnalysis {
  KernelBasis basis;
  ScoreMatrix scores;
  EmbeddedSeries train;
  ChannelStats channel_stats;
};
SpectralAnalysis spectral_analysis(const TimeSeries& series, const AnalyzeOptions& options);

/// Fits the harmonic and chaotic parts and the evaluator for a given basis
/// and frequency set (the back half of `analyze`).
DecompositionModel fit_model(const SpectralAnalysis& spectral, const Matrix& targets,
                             const FrequencySet& freqs, const AnalyzeOptions& options);

/// Training times t_n of the target samples.
Vector target_times(const EmbeddedSeries& train);

} // namespace qpdrive
