#include "qpdrive/pipeline.hpp"

#include <utility>

namespace qpdrive {

namespace {

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(name, e.what());
  }
}

struct Prepared {
  EmbeddedSeries train;
  Matrix targets;
  ChannelStats stats;
  double epsilon = 0.0;
};

Prepared prepare(const TimeSeries& series, const AnalyzeOptions& options) {
  return stage("ingest", [&] {
    series.validate();
    Prepared p;
    TimeSeries work = series;
    if (options.standardize) {
      std::tie(work, p.stats) = standardize(series, options.scale_mode);
    } else {
      p.stats = ChannelStats::identity(series.channels());
    }
    const Index n = work.samples();
    if (options.delays < 0 || options.delays + 2 > n)
      throw InputError("need at least Q + 2 samples (N = " + std::to_string(n) +
                       ", Q = " + std::to_string(options.delays) + ")");
    TimeSeries head = work;
    head.values = work.values.topRows(n - 1);
    p.train = delay_embed(head, options.delays);
    p.targets = work.values.bottomRows(n - 1 - options.delays);
    p.epsilon = options.epsilon > 0.0 ? options.epsilon : default_epsilon(series.channels());
    return p;
  });
}

} // namespace

double default_epsilon(Index channels) { return 0.01 * static_cast<double>(channels); }

Vector target_times(const EmbeddedSeries& train) {
  Vector t(train.size());
  for (Index n = 0; n < train.size(); ++n)
    t(n) = static_cast<double>(train.newest_index(n) + 1) * train.dt;
  return t;
}

namespace {

SpectralAnalysis spectral_from(Prepared& p, const AnalyzeOptions& options) {
  SpectralAnalysis out;
  out.basis = stage("kernel", [&] {
    auto km = gaussian_kernel_matrix(p.train, p.epsilon, options.prune_threshold, options.storage);
    auto nk = bistochastic_normalize(km);
    EigenbasisOptions eopt;
    eopt.method = options.svd_method;
    auto basis = kernel_eigenbasis(nk, options.num_eigs, eopt);
    basis.epsilon = p.epsilon;
    basis.delays = options.delays;
    return basis;
  });
  out.scores = stage("spectral", [&] { return frequency_scores(out.basis); });
  out.train = std::move(p.train);
  out.channel_stats = std::move(p.stats);
  return out;
}

} // namespace

SpectralAnalysis spectral_analysis(const TimeSeries& series, const AnalyzeOptions& options) {
  auto p = prepare(series, options);
  return spectral_from(p, options);
}

DecompositionModel fit_model(const SpectralAnalysis& spectral, const Matrix& targets,
                             const FrequencySet& freqs, const AnalyzeOptions& options) {
  DecompositionModel model;
  const Vector times = target_times(spectral.train);
  const ComplexMatrix F = build_fourier_matrix(freqs, times);
  model.harmonic = stage("harmonic", [&] { return fit_periodic(targets, F, freqs); });
  model.chaotic = stage("harmonic", [&] {
    return chaotic_coefficients(targets, model.harmonic, spectral.basis, F);
  });
  model.evaluator = stage("oos", [&] {
    return build_evaluator(spectral.basis, model.chaotic, options.evaluator_mode);
  });
  model.train = spectral.train;
  model.targets = targets;
  model.basis = spectral.basis;
  model.channel_stats = spectral.channel_stats;
  model.standardized = options.standardize;
  model.prune_threshold = options.prune_threshold;
  model.storage = options.storage;
  model.svd_method = options.svd_method;
  model.seed = options.seed;
  return model;
}

Analysis analyze(const TimeSeries& series, const AnalyzeOptions& options) {
  auto p = prepare(series, options);
  Matrix targets = std::move(p.targets);
  auto spectral = spectral_from(p, options);
  auto freqs = stage("spectral", [&] {
    return select_frequencies(spectral.scores, options.selection, series.dt);
  });
  Analysis out;
  out.warnings = spectral.basis.warnings;
  out.model = fit_model(spectral, targets, freqs, options);
  out.scores = std::move(spectral.scores);
  return out;
}

} // namespace qpdrive
