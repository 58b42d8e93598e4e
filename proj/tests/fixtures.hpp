#pragma once

// Small fitted models shared by several test files.

#include "qpdrive/pipeline.hpp"
#include "qpdrive/synth.hpp"

namespace qpdrive::fixture {

inline AnalyzeOptions small_options() {
  AnalyzeOptions o;
  o.delays = 3;
  o.epsilon = 1.0;
  o.num_eigs = 40;
  o.selection.L0 = 10;
  o.selection.eps1 = 0.1;
  o.selection.eps2 = 2.5;
  o.seed = 1;
  return o;
}

/// Two-torus series with `states` training pairs (N = states + Q + 1).
inline TimeSeries torus_series(Index states, Index delays = 3, std::uint64_t seed = 0) {
  return generate(SynthSpec::two_torus(states + delays + 1, seed)).series;
}

inline const Analysis& small_analysis() {
  static const Analysis a = analyze(torus_series(400), small_options());
  return a;
}

} // namespace qpdrive::fixture
