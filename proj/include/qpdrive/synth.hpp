#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qpdrive/timeseries.hpp"
#include "qpdrive/types.hpp"

namespace qpdrive {

/// One Fourier term c * exp(i wave . theta) of the driving function, per channel.
struct LatticeTerm {
  std::vector<int> wave;   // length d
  ComplexVector coeffs;    // length k
};

enum class ChaosFamily { None, Linear, Tanh };

std::string to_string(ChaosFamily family);
ChaosFamily chaos_family_from_string(const std::string& name);

/// Componentwise contraction x -> a tanh(b x) (Tanh) or x -> a x (Linear).
/// Its Jacobian does not depend on theta, so the driven map has the
/// constant-sensitivity (additive) form for every family.
struct ChaosSpec {
  ChaosFamily family = ChaosFamily::None;
  double a = 0.0;
  double b = 1.0;

  double lipschitz() const;
  double apply(double x) const;
};

/// Skew-product generator
///   theta_n = theta_0 + n rho (mod 2 pi),
///   x_n     = g_per(theta_n) + g_chaos(x_{n-1}),
/// observed as y_n = x_n + noise. The first `burn_in` iterates are discarded.
struct SynthSpec {
  Vector rho;                       // radians per step, each in (0, 2 pi)
  std::vector<LatticeTerm> gper_terms;
  ChaosSpec chaos;
  double noise_sd = 0.0;
  Index samples = 1024;             // N
  double dt = 1.0;
  Index channels = 1;               // k
  std::uint64_t seed = 0;
  Vector theta0;                    // empty: zeros
  Index burn_in = 0;

  Index torus_dimension() const { return rho.size(); }

  /// Throws InputError on inconsistent shapes, rho outside (0, 2 pi) or a
  /// non-contracting chaos map.
  void validate() const;

  /// Two-channel system on the 2-torus with on-grid generators
  /// rho = 2 pi (55, 89) / 4096 and chaos 0.5 tanh(x).
  static SynthSpec two_torus(Index samples, std::uint64_t seed = 0);

  /// Pure rotation: single channel, g_per = cos(theta), no chaos.
  static SynthSpec rotation(Index period, Index samples);
};

RowVector eval_synth_gper(const SynthSpec& spec, const Eigen::Ref<const Vector>& theta);

struct GroundTruth {
  Vector frequencies;          // rho / dt
  RowMatrix theta;             // N x d, wrapped to [0, 2 pi)
  RowMatrix gper;              // N x k, g_per(theta_n)
  RowMatrix chaos;             // N x k, g_chaos(x_{n-1})
  RowMatrix clean;             // N x k, noiseless x_n
  std::uint64_t seed = 0;
};

struct SynthOutput {
  TimeSeries series;
  GroundTruth truth;
};

SynthOutput generate(const SynthSpec& spec);

/// On-grid rotation increments 2 pi bins / grid.
Vector on_grid_rho(const std::vector<Index>& bins, Index grid);

} // namespace qpdrive
