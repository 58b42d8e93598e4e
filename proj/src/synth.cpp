#include "qpdrive/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace qpdrive {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::string to_string(ChaosFamily family) {
  switch (family) {
    case ChaosFamily::None: return "none";
    case ChaosFamily::Linear: return "linear";
    case ChaosFamily::Tanh: return "tanh";
  }
  return "none";
}

ChaosFamily chaos_family_from_string(const std::string& name) {
  if (name == "none") return ChaosFamily::None;
  if (name == "linear") return ChaosFamily::Linear;
  if (name == "tanh") return ChaosFamily::Tanh;
  throw InputError("unknown chaos family '" + name + "' (expected none, linear or tanh)");
}

double ChaosSpec::lipschitz() const {
  switch (family) {
    case ChaosFamily::None: return 0.0;
    case ChaosFamily::Linear: return std::abs(a);
    case ChaosFamily::Tanh: return std::abs(a * b);
  }
  return 0.0;
}

double ChaosSpec::apply(double x) const {
  switch (family) {
    case ChaosFamily::None: return 0.0;
    case ChaosFamily::Linear: return a * x;
    case ChaosFamily::Tanh: return a * std::tanh(b * x);
  }
  return 0.0;
}

void SynthSpec::validate() const {
  const Index d = rho.size();
  if (d < 1) throw InputError("synth: rotation vector must be nonempty");
  for (Index i = 0; i < d; ++i)
    if (!(rho(i) > 0.0 && rho(i) < kTwoPi)) throw InputError("synth: rho components must lie in (0, 2 pi)");
  if (channels < 1) throw InputError("synth: need at least one channel");
  if (samples < 2) throw InputError("synth: need at least two samples");
  if (!(dt > 0.0)) throw InputError("synth: dt must be positive");
  if (noise_sd < 0.0) throw InputError("synth: noise_sd must be nonnegative");
  if (burn_in < 0) throw InputError("synth: burn_in must be nonnegative");
  if (theta0.size() != 0 && theta0.size() != d) throw InputError("synth: theta0 has the wrong length");
  for (const auto& term : gper_terms) {
    if (static_cast<Index>(term.wave.size()) != d) throw InputError("synth: lattice term has the wrong dimension");
    if (term.coeffs.size() != channels) throw InputError("synth: lattice term has the wrong channel count");
  }
  if (!(chaos.lipschitz() < 1.0))
    throw InputError("synth: chaos map is not a contraction (Lipschitz constant " +
                     std::to_string(chaos.lipschitz()) + ")");
}

Vector on_grid_rho(const std::vector<Index>& bins, Index grid) {
  Vector rho(static_cast<Index>(bins.size()));
  for (std::size_t i = 0; i < bins.size(); ++i)
    rho(static_cast<Index>(i)) = kTwoPi * static_cast<double>(bins[i]) / static_cast<double>(grid);
  return rho;
}

SynthSpec SynthSpec::two_torus(Index samples, std::uint64_t seed) {
  SynthSpec spec;
  spec.rho = on_grid_rho({55, 89}, 4096);
  spec.channels = 2;
  spec.samples = samples;
  spec.seed = seed;
  spec.burn_in = 200;
  auto term = [](int a, int b, Complex c0, Complex c1) {
    LatticeTerm t;
    t.wave = {a, b};
    t.coeffs.resize(2);
    t.coeffs << c0, c1;
    return t;
  };
  spec.gper_terms = {
      term(1, 0, {1.0, 0.0}, {0.0, -0.3}),
      term(0, 1, {0.0, -0.4}, {1.0, 0.0}),
      term(1, 1, {0.3, 0.0}, {0.0, 0.0}),
      term(1, -1, {0.0, 0.0}, {0.25, 0.1}),
  };
  spec.chaos = {ChaosFamily::Tanh, 0.5, 1.0};
  return spec;
}

SynthSpec SynthSpec::rotation(Index period, Index samples) {
  SynthSpec spec;
  spec.rho = Vector::Constant(1, kTwoPi / static_cast<double>(period));
  spec.channels = 1;
  spec.samples = samples;
  LatticeTerm t;
  t.wave = {1};
  t.coeffs = ComplexVector::Constant(1, Complex(1.0, 0.0));
  spec.gper_terms = {t};
  return spec;
}

RowVector eval_synth_gper(const SynthSpec& spec, const Eigen::Ref<const Vector>& theta) {
  RowVector out = RowVector::Zero(spec.channels);
  for (const auto& term : spec.gper_terms) {
    double phase = 0.0;
    for (std::size_t i = 0; i < term.wave.size(); ++i)
      phase += term.wave[i] * theta(static_cast<Index>(i));
    const Complex e = std::polar(1.0, phase);
    for (Index c = 0; c < spec.channels; ++c) out(c) += (term.coeffs(c) * e).real();
  }
  return out;
}

SynthOutput generate(const SynthSpec& spec) {
  spec.validate();
  const Index d = spec.torus_dimension();
  const Index k = spec.channels;
  const Index n = spec.samples;
  const Vector theta0 = spec.theta0.size() == d ? spec.theta0 : Vector::Zero(d);

  SynthOutput out;
  auto& truth = out.truth;
  truth.seed = spec.seed;
  truth.frequencies = spec.rho / spec.dt;
  truth.theta.resize(n, d);
  truth.gper.resize(n, k);
  truth.chaos.resize(n, k);
  truth.clean.resize(n, k);

  RowVector x = RowVector::Zero(k);
  Vector theta(d);
  RowVector drive(k);
  RowVector increment(k);
  for (Index step = -spec.burn_in; step < n; ++step) {
    // theta_n = theta_0 + n rho, reduced mod 2 pi from the integer multiple
    // so long runs do not accumulate rounding.
    for (Index i = 0; i < d; ++i)
      theta(i) = std::fmod(theta0(i) + static_cast<double>(step) * spec.rho(i), kTwoPi);
    for (Index i = 0; i < d; ++i)
      if (theta(i) < 0.0) theta(i) += kTwoPi;
    drive = eval_synth_gper(spec, theta);
    for (Index c = 0; c < k; ++c) increment(c) = spec.chaos.apply(x(c));
    x = drive + increment;
    if (step < 0) continue;
    truth.theta.row(step) = theta.transpose();
    truth.gper.row(step) = drive;
    truth.chaos.row(step) = increment;
    truth.clean.row(step) = x;
  }

  out.series.dt = spec.dt;
  out.series.values = truth.clean;
  if (spec.noise_sd > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, spec.noise_sd);
    for (Index i = 0; i < n; ++i)
      for (Index c = 0; c < k; ++c) out.series.values(i, c) += normal(rng);
  }
  return out;
}

} // namespace qpdrive
