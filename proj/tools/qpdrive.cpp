// qpdrive: reconstruct quasiperiodically driven dynamics from a time series.
//
//   qpdrive analyze     --input data.csv --dt 1 --delays 20 --output model.json
//   qpdrive frequencies --model model.json [--suggest-thresholds]
//   qpdrive decompose   --model model.json
//   qpdrive reconstruct --model model.json --steps 2000 --output traj.csv
//   qpdrive synth       --preset two-torus --output series.csv --truth truth.json
//   qpdrive eval        --model model.json --points states.csv --what chaos
//
// Any long option may also come from a JSON config (--config file.json);
// values given on the command line win.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qpdrive/model_io.hpp"
#include "qpdrive/pipeline.hpp"
#include "qpdrive/synth.hpp"

using nlohmann::json;
using namespace qpdrive;

namespace {

struct PipelineFlags {
  AnalyzeOptions options;
  std::string input;
  bool header = false;
  double dt = 1.0;
  bool no_standardize = false;
  bool dense = false;
  bool sparse = false;
  std::string scale_mode = "std";
  std::string evaluator_mode = "consistent";
  std::string svd = "auto";
  std::string score_normalization = "none";

  AnalyzeOptions resolve() const {
    AnalyzeOptions out = options;
    out.standardize = !no_standardize;
    out.storage = sparse && !dense ? StorageKind::Sparse : StorageKind::Dense;
    out.scale_mode = scale_mode_from_string(scale_mode);
    out.evaluator_mode = evaluator_mode_from_string(evaluator_mode);
    out.selection.normalization = score_normalization_from_string(score_normalization);
    out.svd_method = svd == "dense" ? SvdMethod::Dense : svd == "lanczos" ? SvdMethod::Lanczos : SvdMethod::Auto;
    return out;
  }

  TimeSeries load() const {
    try {
      return load_csv(input, dt, header);
    } catch (const std::exception& e) {
      throw PipelineError("ingest", e.what());
    }
  }
};

void add_input_flags(CLI::App* app, PipelineFlags& f, bool required) {
  auto* opt = app->add_option("--input,-i", f.input, "Input CSV, one sample per row");
  if (required) opt->required();
  app->add_flag("--header", f.header, "First CSV line holds channel names");
  app->add_option("--dt", f.dt, "Sampling interval")->check(CLI::PositiveNumber);
}

void add_pipeline_flags(CLI::App* app, PipelineFlags& f) {
  auto& o = f.options;
  app->add_option("--delays,-Q", o.delays, "Number of delays Q")->check(CLI::NonNegativeNumber);
  app->add_option("--epsilon", o.epsilon, "Kernel bandwidth (default 0.01 k)");
  app->add_option("--prune-tau", o.prune_threshold, "Drop kernel entries below tau");
  app->add_option("--num-eigs,-L", o.num_eigs, "Number of kernel eigenpairs L");
  app->add_flag("--dense", f.dense, "Dense kernel storage (default)");
  app->add_flag("--sparse", f.sparse, "Sparse kernel storage");
  app->add_option("--eps1", o.selection.eps1, "Minimum score W(j, L0)");
  app->add_option("--eps2", o.selection.eps2, "Maximum ln W(j, L) - ln W(j, L0)");
  app->add_option("--L0", o.selection.L0, "Score column for the eps1 test");
  app->add_option("--score-normalization", f.score_normalization, "none or max (scale of the eps1 test)")
      ->check(CLI::IsMember({"none", "max"}));
  app->add_flag("--drop-bin1", o.selection.drop_bin1, "Never select DFT bin 1");
  app->add_flag("--no-standardize", f.no_standardize, "Skip per-channel standardization");
  app->add_option("--scale-mode", f.scale_mode, "std or sup")->check(CLI::IsMember({"std", "sup"}));
  app->add_option("--evaluator-mode", f.evaluator_mode, "consistent or paper_exact")
      ->check(CLI::IsMember({"consistent", "paper_exact"}));
  app->add_option("--svd", f.svd, "auto, dense or lanczos")->check(CLI::IsMember({"auto", "dense", "lanczos"}));
  app->add_option("--seed", o.seed, "Seed recorded in the model");
}

// ---------------------------------------------------------------------------
// Reporting helpers

std::optional<double> period_time(double omega) {
  if (omega == 0.0) return std::nullopt;
  return 2.0 * std::numbers::pi / omega;
}

json frequency_rows(const FrequencySet& freqs) {
  json rows = json::array();
  for (Index j = 0; j < freqs.size(); ++j) {
    const double omega = freqs.omegas(j);
    const auto T = period_time(omega);
    rows.push_back({{"bin", freqs.bins[static_cast<std::size_t>(j)]},
                    {"omega", omega},
                    {"period_samples", T ? json(*T / freqs.dt) : json(nullptr)},
                    {"period_time", T ? json(*T) : json(nullptr)}});
  }
  return rows;
}

void print_frequency_table(std::ostream& out, const FrequencySet& freqs) {
  out << "selected frequencies (grid N' = " << freqs.grid_size << ", dt = " << freqs.dt << ")\n";
  out << std::setw(8) << "bin" << std::setw(16) << "omega" << std::setw(16) << "period" << '\n';
  for (Index j = 0; j < freqs.size(); ++j) {
    const auto T = period_time(freqs.omegas(j));
    out << std::setw(8) << freqs.bins[static_cast<std::size_t>(j)] << std::setw(16)
        << std::setprecision(8) << freqs.omegas(j) << std::setw(16);
    if (T)
      out << *T;
    else
      out << "inf";
    out << '\n';
  }
  const auto gens = estimate_generators(freqs);
  out << "quasiperiodicity dimension (heuristic): " << gens.size();
  if (!gens.empty()) {
    out << "  generator bins:";
    for (Index g : gens) out << ' ' << g;
  }
  out << '\n';
}

Vector residual_original_units(const DecompositionModel& model) {
  return model.harmonic.residual_norm.cwiseProduct(model.channel_stats.scale);
}

void print_residuals(std::ostream& out, const DecompositionModel& model) {
  const Vector r = residual_original_units(model);
  out << "non-periodic residual RMS per channel:";
  for (Index c = 0; c < r.size(); ++c) out << ' ' << std::setprecision(6) << r(c);
  out << '\n';
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

void write_matrix_csv(std::ostream& out, const Eigen::Ref<const RowMatrix>& m,
                      const std::vector<std::string>& names = {}) {
  if (!names.empty()) {
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
    out << '\n';
  }
  out << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(i, c);
    out << '\n';
  }
}

void write_matrix_file(const std::string& path, const Eigen::Ref<const RowMatrix>& m,
                       const std::vector<std::string>& names = {}) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_matrix_csv(out, m, names);
}

std::vector<std::string> channel_headers(const std::string& prefix, Index k) {
  std::vector<std::string> names;
  for (Index c = 0; c < k; ++c) names.push_back(prefix + std::to_string(c));
  return names;
}

json suggestion_json(const ThresholdSuggestion& s) {
  return {{"L0_candidates", s.L0_candidates}, {"eps2_candidates", s.eps2_candidates}, {"L0_used", s.L0_used}};
}

void print_suggestion(std::ostream& out, const ThresholdSuggestion& s) {
  out << "threshold suggestions (slope changes; choose by inspection)\n  L0 candidates:";
  for (Index v : s.L0_candidates) out << ' ' << v;
  out << "\n  eps2 candidates (at L0 = " << s.L0_used << "):";
  for (double v : s.eps2_candidates) out << ' ' << std::setprecision(4) << v;
  out << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic spec (de)serialization

json synth_to_json(const SynthSpec& spec) {
  json terms = json::array();
  for (const auto& t : spec.gper_terms) {
    json coeffs = json::array();
    for (Index c = 0; c < t.coeffs.size(); ++c) coeffs.push_back({t.coeffs(c).real(), t.coeffs(c).imag()});
    terms.push_back({{"wave", t.wave}, {"coeffs", coeffs}});
  }
  return {{"rho", std::vector<double>(spec.rho.data(), spec.rho.data() + spec.rho.size())},
          {"frequencies", [&] {
             std::vector<double> f;
             for (Index i = 0; i < spec.rho.size(); ++i) f.push_back(spec.rho(i) / spec.dt);
             return f;
           }()},
          {"gper_terms", terms},
          {"chaos", {{"family", to_string(spec.chaos.family)}, {"a", spec.chaos.a}, {"b", spec.chaos.b}}},
          {"noise_sd", spec.noise_sd},
          {"samples", spec.samples},
          {"dt", spec.dt},
          {"channels", spec.channels},
          {"seed", spec.seed},
          {"burn_in", spec.burn_in}};
}

SynthSpec synth_from_json(const json& j) {
  SynthSpec spec;
  const auto rho = j.at("rho").get<std::vector<double>>();
  spec.rho = Eigen::Map<const Vector>(rho.data(), static_cast<Index>(rho.size()));
  spec.channels = j.at("channels").get<Index>();
  for (const auto& t : j.at("gper_terms")) {
    LatticeTerm term;
    term.wave = t.at("wave").get<std::vector<int>>();
    const auto& c = t.at("coeffs");
    term.coeffs.resize(static_cast<Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i)
      term.coeffs(static_cast<Index>(i)) = Complex(c[i][0].get<double>(), c[i][1].get<double>());
    spec.gper_terms.push_back(std::move(term));
  }
  if (j.contains("chaos")) {
    const auto& ch = j.at("chaos");
    spec.chaos.family = chaos_family_from_string(ch.at("family").get<std::string>());
    spec.chaos.a = ch.value("a", 0.0);
    spec.chaos.b = ch.value("b", 1.0);
  }
  spec.noise_sd = j.value("noise_sd", 0.0);
  spec.samples = j.value("samples", Index{1024});
  spec.dt = j.value("dt", 1.0);
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.burn_in = j.value("burn_in", Index{0});
  return spec;
}

// ---------------------------------------------------------------------------
// Config file support: JSON keys become long options placed right after the
// subcommand name, so later command-line occurrences take precedence.

std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  std::string config_path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw InputError("cannot open config '" + config_path + "'");
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw InputError("config '" + config_path + "' is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw InputError("config '" + config_path + "' must be a JSON object");

  std::size_t sub_pos = rest.size();
  CLI::App* sub = nullptr;
  for (std::size_t i = 1; i < rest.size(); ++i) {
    if (auto* s = app.get_subcommand_no_throw(rest[i])) {
      sub_pos = i;
      sub = s;
      break;
    }
  }
  if (!sub) return rest;

  std::vector<std::string> injected;
  for (const auto& [key, value] : cfg.items()) {
    if (key.rfind("_", 0) == 0) continue;   // comments
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back(flag);
    } else if (value.is_string()) {
      injected.push_back(flag);
      injected.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      injected.push_back(flag);
      std::ostringstream ss;
      ss << std::setprecision(17) << value.get<double>();
      if (value.is_number_integer()) ss.str(std::to_string(value.get<long long>()));
      injected.push_back(ss.str());
    } else {
      throw InputError("config key '" + key + "' must be a string, number or boolean");
    }
  }
  std::vector<std::string> out(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, rest.end());
  return out;
}

// ---------------------------------------------------------------------------
// Subcommands

struct AnalyzeArgs {
  PipelineFlags flags;
  std::string output;
  bool portable = false;
  bool json_out = false;
};

int run_analyze(const AnalyzeArgs& a) {
  const auto series = a.flags.load();
  const auto options = a.flags.resolve();
  auto analysis = analyze(series, options);
  print_warnings(analysis.warnings);
  save_model(a.output, analysis.model, {a.portable});
  const auto& model = analysis.model;
  if (a.json_out) {
    json out = {{"model", a.output},
                {"frequencies", frequency_rows(model.harmonic.freqs)},
                {"residual_norm", std::vector<double>(model.harmonic.residual_norm.data(),
                                                      model.harmonic.residual_norm.data() +
                                                          model.harmonic.residual_norm.size())},
                {"num_states", model.train.size()},
                {"num_eigs", model.basis.rank()},
                {"warnings", analysis.warnings}};
    std::cout << out.dump(1) << '\n';
  } else {
    std::cout << "training states: " << model.train.size() << ", eigenpairs: " << model.basis.rank()
              << ", epsilon: " << model.epsilon() << '\n';
    print_frequency_table(std::cout, model.harmonic.freqs);
    print_residuals(std::cout, model);
    std::cout << "model written to " << a.output << '\n';
  }
  return 0;
}

struct FrequenciesArgs {
  PipelineFlags flags;
  std::string model;
  std::string output;
  bool suggest = false;
  bool json_out = false;
};

int run_frequencies(const FrequenciesArgs& a) {
  FrequencySet freqs;
  ScoreMatrix scores;
  double eps1 = a.flags.options.selection.eps1;
  Index L0 = a.flags.options.selection.L0;
  if (!a.model.empty()) {
    const auto model = load_model(a.model);
    freqs = model.harmonic.freqs;
    eps1 = freqs.params.eps1;
    L0 = freqs.params.L0;
    if (a.suggest) scores = frequency_scores(model.basis);
  } else if (!a.flags.input.empty()) {
    const auto options = a.flags.resolve();
    const auto spectral = spectral_analysis(a.flags.load(), options);
    print_warnings(spectral.basis.warnings);
    scores = spectral.scores;
    freqs = select_frequencies(scores, options.selection, a.flags.dt);
  } else {
    throw InputError("frequencies needs --model or --input");
  }

  const json rows = frequency_rows(freqs);
  if (!a.output.empty()) {
    std::ofstream out(a.output);
    if (!out) throw InputError("cannot write '" + a.output + "'");
    out << rows.dump(1) << '\n';
  }
  std::optional<ThresholdSuggestion> suggestion;
  if (a.suggest) suggestion = suggest_thresholds(scores, eps1, L0);
  if (a.json_out) {
    json out = {{"frequencies", rows}};
    const auto gens = estimate_generators(freqs);
    out["generators_heuristic"] = gens;
    if (suggestion) out["suggestions"] = suggestion_json(*suggestion);
    std::cout << out.dump(1) << '\n';
  } else {
    print_frequency_table(std::cout, freqs);
    if (suggestion) print_suggestion(std::cout, *suggestion);
  }
  return 0;
}

struct DecomposeArgs {
  std::string model;
  std::string output;
  bool json_out = false;
};

int run_decompose(const DecomposeArgs& a) {
  const auto model = load_model(a.model);
  const Index k = model.channels();
  const Vector times = target_times(model.train);
  const ComplexMatrix F = build_fourier_matrix(model.harmonic.freqs, times);
  const Matrix periodic = periodic_part(F, model.harmonic.A);
  const Matrix residual = model.targets - periodic;
  const Vector residual_orig = residual_original_units(model);

  if (a.json_out) {
    json amps = json::array();
    for (Index j = 0; j < model.harmonic.A.rows(); ++j) {
      std::vector<double> amp;
      for (Index c = 0; c < k; ++c)
        amp.push_back((j == 0 ? 1.0 : 2.0) * std::abs(model.harmonic.A(j, c)) * model.channel_stats.scale(c));
      amps.push_back({{"omega", model.harmonic.freqs.omegas(j)}, {"amplitude", amp}});
    }
    std::cout << json{{"residual_norm", std::vector<double>(residual_orig.data(), residual_orig.data() + k)},
                      {"harmonics", amps}}
                     .dump(1)
              << '\n';
  } else {
    std::cout << std::setw(16) << "omega" << "  amplitude per channel (original units)\n";
    for (Index j = 0; j < model.harmonic.A.rows(); ++j) {
      std::cout << std::setw(16) << std::setprecision(8) << model.harmonic.freqs.omegas(j) << ' ';
      for (Index c = 0; c < k; ++c)
        std::cout << ' ' << std::setprecision(6)
                  << (j == 0 ? 1.0 : 2.0) * std::abs(model.harmonic.A(j, c)) * model.channel_stats.scale(c);
      std::cout << '\n';
    }
    print_residuals(std::cout, model);
  }

  if (!a.output.empty()) {
    RowMatrix table(model.train.size(), 3 * k);
    std::vector<std::string> names;
    for (Index c = 0; c < k; ++c) {
      names.push_back("target" + std::to_string(c));
      names.push_back("periodic" + std::to_string(c));
      names.push_back("nonperiodic" + std::to_string(c));
    }
    const auto& stats = model.channel_stats;
    for (Index n = 0; n < model.train.size(); ++n)
      for (Index c = 0; c < k; ++c) {
        table(n, 3 * c) = model.targets(n, c) * stats.scale(c) + stats.mean(c);
        table(n, 3 * c + 1) = periodic(n, c) * stats.scale(c) + stats.mean(c);
        table(n, 3 * c + 2) = residual(n, c) * stats.scale(c);
      }
    write_matrix_file(a.output, table, names);
  }
  return 0;
}

struct ReconstructArgs {
  std::string model;
  Index steps = 1000;
  Index init_index = -1;
  std::string init_state;
  double t0 = 0.0;
  std::string policy = "freeze";
  Index error_window = 500;
  std::string error_mode = "absolute";
  std::string reference;
  bool reference_header = false;
  Index reference_start = -1;
  std::string output = "trajectory.csv";
  std::string error_output;
  bool json_out = false;
};

int run_reconstruct(const ReconstructArgs& a, const CLI::App& sub) {
  const auto model = load_model(a.model);
  const Index k = model.channels();

  RowVector state;
  double t0 = a.t0;
  Index aligned_start = 0;
  if (!a.init_state.empty()) {
    const auto ts = load_csv(a.init_state, model.dt(), false);
    if (ts.samples() != 1) throw InputError("--init-state file must hold exactly one row");
    state = standardize_state(model, ts.values.row(0));
  } else {
    const Index index = a.init_index >= 0 ? a.init_index : model.train.size() - 1;
    std::tie(state, t0) = training_initial_state(model, index);
    if (sub.count("--t0") > 0) t0 = a.t0;
    aligned_start = model.train.newest_index(index) + 1;
  }

  ReconstructOptions ropt;
  ropt.policy = support_policy_from_string(a.policy);
  const auto run = reconstruct(model, state, t0, a.steps, ropt);
  write_matrix_file(a.output, run.trajectory, channel_headers("y", k));

  json summary = {{"steps", a.steps}, {"support_fallbacks", run.support_fallbacks}, {"trajectory", a.output}};
  if (!a.reference.empty()) {
    const auto ref = load_csv(a.reference, model.dt(), a.reference_header);
    const Index start = a.reference_start >= 0 ? a.reference_start : aligned_start;
    if (ref.channels() != k || start + a.steps > ref.samples())
      throw InputError("reference shape mismatch: need " + std::to_string(k) + " channels and rows [" +
                       std::to_string(start) + ", " + std::to_string(start + a.steps) + "), file has " +
                       std::to_string(ref.samples()) + "x" + std::to_string(ref.channels()));
    if (a.steps >= a.error_window && a.steps > 0) {
      const RowMatrix segment = ref.values.middleRows(start, a.steps);
      const Matrix err = anma_error(segment, run.trajectory, a.error_window, error_mode_from_string(a.error_mode));
      if (!a.error_output.empty()) write_matrix_file(a.error_output, err, channel_headers("e", k));
      const RowVector worst = err.cwiseAbs().colwise().maxCoeff();
      const RowVector mean = err.cwiseAbs().colwise().mean();
      summary["error_max"] = std::vector<double>(worst.data(), worst.data() + k);
      summary["error_mean"] = std::vector<double>(mean.data(), mean.data() + k);
      if (!a.json_out) {
        std::cout << "ANMA error (T = " << a.error_window << ", " << a.error_mode << ") per channel, max / mean:\n";
        for (Index c = 0; c < k; ++c)
          std::cout << "  channel " << c << ": " << std::setprecision(5) << worst(c) << " / " << mean(c) << '\n';
      }
    } else if (!a.json_out) {
      std::cout << "rollout shorter than the error window; no error computed\n";
    }
  }
  if (a.json_out) {
    std::cout << summary.dump(1) << '\n';
  } else {
    std::cout << "wrote " << a.steps << " steps to " << a.output;
    if (run.support_fallbacks > 0) std::cout << " (" << run.support_fallbacks << " out-of-support steps)";
    std::cout << '\n';
  }
  return 0;
}

struct SynthArgs {
  std::string preset = "two-torus";
  std::string spec;
  Index samples = 4096;
  Index period = 64;
  std::uint64_t seed = 0;
  double noise = 0.0;
  std::string output = "series.csv";
  std::string truth;
};

int run_synth(const SynthArgs& a, const CLI::App& sub) {
  SynthSpec spec;
  if (!a.spec.empty()) {
    std::ifstream in(a.spec);
    if (!in) throw InputError("cannot open synth spec '" + a.spec + "'");
    json j;
    in >> j;
    spec = synth_from_json(j);
    if (sub.count("--samples") > 0) spec.samples = a.samples;
  } else if (a.preset == "two-torus") {
    spec = SynthSpec::two_torus(a.samples, a.seed);
  } else {
    spec = SynthSpec::rotation(a.period, a.samples);
  }
  if (sub.count("--seed") > 0) spec.seed = a.seed;
  if (sub.count("--noise") > 0) spec.noise_sd = a.noise;

  const auto out = generate(spec);
  write_csv(a.output, out.series);
  if (!a.truth.empty()) {
    std::ofstream t(a.truth);
    if (!t) throw InputError("cannot write '" + a.truth + "'");
    t << synth_to_json(spec).dump(1) << '\n';
  }
  std::cout << "wrote " << spec.samples << " samples x " << spec.channels << " channels to " << a.output << '\n';
  return 0;
}

struct EvalArgs {
  std::string model;
  std::string points;
  std::string what = "chaos";
  Index modes = 0;
  std::string output;
};

int run_eval(const EvalArgs& a) {
  const auto model = load_model(a.model);
  const Index k = model.channels();
  std::ostringstream buffer;
  if (a.what == "gper") {
    const auto times = load_csv(a.points, model.dt(), false);
    RowMatrix out(times.samples(), k);
    for (Index i = 0; i < times.samples(); ++i)
      out.row(i) = model.channel_stats.invert(eval_gper(model.harmonic, times.values(i, 0)));
    write_matrix_csv(buffer, out, channel_headers("gper", k));
  } else {
    const auto pts = load_csv(a.points, model.dt(), false);
    if (pts.channels() != model.train.dimension())
      throw InputError("points must have k(Q+1) = " + std::to_string(model.train.dimension()) + " columns");
    const Index count = a.what == "modes" ? (a.modes > 0 ? std::min(a.modes, model.basis.rank()) : model.basis.rank()) : k;
    RowMatrix out(pts.samples(), count);
    for (Index i = 0; i < pts.samples(); ++i) {
      const RowVector y = standardize_state(model, pts.values.row(i));
      if (a.what == "modes") {
        out.row(i) = nystrom_phis(model.basis, model.train, y).head(count);
      } else {
        const RowVector g = eval_gchaos0(model.evaluator, model.train, model.epsilon(), y);
        out.row(i) = g.cwiseProduct(model.channel_stats.scale.transpose());
      }
    }
    write_matrix_csv(buffer, out, channel_headers(a.what == "modes" ? "phi" : "gchaos", count));
  }
  if (a.output.empty()) {
    std::cout << buffer.str();
  } else {
    std::ofstream out(a.output);
    if (!out) throw InputError("cannot write '" + a.output + "'");
    out << buffer.str();
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reconstruct quasiperiodically driven dynamics from time series"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_unused;
  app.add_option("--config", config_unused, "JSON file supplying default option values");

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Fit a model to a time series");
  add_input_flags(analyze_cmd, analyze_args.flags, true);
  add_pipeline_flags(analyze_cmd, analyze_args.flags);
  analyze_cmd->add_option("--output,-o", analyze_args.output, "Model file (JSON)")->required();
  analyze_cmd->add_flag("--portable", analyze_args.portable, "CSV sidecars instead of binary");
  analyze_cmd->add_flag("--json", analyze_args.json_out, "Machine-readable summary on stdout");

  FrequenciesArgs freq_args;
  auto* freq_cmd = app.add_subcommand("frequencies", "List identified eigenfrequencies");
  freq_cmd->add_option("--model,-m", freq_args.model, "Model file");
  add_input_flags(freq_cmd, freq_args.flags, false);
  add_pipeline_flags(freq_cmd, freq_args.flags);
  freq_cmd->add_option("--output,-o", freq_args.output, "Write the frequency list as JSON");
  freq_cmd->add_flag("--suggest-thresholds", freq_args.suggest, "Report slope-change candidates for L0 and eps2");
  freq_cmd->add_flag("--json", freq_args.json_out, "Machine-readable output on stdout");

  DecomposeArgs dec_args;
  auto* dec_cmd = app.add_subcommand("decompose", "Report the periodic / non-periodic split");
  dec_cmd->add_option("--model,-m", dec_args.model, "Model file")->required();
  dec_cmd->add_option("--output,-o", dec_args.output, "CSV of target, periodic and residual per channel");
  dec_cmd->add_flag("--json", dec_args.json_out, "Machine-readable output on stdout");

  ReconstructArgs rec_args;
  auto* rec_cmd = app.add_subcommand("reconstruct", "Iterate the learned model");
  rec_cmd->add_option("--model,-m", rec_args.model, "Model file")->required();
  rec_cmd->add_option("--steps", rec_args.steps, "Number of steps")->check(CLI::NonNegativeNumber);
  rec_cmd->add_option("--init-index", rec_args.init_index, "Training state to start from (default: last)");
  rec_cmd->add_option("--init-state", rec_args.init_state, "CSV with one delay state in original units");
  rec_cmd->add_option("--t0", rec_args.t0, "Time of the newest sample in the initial state");
  rec_cmd->add_option("--policy", rec_args.policy, "Out-of-support policy")->check(CLI::IsMember({"freeze", "abort"}));
  rec_cmd->add_option("--error-window", rec_args.error_window, "ANMA window T")->check(CLI::PositiveNumber);
  rec_cmd->add_option("--error-mode", rec_args.error_mode, "absolute or signed")
      ->check(CLI::IsMember({"absolute", "signed"}));
  rec_cmd->add_option("--reference", rec_args.reference, "Reference series CSV for scoring");
  rec_cmd->add_flag("--reference-header", rec_args.reference_header, "Reference CSV has a header line");
  rec_cmd->add_option("--reference-start", rec_args.reference_start,
                      "Reference row matching the first step (default: aligned with the initial state)");
  rec_cmd->add_option("--output,-o", rec_args.output, "Trajectory CSV");
  rec_cmd->add_option("--error-output", rec_args.error_output, "ANMA error CSV");
  rec_cmd->add_flag("--json", rec_args.json_out, "Machine-readable summary on stdout");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic driven system");
  synth_cmd->add_option("--preset", synth_args.preset, "two-torus or rotation")
      ->check(CLI::IsMember({"two-torus", "rotation"}));
  synth_cmd->add_option("--spec", synth_args.spec, "JSON generator spec (overrides --preset)");
  synth_cmd->add_option("--samples,-N", synth_args.samples, "Number of samples")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--period", synth_args.period, "Rotation period in samples (rotation preset)");
  synth_cmd->add_option("--seed", synth_args.seed, "Noise seed");
  synth_cmd->add_option("--noise", synth_args.noise, "Observation noise standard deviation");
  synth_cmd->add_option("--output,-o", synth_args.output, "Series CSV");
  synth_cmd->add_option("--truth", synth_args.truth, "Ground-truth JSON");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate learned functions at new points");
  eval_cmd->add_option("--model,-m", eval_args.model, "Model file")->required();
  eval_cmd->add_option("--points", eval_args.points, "CSV of delay states (or times for gper)")->required();
  eval_cmd->add_option("--what", eval_args.what, "chaos, modes or gper")->check(CLI::IsMember({"chaos", "modes", "gper"}));
  eval_cmd->add_option("--modes", eval_args.modes, "Number of eigenfunctions for --what modes");
  eval_cmd->add_option("--output,-o", eval_args.output, "Output CSV (default stdout)");

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(args, app);
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*analyze_cmd) return run_analyze(analyze_args);
    if (*freq_cmd) return run_frequencies(freq_args);
    if (*dec_cmd) return run_decompose(dec_args);
    if (*rec_cmd) return run_reconstruct(rec_args, *rec_cmd);
    if (*synth_cmd) return run_synth(synth_args, *synth_cmd);
    if (*eval_cmd) return run_eval(eval_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
