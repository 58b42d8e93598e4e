#include "qpdrive/dynamics.hpp"

#include <cmath>

namespace qpdrive {

void DecompositionModel::check_consistency() const {
  const Index n = train.size();
  const Index k = train.channels;
  const Index L = basis.rank();
  const Index m = harmonic.A.rows();
  auto fail = [](const std::string& what) { throw InputError("model shapes inconsistent: " + what); };
  if (train.dimension() != k * (train.delays + 1)) fail("state dimension");
  if (targets.rows() != n || targets.cols() != k) fail("targets");
  if (basis.phis.rows() != n || basis.gammas.rows() != n || basis.gammas.cols() != L) fail("basis");
  if (basis.q.size() != n) fail("degree vector");
  if (chaotic.E.rows() != L || chaotic.E.cols() != k) fail("chaotic coefficients");
  if (harmonic.A.cols() != k || harmonic.freqs.size() != m) fail("harmonic coefficients");
  if (evaluator.gamma_tilde.rows() != n || evaluator.gamma_tilde.cols() != L) fail("evaluator");
  if (evaluator.products.rows() != n || evaluator.products.cols() != k) fail("evaluator products");
  if (channel_stats.channels() != k) fail("channel statistics");
}

std::string to_string(SupportPolicy policy) {
  return policy == SupportPolicy::FreezeChaotic ? "freeze" : "abort";
}

SupportPolicy support_policy_from_string(const std::string& name) {
  if (name == "freeze") return SupportPolicy::FreezeChaotic;
  if (name == "abort") return SupportPolicy::Abort;
  throw InputError("unknown out-of-support policy '" + name + "' (expected freeze or abort)");
}

std::string to_string(ErrorMode mode) { return mode == ErrorMode::Absolute ? "absolute" : "signed"; }

ErrorMode error_mode_from_string(const std::string& name) {
  if (name == "absolute") return ErrorMode::Absolute;
  if (name == "signed") return ErrorMode::Signed;
  throw InputError("unknown error mode '" + name + "' (expected absolute or signed)");
}

std::pair<RowVector, double> training_initial_state(const DecompositionModel& model, Index index) {
  if (index < 0 || index >= model.train.size())
    throw InputError("initial index " + std::to_string(index) + " outside the " +
                     std::to_string(model.train.size()) + " training states");
  const double t0 = static_cast<double>(model.train.newest_index(index)) * model.dt();
  return {model.train.states.row(index), t0};
}

RowVector standardize_state(const DecompositionModel& model, const Eigen::Ref<const RowVector>& state) {
  const Index k = model.channels();
  if (state.size() != model.train.dimension())
    throw InputError("initial state has dimension " + std::to_string(state.size()) + ", expected " +
                     std::to_string(model.train.dimension()));
  RowVector out(state.size());
  for (Index q = 0; q <= model.delays(); ++q)
    out.segment(q * k, k) = model.channel_stats.apply(state.segment(q * k, k));
  return out;
}

RowVector predict_next(const DecompositionModel& model, const Eigen::Ref<const RowVector>& state, double t_next) {
  return eval_gper(model.harmonic, t_next) +
         eval_gchaos0(model.evaluator, model.train, model.epsilon(), state);
}

ReconstructionRun reconstruct(const DecompositionModel& model, const Eigen::Ref<const RowVector>& initial_state,
                              double t0, Index n_steps, const ReconstructOptions& options) {
  const Index k = model.channels();
  const Index dim = model.train.dimension();
  if (initial_state.size() != dim)
    throw InputError("initial state has dimension " + std::to_string(initial_state.size()) +
                     ", expected " + std::to_string(dim));
  if (n_steps < 0) throw InputError("number of steps must be nonnegative");

  ReconstructionRun run;
  run.trajectory.resize(n_steps, k);
  if (options.keep_states) run.state_log = RowMatrix(n_steps, dim);

  RowVector state = initial_state;
  RowVector next(k);
  for (Index step = 0; step < n_steps; ++step) {
    if (!state.allFinite()) throw NumericalError("state became non-finite at step " + std::to_string(step));
    const double t = t0 + static_cast<double>(step + 1) * model.dt();
    next = eval_gper(model.harmonic, t);
    try {
      next += eval_gchaos0(model.evaluator, model.train, model.epsilon(), state, options.support_floor);
    } catch (const OutOfSupportError& e) {
      if (options.policy == SupportPolicy::Abort)
        throw OutOfSupportError(std::string(e.what()) + " at step " + std::to_string(step));
      ++run.support_fallbacks;
    }
    if (!next.allFinite()) throw NumericalError("non-finite prediction at step " + std::to_string(step));

    // Shift register: older blocks move down one slot, the new sample enters slot 0.
    if (dim > k) {
      const RowVector older = state.head(dim - k);
      state.tail(dim - k) = older;
    }
    state.head(k) = next;

    run.trajectory.row(step) = model.channel_stats.invert(next);
    if (run.state_log) run.state_log->row(step) = state;
  }
  return run;
}

Matrix anma_error(const Eigen::Ref<const RowMatrix>& reference,
                  const Eigen::Ref<const RowMatrix>& reconstruction, Index window, ErrorMode mode) {
  const Index n = reference.rows();
  const Index k = reference.cols();
  if (reconstruction.rows() != n || reconstruction.cols() != k)
    throw InputError("reference is " + std::to_string(n) + "x" + std::to_string(k) +
                     " but reconstruction is " + std::to_string(reconstruction.rows()) + "x" +
                     std::to_string(reconstruction.cols()));
  if (window < 1 || window > n)
    throw InputError("error window must lie in [1, " + std::to_string(n) + "]");
  const RowVector sup = reference.cwiseAbs().colwise().maxCoeff();
  for (Index c = 0; c < k; ++c)
    if (!(sup(c) > 0.0)) throw InputError("reference channel " + std::to_string(c) + " has zero sup-norm");

  RowMatrix diff = reconstruction - reference;
  if (mode == ErrorMode::Absolute) diff = diff.cwiseAbs();

  Matrix out(n - window + 1, k);
  for (Index c = 0; c < k; ++c) {
    double sum = diff.col(c).head(window).sum();
    out(0, c) = sum;
    for (Index i = 1; i + window <= n; ++i) {
      sum += diff(i + window - 1, c) - diff(i - 1, c);
      out(i, c) = sum;
    }
    out.col(c) /= static_cast<double>(window) * sup(c);
  }
  return out;
}

} // namespace qpdrive
