#include "qpdrive/nystrom.hpp"

#include <cmath>

namespace qpdrive {

std::string to_string(EvaluatorMode mode) {
  return mode == EvaluatorMode::Consistent ? "consistent" : "paper_exact";
}

EvaluatorMode evaluator_mode_from_string(const std::string& name) {
  if (name == "consistent") return EvaluatorMode::Consistent;
  if (name == "paper_exact" || name == "paper-exact" || name == "paper") return EvaluatorMode::PaperExact;
  throw InputError("unknown evaluator mode '" + name + "' (expected consistent or paper_exact)");
}

EvaluatorTable build_evaluator(const KernelBasis& basis, const ChaoticCoefficients& chaotic,
                               EvaluatorMode mode) {
  if (chaotic.E.rows() != basis.rank())
    throw InputError("coefficient matrix has " + std::to_string(chaotic.E.rows()) +
                     " rows but the basis has " + std::to_string(basis.rank()) + " vectors");
  EvaluatorTable table;
  table.mode = mode;
  const Vector row_weight = mode == EvaluatorMode::Consistent
                                ? Vector(basis.q.cwiseSqrt().cwiseInverse())
                                : Vector(basis.q.cwiseInverse());
  const Vector col_weight = basis.lambdas.cwiseSqrt().cwiseInverse();
  table.gamma_tilde = row_weight.asDiagonal() * basis.gammas * col_weight.asDiagonal();
  table.products = table.gamma_tilde * chaotic.E;
  return table;
}

KernelSection kernel_section_with_mass(const EmbeddedSeries& train, double epsilon,
                                       const Eigen::Ref<const RowVector>& y) {
  if (y.size() != train.dimension())
    throw InputError("evaluation point has dimension " + std::to_string(y.size()) +
                     ", expected " + std::to_string(train.dimension()));
  if (!y.allFinite()) throw InputError("evaluation point is not finite");
  KernelSection sec;
  sec.values = kernel_section(train.states, y, epsilon);
  sec.mass = sec.values.mean();
  return sec;
}

namespace {

void require_support(double mass, double s_min) {
  if (!(mass >= s_min))
    throw OutOfSupportError("evaluation point is outside the data support (kernel mass " +
                            std::to_string(mass) + ")");
}

} // namespace

RowVector nystrom_phis(const KernelBasis& basis, const EmbeddedSeries& train,
                       const Eigen::Ref<const RowVector>& y, double s_min) {
  const auto sec = kernel_section_with_mass(train, basis.epsilon, y);
  require_support(sec.mass, s_min);
  const double n = static_cast<double>(train.size());
  const Vector weights = sec.values.cwiseQuotient(basis.q.cwiseSqrt()) / sec.mass;
  RowVector out = (weights.transpose() * basis.gammas) / n;
  return out.cwiseQuotient(basis.sigmas().transpose());
}

double nystrom_phi(const KernelBasis& basis, const EmbeddedSeries& train,
                   const Eigen::Ref<const RowVector>& y, Index l, double s_min) {
  if (l < 0 || l >= basis.rank()) throw InputError("eigenfunction index out of range");
  const auto sec = kernel_section_with_mass(train, basis.epsilon, y);
  require_support(sec.mass, s_min);
  const double n = static_cast<double>(train.size());
  const double sum = sec.values.cwiseQuotient(basis.q.cwiseSqrt()).dot(basis.gammas.col(l));
  return sum / (sec.mass * n * std::sqrt(basis.lambdas(l)));
}

RowVector eval_gchaos0(const EvaluatorTable& table, const EmbeddedSeries& train, double epsilon,
                       const Eigen::Ref<const RowVector>& y, double s_min) {
  const auto sec = kernel_section_with_mass(train, epsilon, y);
  require_support(sec.mass, s_min);
  const double n = static_cast<double>(train.size());
  return (sec.values.transpose() * table.products) / (n * sec.mass);
}

} // namespace qpdrive
