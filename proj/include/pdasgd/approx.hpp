#pragma once

#include "pdasgd/baselines.hpp"
#include "pdasgd/pdasgd.hpp"
#include "pdasgd/rounding.hpp"
#include "pdasgd/semidual.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace pdasgd {

enum class SolverKind { pdasgd, sinkhorn, greenkhorn };

/// theory: m = n, z-step multiplier 1. benchmark: m = round(2 sqrt n),
/// multiplier 15.
enum class SolverProfile { theory, benchmark };

enum class StopCriterion {
  duality_gap,     // f(x) + G(v) <= eps/4 and ||Ax - b~||_1 <= eps'/2
  marginal_target  // d(X~) w.r.t. the smoothed marginals <= target_distance
};

enum class StopReason { converged, marginal_target, iteration_cap, trivial_instance };

inline std::string_view to_string(SolverKind k) {
  switch (k) {
    case SolverKind::pdasgd: return "pdasgd";
    case SolverKind::sinkhorn: return "sinkhorn";
    case SolverKind::greenkhorn: return "greenkhorn";
  }
  return "?";
}

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::converged: return "converged";
    case StopReason::marginal_target: return "marginal_target";
    case StopReason::iteration_cap: return "iteration_cap";
    case StopReason::trivial_instance: return "trivial_instance";
  }
  return "?";
}

struct ApproxConfig {
  double epsilon = 0.1;
  SolverKind solver = SolverKind::pdasgd;
  SolverProfile profile = SolverProfile::benchmark;
  StopCriterion stop = StopCriterion::duality_gap;
  double target_distance = 0.0;          // marginal_target only
  std::optional<std::int64_t> max_outer;  // overrides the theoretical cap
  double cap_constant = 1.0;              // kappa in the iteration cap
  std::int64_t baseline_max_iter = 1'000'000;
  std::int64_t checkpoint_stride = 1;
  std::uint64_t seed = 0;
};

struct EntropicParameters {
  double eta = 0.0;
  double eps_prime = 0.0;
  bool trivial = false;  // zero cost matrix: every feasible plan is optimal
};

/// eta = eps / (8 ln n), eps' = eps / (6 ||C||_inf).
template <typename Scalar>
EntropicParameters derive_parameters(double epsilon, Eigen::Index n,
                                     const CostMatrix<Scalar>& cost) {
  if (!(epsilon > 0.0)) throw domain_error("derive_parameters: epsilon must be positive");
  if (n < 2) throw domain_error("derive_parameters: n must be at least 2 (ln 1 = 0)");
  EntropicParameters p;
  p.eta = epsilon / (8.0 * std::log(static_cast<double>(n)));
  const double cmax = static_cast<double>(cost.max_abs());
  if (cmax > 0.0) {
    p.eps_prime = epsilon / (6.0 * cmax);
  } else {
    p.trivial = true;
  }
  return p;
}

/// b~ = (1 - eps'/8) b + eps'/(8n) 1 for both marginals.
template <typename Scalar>
std::pair<Distribution<Scalar>, Distribution<Scalar>> smooth_marginals(
    const Distribution<Scalar>& alpha, const Distribution<Scalar>& beta, double eps_prime) {
  require_same_size(alpha.size(), beta.size(), "smooth_marginals");
  if (!(eps_prime > 0.0 && eps_prime < 8.0)) {
    throw domain_error("smooth_marginals: eps' must lie in (0, 8)");
  }
  const Scalar keep = Scalar(1) - Scalar(eps_prime) / Scalar(8);
  const Scalar floor = Scalar(eps_prime) / (Scalar(8) * static_cast<Scalar>(alpha.size()));
  auto mix = [&](const Distribution<Scalar>& d) {
    return Distribution<Scalar>((keep * d.weights().array() + floor).matrix());
  };
  return {mix(alpha), mix(beta)};
}

/// N = ceil(kappa n ||C||_inf sqrt(ln n) / eps), used as the outer-iteration
/// cap so runs terminate even if the stopping rule never fires.
inline std::int64_t theoretical_iteration_cap(double epsilon, Eigen::Index n, double cost_max,
                                              double kappa = 1.0) {
  const double nn = static_cast<double>(n);
  return static_cast<std::int64_t>(
      std::ceil(kappa * nn * cost_max * std::sqrt(std::log(nn)) / epsilon));
}

inline std::int64_t inner_iterations_for(SolverProfile profile, Eigen::Index n) {
  if (profile == SolverProfile::theory) return static_cast<std::int64_t>(n);
  return std::max<std::int64_t>(
      1, std::llround(2.0 * std::sqrt(static_cast<double>(n))));
}

inline double z_step_multiplier_for(SolverProfile profile) {
  return profile == SolverProfile::theory ? 1.0 : 15.0;
}

template <typename Scalar>
struct ApproxResult {
  TransportPlan<Scalar> plan;      // rounded, feasible for the original marginals
  TransportPlan<Scalar> unrounded;  // solver output on the smoothed marginals
  Scalar ot_value = Scalar(0);
  std::vector<RunRecord> records;
  StopReason stop_reason = StopReason::converged;
  bool flagged = false;  // cap reached without the stopping rule firing
  EntropicParameters parameters;
  OperationCounts counts;
  std::uint64_t cost_units = 0;
  std::int64_t iterations = 0;   // outer loops, sweeps or coordinate updates
  double final_distance = 0.0;   // d of the unrounded plan w.r.t. the smoothed marginals
  RoundingReport rounding;
};

/// PDASGD cost model in arithmetic units: 4n per component gradient
/// (softmax + combination), 6n per inner step for the vector updates and
/// 4n^2 per primal map (n softmax rows).
inline std::uint64_t pdasgd_cost_units(const OperationCounts& c, Eigen::Index n) {
  const auto nn = static_cast<std::uint64_t>(n);
  return 4 * nn * c.component_gradients + 6 * nn * c.inner_steps + 4 * nn * nn * c.primal_maps;
}

/// Smooth the marginals, solve the entropic problem with the configured
/// solver, round back onto U(alpha, beta).
template <typename Scalar>
ApproxResult<Scalar> approx_ot(const CostMatrix<Scalar>& cost, const Distribution<Scalar>& alpha,
                               const Distribution<Scalar>& beta, const ApproxConfig& config) {
  const Eigen::Index n = cost.size();
  require_same_size(n, alpha.size(), "approx_ot row marginal");
  require_same_size(n, beta.size(), "approx_ot column marginal");

  ApproxResult<Scalar> out;
  out.parameters = derive_parameters(config.epsilon, n, cost);
  if (out.parameters.trivial) {
    out.plan = product_plan(alpha, beta);
    out.unrounded = out.plan;
    out.ot_value = Scalar(0);
    out.stop_reason = StopReason::trivial_instance;
    return out;
  }
  const auto eta = static_cast<Scalar>(out.parameters.eta);
  const double eps_prime = out.parameters.eps_prime;
  auto [alpha_s, beta_s] = smooth_marginals(alpha, beta, eps_prime);
  const bool marginal_mode = config.stop == StopCriterion::marginal_target;
  const auto target = static_cast<Scalar>(marginal_mode ? config.target_distance : eps_prime / 2.0);

  if (config.solver == SolverKind::pdasgd) {
    const SemiDualOracle<Scalar> oracle(OTInstance<Scalar>(cost, alpha_s, beta_s, eta));
    SolverOptions opts;
    opts.inner_iterations = inner_iterations_for(config.profile, n);
    opts.z_step_multiplier = z_step_multiplier_for(config.profile);
    opts.outer_iterations = config.max_outer.value_or(theoretical_iteration_cap(
        config.epsilon, n, static_cast<double>(cost.max_abs()), config.cap_constant));
    opts.seed = config.seed;
    opts.checkpoint_stride = config.checkpoint_stride;

    const double gap_target = config.epsilon / 4.0;
    auto stop = [&](const Matrix<Scalar>&, const Vector<Scalar>&, const RunRecord& rec) {
      if (marginal_mode) return rec.constraint_violation_l1 <= static_cast<double>(target);
      return rec.duality_gap <= gap_target &&
             rec.constraint_violation_l1 <= static_cast<double>(target);
    };
    const Pdasgd<SemiDualOracle<Scalar>> solver(oracle, opts);
    auto run = solver.run(stop);
    out.unrounded = TransportPlan<Scalar>(run.primal.cwiseMax(Scalar(0)));
    out.records = std::move(run.records);
    out.counts = run.counts;
    out.iterations = run.outer_iterations;
    out.cost_units = pdasgd_cost_units(run.counts, n);
    out.flagged = !run.stopped;
  } else {
    auto run = config.solver == SolverKind::sinkhorn
                   ? sinkhorn(cost, alpha_s, beta_s, eta, target, config.baseline_max_iter)
                   : greenkhorn(cost, alpha_s, beta_s, eta, target, config.baseline_max_iter);
    out.unrounded = std::move(run.plan);
    out.iterations = run.state.iteration;
    out.cost_units = run.cost_units;
    out.flagged = !run.converged;
  }

  out.final_distance = static_cast<double>(marginal_distance(out.unrounded, alpha_s, beta_s));
  out.stop_reason = out.flagged ? StopReason::iteration_cap
                    : marginal_mode ? StopReason::marginal_target
                                    : StopReason::converged;
  auto rounded = round_to_polytope(out.unrounded, alpha, beta);
  out.plan = std::move(rounded.plan);
  out.rounding = rounded.report;
  out.ot_value = transport_cost(out.plan, cost);
  return out;
}

}  // namespace pdasgd
