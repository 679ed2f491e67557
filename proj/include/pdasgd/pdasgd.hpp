#pragma once

#include "pdasgd/rng.hpp"
#include "pdasgd/types.hpp"

#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdasgd {

/// Dual objective phi(l) = 1/h sum_i phi_i(l) with a primal map x(l)
/// satisfying grad phi(l) = A x(l) - b. primal_objective, constraint_violation
/// and dual_value feed checkpoint telemetry only.
template <typename O>
concept FiniteSumOracle = requires(const O& o, Eigen::Index i, const typename O::Primal& x,
                                   const Vector<typename O::Primal::Scalar>& l,
                                   Eigen::Ref<Vector<typename O::Primal::Scalar>> out) {
  typename O::Primal;
  { o.component_count() } -> std::convertible_to<Eigen::Index>;
  { o.dual_dimension() } -> std::convertible_to<Eigen::Index>;
  o.component_gradient(i, l, out);
  { o.full_gradient(l) } -> std::convertible_to<Vector<typename O::Primal::Scalar>>;
  o.sampling_weights();
  { o.average_smoothness() } -> std::convertible_to<typename O::Primal::Scalar>;
  { o.primal_map(l) } -> std::convertible_to<typename O::Primal>;
  { o.primal_objective(x) } -> std::convertible_to<typename O::Primal::Scalar>;
  { o.constraint_violation(x) } -> std::convertible_to<typename O::Primal::Scalar>;
  { o.dual_value(l) } -> std::convertible_to<typename O::Primal::Scalar>;
};

struct divergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kTau2 = 0.5;

/// Momentum weight on the mirror iterate z in outer loop s: 2/(s+4).
inline double tau1(std::int64_t s) {
  if (s < 0) throw std::invalid_argument("tau1: outer index must be nonnegative");
  return 2.0 / static_cast<double>(s + 4);
}

/// Mirror step 1/(9 tau1 L) = (s+4)/(18 L).
inline double gamma(std::int64_t s, double average_smoothness) {
  if (!(average_smoothness > 0.0)) {
    throw std::invalid_argument("gamma: average smoothness must be positive");
  }
  return 1.0 / (9.0 * tau1(s) * average_smoothness);
}

/// sum_{t<S} 1/tau1(t) = (S^2 + 7S)/4.
inline double primal_weight_total(std::int64_t outer) {
  return static_cast<double>(outer * outer + 7 * outer) / 4.0;
}

struct SolverOptions {
  std::int64_t inner_iterations = 1;  // m
  std::int64_t outer_iterations = 1;  // S
  std::uint64_t seed = 0;
  double z_step_multiplier = 1.0;
  std::int64_t checkpoint_stride = 1;
  std::optional<VectorXd> initial_dual;

  void validate() const {
    if (inner_iterations < 1) throw std::invalid_argument("solver: inner_iterations must be >= 1");
    if (outer_iterations < 1) throw std::invalid_argument("solver: outer_iterations must be >= 1");
    if (checkpoint_stride < 1) throw std::invalid_argument("solver: checkpoint_stride must be >= 1");
    if (!(z_step_multiplier > 0.0)) {
      throw std::invalid_argument("solver: z_step_multiplier must be positive");
    }
  }
};

struct OperationCounts {
  std::uint64_t component_gradients = 0;  // inner-step pairs count once
  std::uint64_t full_gradients = 0;
  std::uint64_t inner_steps = 0;
  std::uint64_t primal_maps = 0;
};

struct RunRecord {
  std::int64_t outer_index = 0;
  std::uint64_t cumulative_component_gradients = 0;
  std::uint64_t cumulative_full_gradients = 0;
  double primal_objective = 0.0;
  double constraint_violation_l1 = 0.0;
  double duality_gap = 0.0;
};

template <typename Scalar, typename Primal>
struct SolverState {
  Vector<Scalar> y, z, lambda_tilde, lambda_cur;
  Vector<Scalar> full_grad_snapshot;
  // Column i holds grad phi_i(lambda_tilde); filled with the snapshot so the
  // anchor half of each variance-reduced pair is free.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> anchor_gradients;
  Primal weighted_primal;  // D
  Scalar weight_total = Scalar(0);  // Ccoef
  std::int64_t s = 0;
  SplitMix64 rng{0};
  OperationCounts counts;

  // Per-outer-loop scratch.
  Vector<Scalar> y_sum, lambda_hat, grad_buffer, estimate;
  std::int64_t inner_index = 0;
  std::int64_t selected_inner = 0;

  Primal averaged_primal() const { return weighted_primal / weight_total; }
};

namespace detail {

template <typename Derived>
void ensure_finite(const Eigen::MatrixBase<Derived>& v, const char* name, std::int64_t s,
                   std::int64_t k) {
  if (!v.allFinite()) {
    std::ostringstream msg;
    msg << "pdasgd diverged: non-finite entry in " << name << " at outer " << s << ", inner "
        << k;
    throw divergence_error(msg.str());
  }
}

}  // namespace detail

/// Primal-dual accelerated stochastic gradient descent with SVRG-style
/// variance reduction and Katyusha momentum, over any FiniteSumOracle.
template <FiniteSumOracle Oracle>
class Pdasgd {
 public:
  using Primal = typename Oracle::Primal;
  using Scalar = typename Primal::Scalar;
  using State = SolverState<Scalar, Primal>;
  using StoppingRule = std::function<bool(const Primal& x, const Vector<Scalar>& dual,
                                          const RunRecord& record)>;

  struct Result {
    Primal primal;
    Vector<Scalar> dual;
    std::vector<RunRecord> records;
    OperationCounts counts;
    bool stopped = false;  // stopping rule fired before S
    std::int64_t outer_iterations = 0;
  };

  Pdasgd(const Oracle& oracle, SolverOptions options)
      : oracle_(oracle), options_(std::move(options)) {
    options_.validate();
    const auto p = oracle_.sampling_weights();
    probabilities_ = p.weights();
    sampler_ = CategoricalSampler(probabilities_);
    if (static_cast<Eigen::Index>(sampler_.size()) != oracle_.component_count()) {
      throw dimension_error("pdasgd: sampling weights do not match component count");
    }
    average_smoothness_ = oracle_.average_smoothness();
  }

  const SolverOptions& options() const { return options_; }
  const Vector<Scalar>& probabilities() const { return probabilities_; }

  /// All sequences start at the configured initial dual (zero by default).
  State initial_state(Eigen::Index dual_dim) const {
    State st;
    const Vector<Scalar> start = options_.initial_dual
                                     ? options_.initial_dual->template cast<Scalar>().eval()
                                     : Vector<Scalar>::Zero(dual_dim).eval();
    require_same_size(start.size(), dual_dim, "pdasgd initial dual");
    st.y = st.z = st.lambda_tilde = st.lambda_cur = start;
    st.full_grad_snapshot = Vector<Scalar>::Zero(dual_dim);
    st.anchor_gradients.setZero(dual_dim, oracle_.component_count());
    st.weighted_primal = oracle_.primal_map(start) * Scalar(0);
    st.rng = SplitMix64(options_.seed);
    st.y_sum = st.lambda_hat = st.grad_buffer = st.estimate = Vector<Scalar>::Zero(dual_dim);
    return st;
  }

  /// u = grad phi(lambda_tilde), assembled from the h component gradients.
  void take_snapshot(State& st) const {
    const Eigen::Index h = oracle_.component_count();
    for (Eigen::Index i = 0; i < h; ++i) {
      oracle_.component_gradient(i, st.lambda_tilde, st.anchor_gradients.col(i));
    }
    st.full_grad_snapshot = st.anchor_gradients.rowwise().sum() / static_cast<Scalar>(h);
    st.counts.component_gradients += static_cast<std::uint64_t>(h);
    ++st.counts.full_gradients;
    detail::ensure_finite(st.full_grad_snapshot, "full gradient snapshot", st.s, 0);
  }

  /// u + (grad phi_i(l) - grad phi_i(lambda_tilde)) / (h p_i) into st.estimate.
  void variance_reduced_gradient(State& st, Eigen::Index i, const Vector<Scalar>& l) const {
    oracle_.component_gradient(i, l, st.grad_buffer);
    const Scalar scale =
        Scalar(1) / (static_cast<Scalar>(oracle_.component_count()) * probabilities_[i]);
    st.estimate = st.full_grad_snapshot + scale * (st.grad_buffer - st.anchor_gradients.col(i));
  }

  /// One inner iteration: momentum mix, sampled variance-reduced gradient,
  /// mirror step on z, gradient step on y.
  void inner_step(State& st) const {
    const Scalar t1 = static_cast<Scalar>(tau1(st.s));
    const Scalar t2 = static_cast<Scalar>(kTau2);
    const Scalar step = static_cast<Scalar>(gamma(st.s, static_cast<double>(average_smoothness_)));
    st.lambda_cur = t1 * st.z + t2 * st.lambda_tilde + (Scalar(1) - t1 - t2) * st.y;

    const auto i = static_cast<Eigen::Index>(sampler_.draw(st.rng));
    variance_reduced_gradient(st, i, st.lambda_cur);

    st.z -= static_cast<Scalar>(options_.z_step_multiplier) * step * st.estimate / Scalar(2);
    st.y = st.lambda_cur - st.estimate / (Scalar(9) * average_smoothness_);

    ++st.counts.component_gradients;
    ++st.counts.inner_steps;
    if (st.inner_index == st.selected_inner) st.lambda_hat = st.lambda_cur;
    st.y_sum += st.y;
    ++st.inner_index;
    detail::ensure_finite(st.z, "z", st.s, st.inner_index);
    detail::ensure_finite(st.y, "y", st.s, st.inner_index);
  }

  /// Snapshot, m inner steps, anchor update, and primal accumulation
  /// D += x(lambda_hat)/tau1, C += 1/tau1.
  void outer_iteration(State& st) const {
    const std::int64_t m = options_.inner_iterations;
    take_snapshot(st);
    // The lambda fed to the primal map is chosen uniformly among the m inner
    // iterates; drawing its index up front lets us keep a single copy.
    st.selected_inner = static_cast<std::int64_t>(st.rng.index(static_cast<std::size_t>(m)));
    st.inner_index = 0;
    st.y_sum.setZero();
    for (std::int64_t j = 0; j < m; ++j) inner_step(st);
    st.lambda_tilde = st.y_sum / static_cast<Scalar>(m);

    const Scalar t1 = static_cast<Scalar>(tau1(st.s));
    st.weighted_primal += oracle_.primal_map(st.lambda_hat) / t1;
    st.weight_total += Scalar(1) / t1;
    ++st.counts.primal_maps;
    ++st.s;
  }

  RunRecord make_record(const State& st, const Primal& x) const {
    RunRecord r;
    r.outer_index = st.s;
    r.cumulative_component_gradients = st.counts.component_gradients;
    r.cumulative_full_gradients = st.counts.full_gradients;
    r.primal_objective = static_cast<double>(oracle_.primal_objective(x));
    r.constraint_violation_l1 = static_cast<double>(oracle_.constraint_violation(x));
    r.duality_gap =
        r.primal_objective + static_cast<double>(oracle_.dual_value(st.lambda_tilde));
    return r;
  }

  /// Runs until S outer iterations or until `stop` fires at a checkpoint.
  Result run(const StoppingRule& stop = {}) const {
    State st = initial_state(dual_dimension());
    Result result;
    while (st.s < options_.outer_iterations) {
      outer_iteration(st);
      const bool checkpoint =
          st.s % options_.checkpoint_stride == 0 || st.s == options_.outer_iterations;
      if (!checkpoint) continue;
      Primal x = st.averaged_primal();
      result.records.push_back(make_record(st, x));
      if (stop && stop(x, st.lambda_tilde, result.records.back())) {
        result.stopped = true;
        break;
      }
    }
    result.primal = st.averaged_primal();
    result.dual = st.lambda_tilde;
    result.counts = st.counts;
    result.outer_iterations = st.s;
    return result;
  }

  Eigen::Index dual_dimension() const {
    if (options_.initial_dual) return options_.initial_dual->size();
    return oracle_.dual_dimension();
  }

 private:
  const Oracle& oracle_;
  SolverOptions options_;
  Vector<Scalar> probabilities_;
  CategoricalSampler sampler_;
  Scalar average_smoothness_;
};

}  // namespace pdasgd
