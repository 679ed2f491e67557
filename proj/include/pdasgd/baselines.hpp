#pragma once

#include "pdasgd/kernels.hpp"
#include "pdasgd/ot_core.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

namespace pdasgd {

/// Log-domain scaling variables: P_ij = exp(log_u_i + log_v_j + log_kernel_ij).
template <typename Scalar>
struct ScalingState {
  Vector<Scalar> log_u, log_v;
  Matrix<Scalar> log_kernel;  // -C / eta
  std::int64_t iteration = 0;

  Matrix<Scalar> plan() const {
    return ((log_kernel.colwise() + log_u).rowwise() + log_v.transpose()).array().exp().matrix();
  }
};

template <typename Scalar>
struct ScalingResult {
  TransportPlan<Scalar> plan;
  ScalingState<Scalar> state;
  bool converged = false;
  double marginal_gap = 0.0;
  std::uint64_t cost_units = 0;
};

namespace detail {

template <typename Scalar>
void check_scaling_inputs(const CostMatrix<Scalar>& cost, const Distribution<Scalar>& alpha,
                          const Distribution<Scalar>& beta, Scalar eta) {
  require_same_size(cost.size(), alpha.size(), "scaling row marginal");
  require_same_size(cost.size(), beta.size(), "scaling column marginal");
  if (!(eta > Scalar(0))) throw domain_error("scaling: eta must be positive");
  if (!alpha.strictly_positive() || !beta.strictly_positive()) {
    throw domain_error("scaling: marginals must be strictly positive");
  }
}

template <typename Scalar>
ScalingState<Scalar> initial_scaling(const CostMatrix<Scalar>& cost, Scalar eta) {
  ScalingState<Scalar> st;
  st.log_kernel = -cost.entries() / eta;
  st.log_u = Vector<Scalar>::Zero(cost.size());
  st.log_v = Vector<Scalar>::Zero(cost.size());
  return st;
}

// log_u_i = ln a_i - lse_j(log_v_j + log_kernel_ij); row i then sums to a_i.
template <typename Scalar>
void scale_row(ScalingState<Scalar>& st, Eigen::Index i, const Vector<Scalar>& log_a) {
  st.log_u[i] = log_a[i] - log_sum_exp((st.log_kernel.row(i).transpose() + st.log_v).array());
}

template <typename Scalar>
void scale_col(ScalingState<Scalar>& st, Eigen::Index j, const Vector<Scalar>& log_b) {
  st.log_v[j] = log_b[j] - log_sum_exp((st.log_kernel.col(j) + st.log_u).array());
}

}  // namespace detail

/// Sinkhorn-Knopp in the log domain: alternating exact row and column
/// scalings of exp(-C/eta) until d(P) <= tol. One sweep costs 2n^2 units.
template <typename Scalar>
ScalingResult<Scalar> sinkhorn(const CostMatrix<Scalar>& cost, const Distribution<Scalar>& alpha,
                               const Distribution<Scalar>& beta, Scalar eta, Scalar tol_marginal,
                               std::int64_t max_iter) {
  detail::check_scaling_inputs(cost, alpha, beta, eta);
  const Eigen::Index n = cost.size();
  const Vector<Scalar> log_a = alpha.weights().array().log().matrix();
  const Vector<Scalar> log_b = beta.weights().array().log().matrix();
  auto st = detail::initial_scaling(cost, eta);
  ScalingResult<Scalar> out;
  Matrix<Scalar> p;
  Scalar gap = std::numeric_limits<Scalar>::infinity();
  while (st.iteration < max_iter) {
    for (Eigen::Index i = 0; i < n; ++i) detail::scale_row(st, i, log_a);
    for (Eigen::Index j = 0; j < n; ++j) detail::scale_col(st, j, log_b);
    ++st.iteration;
    out.cost_units += static_cast<std::uint64_t>(2 * n * n);
    p = st.plan();
    gap = marginal_distance(p, alpha.weights(), beta.weights());
    if (gap <= tol_marginal) {
      out.converged = true;
      break;
    }
  }
  if (p.size() == 0) p = st.plan();
  out.marginal_gap = static_cast<double>(gap);
  out.plan = TransportPlan<Scalar>(std::move(p));
  out.state = std::move(st);
  return out;
}

/// Greenkhorn: greedy single row/column scaling. Each step rescales the row
/// or column with the largest violation rho(t, s) = s - t + t ln(t/s) and
/// costs 3n units. Rows are scaled once up front (n^2 units) so that no row
/// starts with underflowed mass.
template <typename Scalar>
ScalingResult<Scalar> greenkhorn(const CostMatrix<Scalar>& cost,
                                 const Distribution<Scalar>& alpha,
                                 const Distribution<Scalar>& beta, Scalar eta,
                                 Scalar tol_marginal, std::int64_t max_iter) {
  detail::check_scaling_inputs(cost, alpha, beta, eta);
  const Eigen::Index n = cost.size();
  const auto& a = alpha.weights();
  const auto& b = beta.weights();
  const Vector<Scalar> log_a = a.array().log().matrix();
  const Vector<Scalar> log_b = b.array().log().matrix();
  auto st = detail::initial_scaling(cost, eta);
  ScalingResult<Scalar> out;

  for (Eigen::Index i = 0; i < n; ++i) detail::scale_row(st, i, log_a);
  out.cost_units += static_cast<std::uint64_t>(n * n);

  Vector<Scalar> r, c;
  auto refresh = [&] {
    const Matrix<Scalar> p = st.plan();
    r = p.rowwise().sum();
    c = p.colwise().sum().transpose();
  };
  refresh();

  auto violation = [](Scalar target, Scalar current) {
    if (!(current > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
    return current - target + target * std::log(target / current);
  };
  auto tracked_gap = [&] { return (r - a).template lpNorm<1>() + (c - b).template lpNorm<1>(); };

  Scalar gap = tracked_gap();
  while (true) {
    if (gap <= tol_marginal) {
      // Incremental sums drift; confirm on exact sums before stopping.
      refresh();
      gap = tracked_gap();
      if (gap <= tol_marginal) {
        out.converged = true;
        break;
      }
    }
    if (st.iteration >= max_iter) break;

    Eigen::Index best_row = 0, best_col = 0;
    Scalar row_score = -std::numeric_limits<Scalar>::infinity();
    Scalar col_score = row_score;
    for (Eigen::Index k = 0; k < n; ++k) {
      const Scalar rs = violation(a[k], r[k]);
      if (rs > row_score) row_score = rs, best_row = k;
      const Scalar cs = violation(b[k], c[k]);
      if (cs > col_score) col_score = cs, best_col = k;
    }

    if (row_score >= col_score) {
      const Eigen::Index i = best_row;
      const Scalar old_u = st.log_u[i];
      detail::scale_row(st, i, log_a);
      for (Eigen::Index j = 0; j < n; ++j) {
        const Scalar base = st.log_v[j] + st.log_kernel(i, j);
        c[j] += std::exp(st.log_u[i] + base) - std::exp(old_u + base);
      }
      r[i] = a[i];
    } else {
      const Eigen::Index j = best_col;
      const Scalar old_v = st.log_v[j];
      detail::scale_col(st, j, log_b);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar base = st.log_u[i] + st.log_kernel(i, j);
        r[i] += std::exp(st.log_v[j] + base) - std::exp(old_v + base);
      }
      c[j] = b[j];
    }
    ++st.iteration;
    out.cost_units += static_cast<std::uint64_t>(3 * n);
    gap = tracked_gap();
  }

  Matrix<Scalar> p = st.plan();
  out.marginal_gap = static_cast<double>(marginal_distance(p, a, b));
  out.plan = TransportPlan<Scalar>(std::move(p));
  out.state = std::move(st);
  return out;
}

}  // namespace pdasgd
