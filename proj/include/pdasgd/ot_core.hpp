#pragma once

#include "pdasgd/types.hpp"

#include <cmath>

namespace pdasgd {

/// <C, X> = sum_ij C_ij X_ij.
template <typename Scalar>
Scalar transport_cost(const TransportPlan<Scalar>& plan, const CostMatrix<Scalar>& cost) {
  require_same_size(plan.size(), cost.size(), "transport_cost");
  return plan.entries().cwiseProduct(cost.entries()).sum();
}

/// sum x ln x over a dense block, with 0 ln 0 = 0.
template <typename Derived>
typename Derived::Scalar neg_entropy_sum(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) { return v > Scalar(0) ? v * std::log(v) : Scalar(0); }).sum();
}

/// Shannon entropy H(X) = -sum X_ij ln X_ij.
template <typename Scalar>
Scalar entropy(const TransportPlan<Scalar>& plan) {
  // TransportPlan already rejects negative entries on construction.
  return -neg_entropy_sum(plan.entries());
}

/// <C, X> - eta H(X), the entropic primal objective.
template <typename Scalar>
Scalar regularized_objective(const TransportPlan<Scalar>& plan, const OTInstance<Scalar>& inst) {
  if (!(inst.eta > Scalar(0))) throw domain_error("regularized_objective: eta must be positive");
  require_same_size(plan.size(), inst.size(), "regularized_objective");
  return transport_cost(plan, inst.cost) + inst.eta * neg_entropy_sum(plan.entries());
}

template <typename Derived, typename Scalar>
Scalar marginal_distance(const Eigen::MatrixBase<Derived>& x, const Vector<Scalar>& alpha,
                         const Vector<Scalar>& beta) {
  require_same_size(x.rows(), alpha.size(), "marginal_distance rows");
  require_same_size(x.cols(), beta.size(), "marginal_distance cols");
  return (x.rowwise().sum() - alpha).template lpNorm<1>() +
         (x.colwise().sum().transpose() - beta).template lpNorm<1>();
}

/// ||r(X) - alpha||_1 + ||c(X) - beta||_1; zero iff X lies in U(alpha, beta)
/// (given X >= 0).
template <typename Scalar>
Scalar marginal_distance(const TransportPlan<Scalar>& plan, const Distribution<Scalar>& alpha,
                         const Distribution<Scalar>& beta) {
  return marginal_distance(plan.entries(), alpha.weights(), beta.weights());
}

/// The independent coupling alpha beta^T.
template <typename Scalar>
TransportPlan<Scalar> product_plan(const Distribution<Scalar>& alpha,
                                   const Distribution<Scalar>& beta) {
  return TransportPlan<Scalar>(alpha.weights() * beta.weights().transpose());
}

}  // namespace pdasgd
