#pragma once

#include "pdasgd/ot_core.hpp"

#include <algorithm>

namespace pdasgd {

struct RoundingReport {
  double input_marginal_gap = 0.0;  // d(F)
  double correction_mass = 0.0;     // ||err_r||_1
  double l1_change = 0.0;           // ||E - F||_1
};

template <typename Scalar>
struct RoundedPlan {
  TransportPlan<Scalar> plan;
  RoundingReport report;
};

/// Rounds a nonnegative near-coupling onto U(alpha, beta): shrink rows that
/// exceed alpha, then columns that exceed beta, then hand the missing mass
/// back through the rank-one term err_r err_c^T / ||err_r||_1. The output is
/// feasible and moves at most 2 d(F) in L1.
template <typename Scalar>
RoundedPlan<Scalar> round_to_polytope(const TransportPlan<Scalar>& input,
                                      const Distribution<Scalar>& alpha,
                                      const Distribution<Scalar>& beta) {
  const Eigen::Index n = input.size();
  require_same_size(n, alpha.size(), "round_to_polytope row marginal");
  require_same_size(n, beta.size(), "round_to_polytope column marginal");
  const auto& a = alpha.weights();
  const auto& b = beta.weights();

  // Zero rows/columns keep scale 1: there is nothing to shrink.
  auto shrink = [](Scalar target, Scalar current) {
    return current > Scalar(0) ? std::min(target / current, Scalar(1)) : Scalar(1);
  };

  Matrix<Scalar> e = input.entries();
  const Vector<Scalar> rows = e.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) e.row(i) *= shrink(a[i], rows[i]);
  const Vector<Scalar> cols = e.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < n; ++j) e.col(j) *= shrink(b[j], cols[j]);

  // Both residuals are >= 0 up to rounding dust since the steps above only
  // remove mass.
  Vector<Scalar> err_r = (a - e.rowwise().sum()).cwiseMax(Scalar(0));
  Vector<Scalar> err_c = (b - e.colwise().sum().transpose()).cwiseMax(Scalar(0));
  const Scalar correction = err_r.template lpNorm<1>();
  if (correction > Scalar(1e-15)) e.noalias() += err_r * err_c.transpose() / correction;

  RoundingReport report;
  report.input_marginal_gap = static_cast<double>(marginal_distance(input, alpha, beta));
  report.correction_mass = static_cast<double>(correction);
  report.l1_change = static_cast<double>((e - input.entries()).cwiseAbs().sum());
  return {TransportPlan<Scalar>(std::move(e)), report};
}

}  // namespace pdasgd
