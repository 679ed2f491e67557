#pragma once

#include "pdasgd/kernels.hpp"
#include "pdasgd/ot_core.hpp"

#include <cmath>
#include <string>

namespace pdasgd {

template <typename Scalar>
using DualPoint = Vector<Scalar>;

template <typename Scalar>
struct SmoothnessConstants {
  Vector<Scalar> per_component;  // L_i w.r.t. ||.||_2
  Scalar average;                // mean of L_i
  Scalar linf;                   // smoothness of G w.r.t. ||.||_inf
};

/// Finite-sum view of the entropic OT semi-dual
///
///   G(v) = 1/n sum_i g_i(v),
///   g_i(v) = n a_i [ eta lse_j((v_j - C_ij - eta)/eta) - <b, v> - eta ln a_i + eta ],
///
/// whose minimizer recovers the entropic plan through the row-wise softmax
/// X_ij(v) = a_i softmax_j((v - C_i.)/eta). Row marginal a must be strictly
/// positive; the column marginal may contain zeros.
template <typename Scalar>
class SemiDualOracle {
 public:
  using Primal = Matrix<Scalar>;

  explicit SemiDualOracle(OTInstance<Scalar> instance) : inst_(std::move(instance)) {
    if (!(inst_.eta > Scalar(0))) throw domain_error("semi-dual oracle: eta must be positive");
    const auto& a = inst_.row_marginal.weights();
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (!(a[i] > Scalar(0))) {
        throw domain_error("semi-dual oracle: row marginal entry " + std::to_string(i) +
                           " is not strictly positive (smooth the marginals first)");
      }
    }
    log_alpha_ = a.array().log().matrix();
  }

  const OTInstance<Scalar>& instance() const { return inst_; }
  Eigen::Index size() const { return inst_.size(); }
  Eigen::Index component_count() const { return inst_.size(); }
  Eigen::Index dual_dimension() const { return inst_.size(); }
  Scalar eta() const { return inst_.eta; }
  const Vector<Scalar>& alpha() const { return inst_.row_marginal.weights(); }
  const Vector<Scalar>& beta() const { return inst_.col_marginal.weights(); }

  /// lse_j((v_j - C_ij - eta)/eta), the quantity shared by g_i and u_i.
  Scalar row_log_partition(Eigen::Index i, const DualPoint<Scalar>& v) const {
    check_index(i);
    require_same_size(v.size(), size(), "semi-dual point");
    return log_sum_exp(((v - inst_.cost.entries().row(i).transpose()).array() - inst_.eta) /
                       inst_.eta);
  }

  Scalar component_value(Eigen::Index i, const DualPoint<Scalar>& v) const {
    const Scalar n = static_cast<Scalar>(size());
    const Scalar eta = inst_.eta;
    return n * alpha()[i] *
           (eta * row_log_partition(i, v) - beta().dot(v) - eta * log_alpha_[i] + eta);
  }

  Scalar value(const DualPoint<Scalar>& v) const {
    Scalar total = Scalar(0);
    for (Eigen::Index i = 0; i < size(); ++i) total += component_value(i, v);
    return total / static_cast<Scalar>(size());
  }

  /// grad g_i(v) = n a_i (softmax((v - C_i.)/eta) - b), written into `out`
  /// without allocating.
  void component_gradient(Eigen::Index i, const DualPoint<Scalar>& v,
                          Eigen::Ref<Vector<Scalar>> out) const {
    check_index(i);
    require_same_size(v.size(), size(), "semi-dual point");
    require_same_size(out.size(), size(), "gradient buffer");
    out = (v - inst_.cost.entries().row(i).transpose()) / inst_.eta;
    softmax_inplace(out);
    out = static_cast<Scalar>(size()) * alpha()[i] * (out - beta());
  }

  Vector<Scalar> full_gradient(const DualPoint<Scalar>& v) const {
    Vector<Scalar> total = Vector<Scalar>::Zero(size());
    Vector<Scalar> buffer(size());
    for (Eigen::Index i = 0; i < size(); ++i) {
      component_gradient(i, v, buffer);
      total += buffer;
    }
    return total / static_cast<Scalar>(size());
  }

  /// Closed-form primal point x(v); row sums equal a by construction.
  Primal primal_map(const DualPoint<Scalar>& v) const {
    require_same_size(v.size(), size(), "semi-dual point");
    Primal x(size(), size());
    Vector<Scalar> row(size());
    for (Eigen::Index i = 0; i < size(); ++i) {
      row = (v - inst_.cost.entries().row(i).transpose()) / inst_.eta;
      softmax_inplace(row);
      x.row(i) = alpha()[i] * row.transpose();
    }
    return x;
  }

  TransportPlan<Scalar> primal_from_dual(const DualPoint<Scalar>& v) const {
    return TransportPlan<Scalar>(primal_map(v));
  }

  /// The eliminated dual block: u_i = eta ln a_i - eta lse_j((v_j - C_ij - eta)/eta).
  Vector<Scalar> u_from_v(const DualPoint<Scalar>& v) const {
    Vector<Scalar> u(size());
    for (Eigen::Index i = 0; i < size(); ++i) {
      u[i] = inst_.eta * log_alpha_[i] - inst_.eta * row_log_partition(i, v);
    }
    return u;
  }

  /// Two-block dual -<a,u> - <b,v> + eta sum_ij exp((u_i + v_j - C_ij - eta)/eta).
  Scalar full_dual_value(const Vector<Scalar>& u, const DualPoint<Scalar>& v) const {
    require_same_size(u.size(), size(), "dual u block");
    require_same_size(v.size(), size(), "dual v block");
    const Scalar eta = inst_.eta;
    Scalar mass = Scalar(0);
    for (Eigen::Index i = 0; i < size(); ++i) {
      mass += (((v - inst_.cost.entries().row(i).transpose()).array() + u[i] - eta) / eta)
                  .exp()
                  .sum();
    }
    return -alpha().dot(u) - beta().dot(v) + eta * mass;
  }

  SmoothnessConstants<Scalar> smoothness_constants() const {
    const Scalar n = static_cast<Scalar>(size());
    return {(n / inst_.eta) * alpha(), Scalar(1) / inst_.eta, Scalar(5) / inst_.eta};
  }

  Scalar average_smoothness() const { return Scalar(1) / inst_.eta; }

  /// p_i = L_i / (h L_avg), which reduces to a_i.
  Distribution<Scalar> sampling_weights() const {
    const auto c = smoothness_constants();
    return Distribution<Scalar>::normalized(c.per_component /
                                            (static_cast<Scalar>(size()) * c.average));
  }

  /// Entropic primal objective f(x) = <C, X> + eta sum X ln X.
  Scalar primal_objective(const Primal& x) const {
    return x.cwiseProduct(inst_.cost.entries()).sum() + inst_.eta * neg_entropy_sum(x);
  }

  /// ||A x - b||_1 against this oracle's marginals.
  Scalar constraint_violation(const Primal& x) const {
    return marginal_distance(x, alpha(), beta());
  }

  Scalar dual_value(const DualPoint<Scalar>& v) const { return value(v); }

 private:
  void check_index(Eigen::Index i) const {
    if (i < 0 || i >= size()) {
      throw dimension_error("semi-dual component index " + std::to_string(i) +
                            " out of range [0, " + std::to_string(size()) + ")");
    }
  }

  OTInstance<Scalar> inst_;
  Vector<Scalar> log_alpha_;
};

}  // namespace pdasgd
