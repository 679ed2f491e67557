#pragma once

#include <Eigen/Core>

#include <cmath>

namespace pdasgd {

/// log(sum_j exp(x_j)) with max-subtraction.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = x.maxCoeff();
  return top + std::log((x.derived().array() - top).exp().sum());
}

/// In-place softmax; returns log_sum_exp of the input.
template <typename Derived>
typename Derived::Scalar softmax_inplace(Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar top = x.maxCoeff();
  x = (x.derived().array() - top).exp();
  const Scalar total = x.sum();
  x /= total;
  return top + std::log(total);
}

}  // namespace pdasgd
