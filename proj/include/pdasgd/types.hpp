#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace pdasgd {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Plans and costs are dense and row-major so that row i of the semi-dual
// (one component function) is a contiguous slice.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

struct dimension_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

inline void require_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw dimension_error(std::string(what) + ": size " + std::to_string(a) +
                          " does not match " + std::to_string(b));
  }
}

/// Probability vector on the simplex. Construction validates nonnegativity
/// and unit mass (1e-12 absolute).
template <typename Scalar>
class Distribution {
 public:
  static constexpr Scalar kMassTolerance = Scalar(1e-12);

  Distribution() = default;

  explicit Distribution(Vector<Scalar> weights) : weights_(std::move(weights)) {
    if (weights_.size() == 0) throw dimension_error("distribution: empty weight vector");
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      if (!std::isfinite(weights_[i]) || weights_[i] < Scalar(0)) {
        throw domain_error("distribution: entry " + std::to_string(i) +
                           " is negative or non-finite");
      }
    }
    const Scalar mass = weights_.sum();
    if (std::abs(mass - Scalar(1)) > kMassTolerance) {
      throw domain_error("distribution: weights sum to " + std::to_string(mass) + ", expected 1");
    }
  }

  /// Normalizes arbitrary nonnegative mass to a distribution.
  static Distribution normalized(const Vector<Scalar>& mass) {
    const Scalar total = mass.sum();
    if (!(total > Scalar(0))) throw domain_error("distribution: total mass must be positive");
    Vector<Scalar> w = mass / total;
    // Push the rounding residual into the largest entry so the sum is 1 to
    // within one ulp-scale error.
    Eigen::Index imax = 0;
    w.maxCoeff(&imax);
    w[imax] += Scalar(1) - w.sum();
    return Distribution(std::move(w));
  }

  static Distribution uniform(Eigen::Index n) {
    return Distribution(Vector<Scalar>::Constant(n, Scalar(1) / Scalar(n)));
  }

  Eigen::Index size() const { return weights_.size(); }
  const Vector<Scalar>& weights() const { return weights_; }
  Scalar operator[](Eigen::Index i) const { return weights_[i]; }
  bool strictly_positive() const { return weights_.minCoeff() > Scalar(0); }

 private:
  Vector<Scalar> weights_;
};

/// Square nonnegative cost matrix with its max entry cached.
template <typename Scalar>
class CostMatrix {
 public:
  CostMatrix() = default;

  explicit CostMatrix(Matrix<Scalar> entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
      throw dimension_error("cost matrix must be square and nonempty");
    }
    if (!entries_.allFinite()) throw domain_error("cost matrix has non-finite entries");
    if (entries_.minCoeff() < Scalar(0)) throw domain_error("cost matrix has negative entries");
    max_abs_ = entries_.maxCoeff();
  }

  Eigen::Index size() const { return entries_.rows(); }
  const Matrix<Scalar>& entries() const { return entries_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
  Scalar max_abs() const { return max_abs_; }

 private:
  Matrix<Scalar> entries_;
  Scalar max_abs_ = Scalar(0);
};

/// Nonnegative n×n coupling. Feasibility is not enforced here; see
/// marginal_distance().
template <typename Scalar>
class TransportPlan {
 public:
  TransportPlan() = default;

  explicit TransportPlan(Matrix<Scalar> entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols()) throw dimension_error("transport plan must be square");
    if (!entries_.allFinite()) throw domain_error("transport plan has non-finite entries");
    if (entries_.size() > 0 && entries_.minCoeff() < Scalar(0)) {
      throw domain_error("transport plan has negative entries");
    }
  }

  Eigen::Index size() const { return entries_.rows(); }
  const Matrix<Scalar>& entries() const { return entries_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
  Vector<Scalar> row_sums() const { return entries_.rowwise().sum(); }
  Vector<Scalar> col_sums() const { return entries_.colwise().sum().transpose(); }
  Scalar mass() const { return entries_.sum(); }

 private:
  Matrix<Scalar> entries_;
};

/// Cost, marginals and entropic penalty. eta may be 0 for the unregularized
/// problem; entropic operations reject it.
template <typename Scalar>
struct OTInstance {
  CostMatrix<Scalar> cost;
  Distribution<Scalar> row_marginal;
  Distribution<Scalar> col_marginal;
  Scalar eta = Scalar(1);

  OTInstance() = default;
  OTInstance(CostMatrix<Scalar> c, Distribution<Scalar> alpha, Distribution<Scalar> beta,
             Scalar entropic_penalty)
      : cost(std::move(c)),
        row_marginal(std::move(alpha)),
        col_marginal(std::move(beta)),
        eta(entropic_penalty) {
    require_same_size(cost.size(), row_marginal.size(), "instance row marginal");
    require_same_size(cost.size(), col_marginal.size(), "instance column marginal");
    if (!(eta >= Scalar(0))) throw domain_error("instance: eta must be nonnegative");
  }

  Eigen::Index size() const { return cost.size(); }
};

using Distributiond = Distribution<double>;
using CostMatrixd = CostMatrix<double>;
using TransportPland = TransportPlan<double>;
using OTInstanced = OTInstance<double>;

}  // namespace pdasgd
