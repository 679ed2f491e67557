#include "pdasgd/exact_oracle.hpp"
#include "pdasgd/ot_core.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace pdasgd;
using namespace pdasgd::testing;

namespace {

MatrixXd mat2(double a, double b, double c, double d) {
  MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

// Independent cross-oracle for n = 3: grid over (X11, X12, X21) at `step`,
// X22 at both ends of its feasible interval (the objective is linear in it),
// remaining cells from the marginal equations.
double grid_search_3x3(const MatrixXd& c, const VectorXd& a, const VectorXd& b, double step) {
  double best = std::numeric_limits<double>::infinity();
  const auto upto = [&](double hi) { return static_cast<int>(std::floor(hi / step + 1e-9)); };
  for (int i11 = 0; i11 <= upto(std::min(a[0], b[0])); ++i11) {
    const double x11 = i11 * step;
    for (int i12 = 0; i12 <= upto(std::min(a[0] - x11, b[1])); ++i12) {
      const double x12 = i12 * step;
      const double x13 = a[0] - x11 - x12;
      if (x13 < 0 || x13 > b[2]) continue;
      for (int i21 = 0; i21 <= upto(std::min(a[1], b[0] - x11)); ++i21) {
        const double x21 = i21 * step;
        const double lo = std::max(0.0, b[0] + b[1] - a[2] - x11 - x21 - x12);
        const double hi = std::min(a[1] - x21, b[1] - x12);
        if (lo > hi + 1e-15) continue;
        for (double x22 : {lo, hi}) {
          const double x23 = a[1] - x21 - x22;
          const double x31 = b[0] - x11 - x21;
          const double x32 = b[1] - x12 - x22;
          const double x33 = a[2] - x31 - x32;
          if (std::min({x23, x31, x32, x33}) < -1e-12) continue;
          const double v = c(0, 0) * x11 + c(0, 1) * x12 + c(0, 2) * x13 + c(1, 0) * x21 +
                           c(1, 1) * x22 + c(1, 2) * x23 + c(2, 0) * x31 + c(2, 1) * x32 +
                           c(2, 2) * x33;
          best = std::min(best, v);
        }
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("distribution validation") {
  CHECK_THROWS_AS(Distributiond(VectorXd::Constant(2, 0.4)), pdasgd::domain_error);
  VectorXd neg(2);
  neg << 1.5, -0.5;
  CHECK_THROWS_AS(Distributiond{neg}, pdasgd::domain_error);
  VectorXd ok(3);
  ok << 0.5, 0.5, 0.0;
  const Distributiond d(ok);
  CHECK_FALSE(d.strictly_positive());
  CHECK(Distributiond::uniform(4).strictly_positive());
  CHECK(Distributiond::normalized(VectorXd::Constant(7, 3.0)).weights().sum() ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("cost matrix caches its max entry and rejects negatives") {
  const CostMatrixd c(mat2(0, 3, 1, 2));
  CHECK(c.max_abs() == 3.0);
  CHECK_THROWS_AS(CostMatrixd(mat2(0, -1, 1, 0)), pdasgd::domain_error);
  CHECK_THROWS_AS(CostMatrixd(MatrixXd::Zero(2, 3)), dimension_error);
}

TEST_CASE("transport_cost") {
  const auto alpha = Distributiond(VectorXd::Constant(3, 1.0 / 3));
  MatrixXd zero_diag = MatrixXd::Ones(3, 3) - MatrixXd::Identity(3, 3);
  CHECK(transport_cost(TransportPland(alpha.weights().asDiagonal().toDenseMatrix()),
                       CostMatrixd(zero_diag)) == 0.0);

  MatrixXd one(1, 1);
  one << 1.0;
  MatrixXd c(1, 1);
  c << 2.5;
  CHECK(transport_cost(TransportPland(one), CostMatrixd(c)) == 2.5);

  const auto u = Distributiond::uniform(2);
  CHECK(transport_cost(product_plan(u, u), CostMatrixd(mat2(0, 1, 1, 0))) ==
        doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(transport_cost(product_plan(u, u), CostMatrixd(zero_diag)), dimension_error);
}

TEST_CASE("entropy") {
  MatrixXd point = MatrixXd::Zero(3, 3);
  point(1, 2) = 1.0;
  CHECK(entropy(TransportPland(point)) == 0.0);

  for (Eigen::Index n : {2, 5, 16}) {
    const auto u = Distributiond::uniform(n);
    CHECK(entropy(product_plan(u, u)) == doctest::Approx(2 * std::log(double(n))).epsilon(1e-13));
  }
  // -(0.8 ln 0.4 + 0.2 ln 0.1)
  CHECK(entropy(TransportPland(mat2(0.4, 0.1, 0.1, 0.4))) ==
        doctest::Approx(1.1935496040981333).epsilon(1e-12));
  CHECK_THROWS_AS(TransportPland(mat2(0.5, -0.1, 0.3, 0.3)), pdasgd::domain_error);
}

TEST_CASE("entropy stays in [0, 2 ln n] on random plans") {
  SplitMix64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.index(8));
    MatrixXd x(n, n);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    x(0, 0) += 0.1;
    x /= x.sum();
    const double h = entropy(TransportPland(x));
    CHECK(h >= 0.0);
    CHECK(h <= 2 * std::log(double(n)) + 1e-12);
  }
}

TEST_CASE("regularized_objective") {
  const auto u2 = Distributiond::uniform(2);
  MatrixXd point = MatrixXd::Zero(2, 2);
  point(0, 0) = 1.0;
  const OTInstanced diag(CostMatrixd(mat2(0, 1, 1, 0)), u2, u2, 0.3);
  CHECK(regularized_objective(TransportPland(point), diag) == 0.0);

  const auto u3 = Distributiond::uniform(3);
  const OTInstanced flat(CostMatrixd(MatrixXd::Zero(3, 3)), u3, u3, 1.0);
  CHECK(regularized_objective(product_plan(u3, u3), flat) ==
        doctest::Approx(-2 * std::log(3.0)).epsilon(1e-13));

  const OTInstanced sym(CostMatrixd(mat2(0, 1, 1, 0)), u2, u2, 1.0);
  CHECK(regularized_objective(product_plan(u2, u2), sym) ==
        doctest::Approx(0.5 - 2 * std::log(2.0)).epsilon(1e-13));

  const OTInstanced unregularized(CostMatrixd(mat2(0, 1, 1, 0)), u2, u2, 0.0);
  CHECK_THROWS_AS(regularized_objective(product_plan(u2, u2), unregularized),
                  pdasgd::domain_error);
}

TEST_CASE("marginal_distance") {
  const auto u = Distributiond::uniform(2);
  CHECK(marginal_distance(TransportPland(mat2(0.5, 0, 0, 0.5)), u, u) == 0.0);
  CHECK(marginal_distance(TransportPland(mat2(0.4, 0.2, 0.1, 0.3)), u, u) ==
        doctest::Approx(0.2).epsilon(1e-14));

  SplitMix64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_distribution(rng, 6), b = random_distribution(rng, 6);
    CHECK(marginal_distance(product_plan(a, b), a, b) < 1e-15);
  }
}

TEST_CASE("exact oracle: closed-form 2x2 and identity coupling") {
  VectorXd a(2), b(2);
  a << 0.3, 0.7;
  b << 0.6, 0.4;
  const auto sol = exact_ot_oracle(CostMatrixd(mat2(0, 1, 1, 0)), Distributiond(a), Distributiond(b));
  CHECK(sol.value == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(max_abs_diff(sol.plan.entries(), mat2(0.3, 0, 0.3, 0.4)) < 1e-14);

  SplitMix64 rng(17);
  for (Eigen::Index n : {2, 3, 4, 5}) {
    const auto d = random_distribution(rng, n);
    MatrixXd c = MatrixXd::Ones(n, n) - MatrixXd::Identity(n, n);
    const auto id = exact_ot_oracle(CostMatrixd(c), d, d);
    CHECK(id.value == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(marginal_distance(id.plan, d, d) < 1e-10);
  }
}

TEST_CASE("exact oracle matches a grid-search cross-oracle on n = 3") {
  SplitMix64 rng(23);
  for (int trial = 0; trial < 3; ++trial) {
    const auto c = random_cost(rng, 3);
    const auto a = random_distribution(rng, 3, 0.3), b = random_distribution(rng, 3, 0.3);
    const auto exact = exact_ot_oracle(c, a, b);
    const double grid = grid_search_3x3(c.entries(), a.weights(), b.weights(), 1e-3);
    CHECK(marginal_distance(exact.plan, a, b) < 1e-10);
    CHECK(grid >= exact.value - 1e-12);
    CHECK(grid - exact.value <= 2e-3);
  }
}

TEST_CASE("exact oracle invariances") {
  SplitMix64 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.index(3));
    const auto c = random_cost(rng, n);
    const auto a = random_distribution(rng, n), b = random_distribution(rng, n);
    const double base = exact_ot_oracle(c, a, b).value;

    // Simultaneous permutation of rows (with a) and columns (with b).
    std::vector<int> pr(static_cast<std::size_t>(n)), pc(pr.size());
    std::iota(pr.begin(), pr.end(), 0);
    std::iota(pc.begin(), pc.end(), 0);
    std::shuffle(pr.begin(), pr.end(), rng);
    std::shuffle(pc.begin(), pc.end(), rng);
    MatrixXd cp(n, n);
    VectorXd ap(n), bp(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      ap[i] = a[pr[static_cast<std::size_t>(i)]];
      bp[i] = b[pc[static_cast<std::size_t>(i)]];
      for (Eigen::Index j = 0; j < n; ++j) {
        cp(i, j) = c(pr[static_cast<std::size_t>(i)], pc[static_cast<std::size_t>(j)]);
      }
    }
    CHECK(exact_ot_oracle(CostMatrixd(cp), Distributiond(ap), Distributiond(bp)).value ==
          doctest::Approx(base).epsilon(1e-12));

    const double k = rng.uniform(0.0, 3.0);
    const MatrixXd shifted = c.entries().array() + k;
    CHECK(exact_ot_oracle(CostMatrixd(shifted), a, b).value ==
          doctest::Approx(base + k).epsilon(1e-12));
  }
}

TEST_CASE("exact oracle errors") {
  SplitMix64 rng(1);
  const auto big = Distributiond::uniform(6);
  CHECK_THROWS_AS(exact_ot_oracle(random_cost(rng, 6), big, big), dimension_error);
  const auto d3 = Distributiond::uniform(3);
  CHECK_THROWS_AS(exact_ot_oracle(random_cost(rng, 2), d3, d3), dimension_error);
}
