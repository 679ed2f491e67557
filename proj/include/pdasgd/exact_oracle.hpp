#pragma once

#include "pdasgd/ot_core.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace pdasgd {

template <typename Scalar>
struct ExactSolution {
  TransportPlan<Scalar> plan;
  Scalar value;
};

inline constexpr Eigen::Index kExactOracleMaxSize = 5;

namespace detail {

// Solves the marginal equations on a support of 2n-1 cells when the support
// is a spanning tree of the bipartite row/column graph. Returns false on a
// cycle (singular system) or a solution with a negative entry.
template <typename Scalar>
bool solve_tree_support(const std::vector<int>& cells, Eigen::Index n,
                        const Vector<Scalar>& alpha, const Vector<Scalar>& beta,
                        std::vector<Scalar>& values, std::vector<Scalar>& residual,
                        std::vector<int>& degree, std::vector<char>& used) {
  const auto nodes = static_cast<std::size_t>(2 * n);
  residual.assign(nodes, Scalar(0));
  degree.assign(nodes, 0);
  used.assign(cells.size(), 0);
  values.assign(cells.size(), Scalar(0));
  for (Eigen::Index i = 0; i < n; ++i) {
    residual[static_cast<std::size_t>(i)] = alpha[i];
    residual[static_cast<std::size_t>(n + i)] = beta[i];
  }
  for (int c : cells) {
    ++degree[static_cast<std::size_t>(c / n)];
    ++degree[static_cast<std::size_t>(n + c % n)];
  }
  for (std::size_t v = 0; v < nodes; ++v) {
    if (degree[v] == 0) return false;
  }
  std::size_t assigned = 0;
  bool progress = true;
  while (assigned < cells.size() && progress) {
    progress = false;
    for (std::size_t v = 0; v < nodes; ++v) {
      if (degree[v] != 1) continue;
      for (std::size_t e = 0; e < cells.size(); ++e) {
        if (used[e]) continue;
        const auto row = static_cast<std::size_t>(cells[e] / n);
        const auto col = static_cast<std::size_t>(n + cells[e] % n);
        if (row != v && col != v) continue;
        const std::size_t other = row == v ? col : row;
        values[e] = residual[v];
        residual[other] -= residual[v];
        residual[v] = Scalar(0);
        used[e] = 1;
        --degree[row];
        --degree[col];
        ++assigned;
        progress = true;
        break;
      }
    }
  }
  if (assigned < cells.size()) return false;
  constexpr Scalar kNegTol = Scalar(1e-12);
  for (Scalar& v : values) {
    if (v < -kNegTol) return false;
    v = std::max(v, Scalar(0));
  }
  return true;
}

}  // namespace detail

/// Exact minimizer of <C, X> over U(alpha, beta) by enumerating every basis
/// (spanning-tree support of 2n-1 cells) of the transportation polytope.
/// Degenerate vertices with smaller supports appear as bases with zero
/// entries. Ties keep the lexicographically first support. n <= 5.
template <typename Scalar>
ExactSolution<Scalar> exact_ot_oracle(const CostMatrix<Scalar>& cost,
                                      const Distribution<Scalar>& alpha,
                                      const Distribution<Scalar>& beta) {
  const Eigen::Index n = cost.size();
  require_same_size(n, alpha.size(), "exact_ot_oracle row marginal");
  require_same_size(n, beta.size(), "exact_ot_oracle column marginal");
  if (n > kExactOracleMaxSize) {
    throw dimension_error("exact_ot_oracle: n = " + std::to_string(n) +
                          " exceeds the enumeration budget of " +
                          std::to_string(kExactOracleMaxSize));
  }
  if (std::abs(alpha.weights().sum() - beta.weights().sum()) > Scalar(1e-12)) {
    throw domain_error("exact_ot_oracle: marginals carry different mass");
  }

  const int cells_total = static_cast<int>(n * n);
  const int support = static_cast<int>(2 * n - 1);
  std::vector<int> cells(static_cast<std::size_t>(support));
  for (int k = 0; k < support; ++k) cells[static_cast<std::size_t>(k)] = k;

  std::vector<Scalar> values, residual, best_values;
  std::vector<int> degree, best_cells;
  std::vector<char> used;
  Scalar best = std::numeric_limits<Scalar>::infinity();

  while (true) {
    if (detail::solve_tree_support(cells, n, alpha.weights(), beta.weights(), values, residual,
                                   degree, used)) {
      Scalar value = Scalar(0);
      for (std::size_t e = 0; e < cells.size(); ++e) {
        value += cost.entries()(cells[e] / n, cells[e] % n) * values[e];
      }
      if (value < best - Scalar(1e-13)) {
        best = value;
        best_cells = cells;
        best_values = values;
      }
    }
    // Next combination in lexicographic order.
    int k = support - 1;
    while (k >= 0 && cells[static_cast<std::size_t>(k)] == cells_total - support + k) --k;
    if (k < 0) break;
    ++cells[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < support; ++j) {
      cells[static_cast<std::size_t>(j)] = cells[static_cast<std::size_t>(j - 1)] + 1;
    }
  }

  Matrix<Scalar> plan = Matrix<Scalar>::Zero(n, n);
  for (std::size_t e = 0; e < best_cells.size(); ++e) {
    plan(best_cells[e] / n, best_cells[e] % n) = best_values[e];
  }
  return {TransportPlan<Scalar>(std::move(plan)), best};
}

}  // namespace pdasgd
