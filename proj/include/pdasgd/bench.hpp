#pragma once

#include "pdasgd/approx.hpp"
#include "pdasgd/image.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pdasgd {

struct BenchPlan {
  std::vector<SolverKind> solvers{SolverKind::pdasgd, SolverKind::sinkhorn,
                                  SolverKind::greenkhorn};
  std::int64_t pairs = 5;
  std::vector<double> accuracies{0.005, 0.01, 0.015, 0.02};
  std::vector<Eigen::Index> sides{8, 12, 16, 20};
  std::uint64_t seed = 0;
  SolverProfile profile = SolverProfile::benchmark;
  double cap_constant = 1.0;
  std::optional<std::filesystem::path> idx_path;  // image pairs drawn from this file
  bool dump_plans = false;
  bool wall_clock = false;  // wall_ms stays 0 otherwise, keeping runs.csv reproducible
  unsigned threads = 1;

  void validate() const;
};

struct BenchRow {
  SolverKind solver = SolverKind::pdasgd;
  Eigen::Index n = 0;
  double accuracy = 0.0;
  std::int64_t pair = 0;
  std::uint64_t seed = 0;
  std::uint64_t cost_units = 0;
  double wall_ms = 0.0;
  double ot_value = 0.0;
  double d_final = 0.0;
  StopReason stop_reason = StopReason::converged;
  bool flagged = false;
};

struct BenchCell {
  SolverKind solver = SolverKind::pdasgd;
  Eigen::Index n = 0;
  double accuracy = 0.0;
  std::size_t runs = 0;
  std::size_t flagged = 0;
  double mean_cost_units = 0.0;
  double std_cost_units = 0.0;  // sample standard deviation, 0 for a single run
  double mean_ot_value = 0.0;
};

struct BenchSummary {
  std::vector<BenchRow> rows;
  std::vector<BenchCell> cells;
  bool any_flagged = false;
};

inline constexpr const char* kCsvHeader =
    "solver,n,accuracy,pair,seed,cost_units,wall_ms,ot_value,d_final,stop_reason";

/// 17 significant digits.
std::string format_double(double v);
std::string csv_row(const BenchRow& row);

/// One pipeline run stopping on d(X~) <= accuracy.
struct PairInstance {
  CostMatrixd cost;
  Distributiond alpha, beta;
};
PairInstance make_pair_instance(const BenchPlan& plan, Eigen::Index side, std::int64_t pair,
                                const std::vector<ImageInstance>* pool);
BenchRow run_single(const PairInstance& inst, SolverKind solver, double accuracy,
                    std::int64_t pair, std::uint64_t seed, const BenchPlan& plan,
                    ApproxResult<double>* keep = nullptr);

std::vector<BenchCell> aggregate(const std::vector<BenchRow>& rows);

/// Runs the (solver, size, accuracy, pair) grid and writes runs.csv,
/// aggregate.csv and plot_data.csv (plus plans/ with dump_plans) into out_dir.
BenchSummary run_benchmark(const BenchPlan& plan, const std::filesystem::path& out_dir);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace pdasgd
