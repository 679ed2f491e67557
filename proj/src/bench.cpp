#include "pdasgd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

namespace pdasgd {

void BenchPlan::validate() const {
  if (solvers.empty()) throw std::invalid_argument("bench: empty solver set");
  if (accuracies.empty()) throw std::invalid_argument("bench: empty accuracy grid");
  if (!idx_path && sides.empty()) throw std::invalid_argument("bench: empty size grid");
  if (pairs < 1) throw std::invalid_argument("bench: pairs must be >= 1");
  for (double a : accuracies) {
    if (!(a > 0.0)) throw std::invalid_argument("bench: accuracies must be positive");
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_row(const BenchRow& r) {
  std::string s;
  s += to_string(r.solver);
  s += ',' + std::to_string(r.n);
  s += ',' + format_double(r.accuracy);
  s += ',' + std::to_string(r.pair);
  s += ',' + std::to_string(r.seed);
  s += ',' + std::to_string(r.cost_units);
  s += ',' + format_double(r.wall_ms);
  s += ',' + format_double(r.ot_value);
  s += ',' + format_double(r.d_final);
  s += ',';
  s += to_string(r.stop_reason);
  return s;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  SplitMix64 mix(base ^ (a * 0x9E3779B97F4A7C15ULL));
  mix.next();
  SplitMix64 second(mix.next() ^ (b * 0xD1B54A32D192ED03ULL));
  return second.next();
}

PairInstance make_pair_instance(const BenchPlan& plan, Eigen::Index side, std::int64_t pair,
                                const std::vector<ImageInstance>* pool) {
  const auto p = static_cast<std::uint64_t>(pair);
  ImageInstance first, second;
  if (pool) {
    SplitMix64 pick(derive_seed(plan.seed, 0xA11CEull, p));
    const std::size_t i = pick.index(pool->size());
    std::size_t j = pick.index(pool->size() - 1);
    if (j >= i) ++j;
    first = (*pool)[i];
    second = (*pool)[j];
  } else {
    first = gen_synthetic_image(side, derive_seed(plan.seed, static_cast<std::uint64_t>(side), 2 * p));
    second =
        gen_synthetic_image(side, derive_seed(plan.seed, static_cast<std::uint64_t>(side), 2 * p + 1));
  }
  return {grid_cost(first.rows(), first.cols()), image_to_distribution(first),
          image_to_distribution(second)};
}

BenchRow run_single(const PairInstance& inst, SolverKind solver, double accuracy,
                    std::int64_t pair, std::uint64_t seed, const BenchPlan& plan,
                    ApproxResult<double>* keep) {
  ApproxConfig cfg;
  cfg.epsilon = accuracy;
  cfg.solver = solver;
  cfg.profile = plan.profile;
  cfg.stop = StopCriterion::marginal_target;
  cfg.target_distance = accuracy;
  cfg.cap_constant = plan.cap_constant;
  cfg.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  auto result = approx_ot(inst.cost, inst.alpha, inst.beta, cfg);
  const auto stop = std::chrono::steady_clock::now();

  BenchRow row;
  row.solver = solver;
  row.n = inst.cost.size();
  row.accuracy = accuracy;
  row.pair = pair;
  row.seed = seed;
  row.cost_units = result.cost_units;
  row.wall_ms = plan.wall_clock
                    ? std::chrono::duration<double, std::milli>(stop - start).count()
                    : 0.0;
  row.ot_value = static_cast<double>(result.ot_value);
  row.d_final = result.final_distance;
  row.stop_reason = result.stop_reason;
  row.flagged = result.flagged;
  if (keep) *keep = std::move(result);
  return row;
}

std::vector<BenchCell> aggregate(const std::vector<BenchRow>& rows) {
  std::map<std::tuple<int, Eigen::Index, double>, std::vector<const BenchRow*>> groups;
  for (const auto& r : rows) groups[{static_cast<int>(r.solver), r.n, r.accuracy}].push_back(&r);
  std::vector<BenchCell> cells;
  for (const auto& [key, members] : groups) {
    BenchCell cell;
    cell.solver = members.front()->solver;
    cell.n = members.front()->n;
    cell.accuracy = members.front()->accuracy;
    cell.runs = members.size();
    double sum = 0.0, value = 0.0;
    for (const auto* m : members) {
      sum += static_cast<double>(m->cost_units);
      value += m->ot_value;
      cell.flagged += m->flagged ? 1 : 0;
    }
    cell.mean_cost_units = sum / static_cast<double>(cell.runs);
    cell.mean_ot_value = value / static_cast<double>(cell.runs);
    if (cell.runs > 1) {
      double ss = 0.0;
      for (const auto* m : members) {
        const double d = static_cast<double>(m->cost_units) - cell.mean_cost_units;
        ss += d * d;
      }
      cell.std_cost_units = std::sqrt(ss / static_cast<double>(cell.runs - 1));
    }
    cells.push_back(cell);
  }
  return cells;
}

namespace {

struct Job {
  SolverKind solver;
  Eigen::Index side;
  double accuracy;
  std::int64_t pair;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string run_tag(const BenchRow& r) {
  return std::string(to_string(r.solver)) + "_n" + std::to_string(r.n) + "_acc" +
         format_double(r.accuracy) + "_pair" + std::to_string(r.pair);
}

}  // namespace

BenchSummary run_benchmark(const BenchPlan& plan, const std::filesystem::path& out_dir) {
  plan.validate();
  std::vector<ImageInstance> pool;
  if (plan.idx_path) {
    pool = load_idx(*plan.idx_path);
    if (pool.size() < 2) throw std::invalid_argument("bench: idx file needs at least 2 images");
  }
  const std::vector<Eigen::Index> sides =
      plan.idx_path ? std::vector<Eigen::Index>{pool.front().rows()} : plan.sides;

  std::vector<Job> jobs;
  for (auto solver : plan.solvers)
    for (auto side : sides)
      for (double acc : plan.accuracies)
        for (std::int64_t p = 0; p < plan.pairs; ++p) jobs.push_back({solver, side, acc, p});

  std::filesystem::create_directories(out_dir);
  if (plan.dump_plans) std::filesystem::create_directories(out_dir / "plans");

  std::vector<BenchRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        const Job& job = jobs[k];
        const auto inst = make_pair_instance(plan, job.side, job.pair, plan.idx_path ? &pool : nullptr);
        const std::uint64_t seed = derive_seed(plan.seed, 0x50u, static_cast<std::uint64_t>(job.pair));
        ApproxResult<double> kept;
        rows[k] = run_single(inst, job.solver, job.accuracy, job.pair, seed, plan,
                             plan.dump_plans ? &kept : nullptr);
        if (plan.dump_plans) {
          const auto tag = run_tag(rows[k]);
          const auto [alpha_s, beta_s] =
              smooth_marginals(inst.alpha, inst.beta, kept.parameters.eps_prime);
          MatrixXd marginals(2, inst.cost.size());
          marginals.row(0) = alpha_s.weights().transpose();
          marginals.row(1) = beta_s.weights().transpose();
          write_csv_matrix(out_dir / "plans" / (tag + "_unrounded.csv"), kept.unrounded.entries());
          write_csv_matrix(out_dir / "plans" / (tag + "_rounded.csv"), kept.plan.entries());
          write_csv_matrix(out_dir / "plans" / (tag + "_marginals.csv"), marginals);
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(plan.threads, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool_threads;
  for (unsigned t = 1; t < threads; ++t) pool_threads.emplace_back(worker);
  worker();
  for (auto& t : pool_threads) t.join();
  if (failure) std::rethrow_exception(failure);

  std::sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tuple(to_string(a.solver), a.n, a.accuracy, a.pair) <
           std::tuple(to_string(b.solver), b.n, b.accuracy, b.pair);
  });

  BenchSummary summary;
  summary.rows = rows;
  summary.cells = aggregate(rows);
  for (const auto& r : rows) summary.any_flagged |= r.flagged;

  std::string runs = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) runs += csv_row(r) + "\n";
  write_text(out_dir / "runs.csv", runs);

  std::string agg = "solver,n,accuracy,runs,flagged,mean_cost_units,std_cost_units,mean_ot_value\n";
  for (const auto& c : summary.cells) {
    agg += std::string(to_string(c.solver)) + ',' + std::to_string(c.n) + ',' +
           format_double(c.accuracy) + ',' + std::to_string(c.runs) + ',' +
           std::to_string(c.flagged) + ',' + format_double(c.mean_cost_units) + ',' +
           format_double(c.std_cost_units) + ',' + format_double(c.mean_ot_value) + '\n';
  }
  write_text(out_dir / "aggregate.csv", agg);

  // Long format: one series per (solver, fixed coordinate); x is either the
  // accuracy (fixed n) or n (fixed accuracy).
  std::string plot = "solver,x_axis,x,fixed,y_mean,y_std\n";
  for (const auto& c : summary.cells) {
    plot += std::string(to_string(c.solver)) + ",accuracy," + format_double(c.accuracy) + ',' +
            std::to_string(c.n) + ',' + format_double(c.mean_cost_units) + ',' +
            format_double(c.std_cost_units) + '\n';
  }
  for (const auto& c : summary.cells) {
    plot += std::string(to_string(c.solver)) + ",n," + std::to_string(c.n) + ',' +
            format_double(c.accuracy) + ',' + format_double(c.mean_cost_units) + ',' +
            format_double(c.std_cost_units) + '\n';
  }
  write_text(out_dir / "plot_data.csv", plot);
  return summary;
}

}  // namespace pdasgd
