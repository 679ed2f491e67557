// otbench: generate data, solve single instances, run the benchmark grid and
// query the exact small-n oracle.
#include "pdasgd/bench.hpp"
#include "pdasgd/exact_oracle.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

namespace {

using namespace pdasgd;

constexpr int kExitFlagged = 2;
constexpr int kExitError = 1;

const std::map<std::string, SolverKind> kSolvers{{"pdasgd", SolverKind::pdasgd},
                                                 {"sinkhorn", SolverKind::sinkhorn},
                                                 {"greenkhorn", SolverKind::greenkhorn}};
const std::map<std::string, SolverProfile> kProfiles{{"theory", SolverProfile::theory},
                                                     {"benchmark", SolverProfile::benchmark}};

void print_kv(const std::string& key, const std::string& value) {
  std::cout << key << '=' << value << '\n';
}
void print_kv(const std::string& key, double value) { print_kv(key, format_double(value)); }

Distributiond distribution_from_csv(const std::string& path) {
  const MatrixXd m = load_csv_matrix(path);
  const VectorXd flat = Eigen::Map<const VectorXd>(m.data(), m.size());
  return Distributiond::normalized(flat);
}

struct GenArgs {
  Eigen::Index size = 16;
  std::uint64_t seed = 0;
  int count = 2;
  std::string out = "images";
};

int run_gen(const GenArgs& a) {
  std::filesystem::create_directories(a.out);
  for (int k = 0; k < a.count; ++k) {
    const auto img = gen_synthetic_image(a.size, derive_seed(a.seed, static_cast<std::uint64_t>(a.size),
                                                             static_cast<std::uint64_t>(k)));
    char name[32];
    std::snprintf(name, sizeof name, "image_%03d.csv", k);
    const auto path = std::filesystem::path(a.out) / name;
    write_csv_matrix(path, img.pixels);
    std::cout << path.string() << '\n';
  }
  return 0;
}

struct SolveArgs {
  Eigen::Index size = 8;
  std::uint64_t seed = 0;
  double epsilon = 0.05;
  std::string solver = "pdasgd";
  std::string profile = "benchmark";
  std::string image_a, image_b;
  double accuracy = 0.0;
  std::int64_t max_outer = 0;
  double cap_constant = 1.0;
};

int run_solve(const SolveArgs& a) {
  PairInstance inst;
  if (!a.image_a.empty() || !a.image_b.empty()) {
    if (a.image_a.empty() || a.image_b.empty()) {
      throw std::invalid_argument("solve: --image-a and --image-b go together");
    }
    const auto first = load_image(a.image_a);
    const auto second = load_image(a.image_b);
    if (first.rows() != second.rows() || first.cols() != second.cols()) {
      throw std::invalid_argument("solve: images differ in shape");
    }
    inst = {grid_cost(first.rows(), first.cols()), image_to_distribution(first),
            image_to_distribution(second)};
  } else {
    BenchPlan plan;
    plan.seed = a.seed;
    inst = make_pair_instance(plan, a.size, 0, nullptr);
  }
  ApproxConfig cfg;
  cfg.epsilon = a.epsilon;
  cfg.solver = kSolvers.at(a.solver);
  cfg.profile = kProfiles.at(a.profile);
  cfg.seed = a.seed;
  cfg.cap_constant = a.cap_constant;
  if (a.max_outer > 0) cfg.max_outer = a.max_outer;
  if (a.accuracy > 0.0) {
    cfg.stop = StopCriterion::marginal_target;
    cfg.target_distance = a.accuracy;
  }
  const auto r = approx_ot(inst.cost, inst.alpha, inst.beta, cfg);
  print_kv("solver", a.solver);
  print_kv("n", std::to_string(inst.cost.size()));
  print_kv("epsilon", a.epsilon);
  print_kv("eta", r.parameters.eta);
  print_kv("eps_prime", r.parameters.eps_prime);
  print_kv("ot_value", r.ot_value);
  print_kv("d_unrounded", r.final_distance);
  print_kv("d_rounded", marginal_distance(r.plan, inst.alpha, inst.beta));
  print_kv("rounding_l1_change", r.rounding.l1_change);
  print_kv("iterations", std::to_string(r.iterations));
  print_kv("cost_units", std::to_string(r.cost_units));
  if (!r.records.empty()) {
    print_kv("duality_gap", r.records.back().duality_gap);
    print_kv("constraint_violation", r.records.back().constraint_violation_l1);
  }
  print_kv("stop_reason", std::string(to_string(r.stop_reason)));
  print_kv("flagged", r.flagged ? "1" : "0");
  return r.flagged ? kExitFlagged : 0;
}

struct BenchArgs {
  std::vector<Eigen::Index> sizes{8, 12, 16, 20};
  std::vector<double> accuracies{0.005, 0.01, 0.015, 0.02};
  std::int64_t pairs = 5;
  std::uint64_t seed = 0;
  std::vector<std::string> solvers{"pdasgd", "sinkhorn", "greenkhorn"};
  std::string profile = "benchmark";
  std::string out = "bench_out";
  std::string idx;
  bool dump_plans = false;
  bool wall_clock = false;
  unsigned threads = 1;
  double cap_constant = 1.0;
};

int run_bench(const BenchArgs& a) {
  BenchPlan plan;
  plan.sides = a.sizes;
  plan.accuracies = a.accuracies;
  plan.pairs = a.pairs;
  plan.seed = a.seed;
  plan.solvers.clear();
  for (const auto& s : a.solvers) plan.solvers.push_back(kSolvers.at(s));
  plan.profile = kProfiles.at(a.profile);
  if (!a.idx.empty()) plan.idx_path = a.idx;
  plan.dump_plans = a.dump_plans;
  plan.wall_clock = a.wall_clock;
  plan.threads = a.threads;
  plan.cap_constant = a.cap_constant;
  const auto summary = run_benchmark(plan, a.out);
  for (const auto& c : summary.cells) {
    std::cout << to_string(c.solver) << " n=" << c.n << " accuracy=" << format_double(c.accuracy)
              << " mean_cost_units=" << format_double(c.mean_cost_units)
              << " std=" << format_double(c.std_cost_units) << " flagged=" << c.flagged << '\n';
  }
  return summary.any_flagged ? kExitFlagged : 0;
}

struct OracleArgs {
  Eigen::Index size = 3;
  std::uint64_t seed = 0;
  std::string cost, alpha, beta;
};

int run_oracle(const OracleArgs& a) {
  CostMatrixd cost;
  Distributiond alpha, beta;
  if (!a.cost.empty()) {
    if (a.alpha.empty() || a.beta.empty()) {
      throw std::invalid_argument("oracle: --cost needs --alpha and --beta");
    }
    cost = CostMatrixd(load_csv_matrix(a.cost));
    alpha = distribution_from_csv(a.alpha);
    beta = distribution_from_csv(a.beta);
  } else {
    SplitMix64 rng(a.seed);
    MatrixXd c(a.size, a.size);
    VectorXd x(a.size), y(a.size);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform();
    for (Eigen::Index i = 0; i < a.size; ++i) x[i] = rng.uniform(), y[i] = rng.uniform();
    cost = CostMatrixd(c);
    alpha = Distributiond::normalized(x);
    beta = Distributiond::normalized(y);
  }
  const auto sol = exact_ot_oracle(cost, alpha, beta);
  print_kv("n", std::to_string(cost.size()));
  print_kv("value", sol.value);
  for (Eigen::Index i = 0; i < sol.plan.size(); ++i) {
    std::string row;
    for (Eigen::Index j = 0; j < sol.plan.size(); ++j) {
      row += (j ? "," : "") + format_double(sol.plan(i, j));
    }
    print_kv("plan_row_" + std::to_string(i), row);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate optimal transport with PDASGD, Sinkhorn and Greenkhorn"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write synthetic square-foreground images as CSV");
  gen_cmd->add_option("--size", gen.size, "Image side in pixels")->check(CLI::Range(2, 4096));
  gen_cmd->add_option("--seed", gen.seed, "Base seed");
  gen_cmd->add_option("--count", gen.count, "Number of images")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen.out, "Output directory");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one image pair, print key=value diagnostics");
  solve_cmd->add_option("--size", solve.size, "Synthetic image side")->check(CLI::Range(2, 64));
  solve_cmd->add_option("--seed", solve.seed, "Instance and solver seed");
  solve_cmd->add_option("--epsilon", solve.epsilon, "Target accuracy")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--solver", solve.solver)->check(CLI::IsMember({"pdasgd", "sinkhorn", "greenkhorn"}));
  solve_cmd->add_option("--profile", solve.profile)->check(CLI::IsMember({"theory", "benchmark"}));
  solve_cmd->add_option("--image-a", solve.image_a, "First image (.csv, .pgm or IDX)");
  solve_cmd->add_option("--image-b", solve.image_b, "Second image");
  solve_cmd->add_option("--accuracy", solve.accuracy,
                        "Stop on marginal distance instead of the duality-gap rule");
  solve_cmd->add_option("--max-outer", solve.max_outer, "Override the outer-iteration cap");
  solve_cmd->add_option("--cap-constant", solve.cap_constant, "Constant in the iteration cap");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run the benchmark grid");
  bench_cmd->add_option("--size", bench.sizes, "Image sides (n = side^2)")->delimiter(',');
  bench_cmd->add_option("--accuracy-grid", bench.accuracies)->delimiter(',');
  bench_cmd->add_option("--pairs", bench.pairs)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed);
  bench_cmd->add_option("--solver", bench.solvers)
      ->delimiter(',')
      ->check(CLI::IsMember({"pdasgd", "sinkhorn", "greenkhorn"}));
  bench_cmd->add_option("--profile", bench.profile)->check(CLI::IsMember({"theory", "benchmark"}));
  bench_cmd->add_option("--out", bench.out, "Output directory");
  bench_cmd->add_option("--idx", bench.idx, "Draw image pairs from an IDX3-ubyte file");
  bench_cmd->add_flag("--dump-plans", bench.dump_plans, "Write every plan and its marginals");
  bench_cmd->add_flag("--wall-clock", bench.wall_clock, "Record wall_ms (breaks byte reproducibility)");
  bench_cmd->add_option("--threads", bench.threads)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--cap-constant", bench.cap_constant);

  OracleArgs oracle;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact OT value for n <= 5");
  oracle_cmd->add_option("--size", oracle.size, "Random instance size")->check(CLI::Range(1, 5));
  oracle_cmd->add_option("--seed", oracle.seed);
  oracle_cmd->add_option("--cost", oracle.cost, "Cost matrix CSV");
  oracle_cmd->add_option("--alpha", oracle.alpha, "Row marginal CSV");
  oracle_cmd->add_option("--beta", oracle.beta, "Column marginal CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*solve_cmd) return run_solve(solve);
    if (*bench_cmd) return run_bench(bench);
    if (*oracle_cmd) return run_oracle(oracle);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
