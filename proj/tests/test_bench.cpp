#include "pdasgd/bench.hpp"
#include "pdasgd/image.hpp"
#include "pdasgd/ot_core.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace pdasgd;
using namespace pdasgd::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pdasgd_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int k = 3; k >= 0; --k) b.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

BenchPlan small_plan() {
  BenchPlan plan;
  plan.pairs = 2;
  plan.accuracies = {0.02, 0.05};
  plan.sides = {3, 4};
  plan.seed = 77;
  return plan;
}

}  // namespace

TEST_CASE("synthetic images") {
  CHECK(foreground_side(10) == 4);
  CHECK(foreground_side(20) == 8);
  CHECK_THROWS(gen_synthetic_image(1, 0));

  const auto a = gen_synthetic_image(10, 42);
  const auto b = gen_synthetic_image(10, 42);
  CHECK((a.pixels - b.pixels).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.pixels - gen_synthetic_image(10, 43).pixels).cwiseAbs().maxCoeff() > 0.0);
  CHECK(a.pixels.minCoeff() >= 0.0);
  CHECK(a.pixels.maxCoeff() <= 10.0);

  // Pixels above 1 can only come from the square, so their bounding box lies
  // inside the square's footprint.
  double fg_sum = 0.0;
  std::size_t fg_count = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto img = gen_synthetic_image(10, seed);
    Eigen::Index rmin = 10, rmax = -1, cmin = 10, cmax = -1;
    for (Eigen::Index r = 0; r < 10; ++r)
      for (Eigen::Index c = 0; c < 10; ++c)
        if (img.pixels(r, c) > 1.0) {
          rmin = std::min(rmin, r), rmax = std::max(rmax, r);
          cmin = std::min(cmin, c), cmax = std::max(cmax, c);
        }
    if (rmax >= 0) {
      CHECK(rmax - rmin < 4);
      CHECK(cmax - cmin < 4);
    }
  }
  // The foreground mean is measured through the excess over the background
  // mean: E[image] = 0.84 * 0.5 + 0.16 * mu_fg for side 10.
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto img = gen_synthetic_image(10, seed);
    fg_sum += img.pixels.sum();
    fg_count += 1;
  }
  const double mean_pixel = fg_sum / (100.0 * double(fg_count));
  const double mu_fg = (mean_pixel - 0.84 * 0.5) / 0.16;
  CHECK(std::abs(mu_fg - 5.0) <= 0.2);
}

TEST_CASE("image distributions and grid cost") {
  ImageInstance point;
  point.pixels = Eigen::Matrix<double, -1, -1, Eigen::RowMajor>::Zero(3, 3);
  point.pixels(1, 2) = 7.0;
  const auto d = image_to_distribution(point);
  CHECK(d[5] == 1.0);
  CHECK(d.weights().sum() == 1.0);

  ImageInstance flat;
  flat.pixels = Eigen::Matrix<double, -1, -1, Eigen::RowMajor>::Constant(4, 4, 3.0);
  CHECK((image_to_distribution(flat).weights() - VectorXd::Constant(16, 1.0 / 16))
            .lpNorm<Eigen::Infinity>() <= 1e-16);

  ImageInstance dark;
  dark.pixels = Eigen::Matrix<double, -1, -1, Eigen::RowMajor>::Zero(2, 2);
  CHECK_THROWS(image_to_distribution(dark));

  const auto c = grid_cost(2, 2);
  CHECK(c.entries()(0, 3) == 1.0);
  CHECK(c.entries()(0, 1) == 0.5);
  CHECK(c.entries().diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(grid_cost(5, 5).max_abs() == 1.0);
}

TEST_CASE("IDX parsing") {
  std::vector<std::uint8_t> bytes;
  put_u32(bytes, 0x00000803);
  put_u32(bytes, 3);
  put_u32(bytes, 2);
  put_u32(bytes, 4);
  for (int k = 0; k < 24; ++k) bytes.push_back(static_cast<std::uint8_t>(10 * k));
  const auto imgs = parse_idx(bytes);
  REQUIRE(imgs.size() == 3);
  CHECK(imgs[0].rows() == 2);
  CHECK(imgs[0].cols() == 4);
  CHECK(imgs[1].pixels(1, 3) == 150.0);
  CHECK(imgs[2].source == ImageSource::file);

  auto truncated = bytes;
  truncated.resize(truncated.size() - 5);
  try {
    parse_idx(truncated);
    FAIL("expected a parse error");
  } catch (const parse_error& e) {
    CHECK(std::string(e.what()).find("missing 5 bytes") != std::string::npos);
  }
  auto bad = bytes;
  bad[2] = 9;
  CHECK_THROWS_AS(parse_idx(bad), parse_error);
  CHECK_THROWS_AS(parse_idx(std::vector<std::uint8_t>(7, 0)), parse_error);
  std::vector<std::uint8_t> huge;
  put_u32(huge, 0x00000803);
  put_u32(huge, 0xffffffffu);
  put_u32(huge, 0xffffffffu);
  put_u32(huge, 0xffffffffu);
  CHECK_THROWS_AS(parse_idx(huge), parse_error);

  const auto dir = scratch_dir("idx");
  {
    std::ofstream out(dir / "imgs.idx", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  }
  CHECK(load_idx(dir / "imgs.idx").size() == 3);
  CHECK(load_image(dir / "imgs.idx").pixels(0, 1) == 10.0);
}

TEST_CASE("CSV and PGM loaders") {
  const auto dir = scratch_dir("csv");
  const auto img = gen_synthetic_image(6, 5);
  const MatrixXd m = img.pixels;
  write_csv_matrix(dir / "img.csv", m);
  CHECK((load_csv_matrix(dir / "img.csv") - m).cwiseAbs().maxCoeff() == 0.0);
  CHECK((load_image(dir / "img.csv").pixels - img.pixels).cwiseAbs().maxCoeff() == 0.0);
  MatrixXd tiny(1, 3);
  tiny << 8.0e-322, -1e-300, 1.0 / 3.0;
  write_csv_matrix(dir / "tiny.csv", tiny);
  CHECK(load_csv_matrix(dir / "tiny.csv") == tiny);

  {
    std::ofstream out(dir / "a.pgm", std::ios::binary);
    out << "P5\n# comment\n3 2\n255\n";
    const unsigned char px[6] = {0, 1, 2, 3, 4, 255};
    out.write(reinterpret_cast<const char*>(px), 6);
  }
  const auto pgm = load_pgm(dir / "a.pgm");
  CHECK(pgm.rows() == 2);
  CHECK(pgm.cols() == 3);
  CHECK(pgm.pixels(1, 2) == 255.0);
  {
    std::ofstream out(dir / "short.pgm", std::ios::binary);
    out << "P5\n3 2\n255\n";
    out.write("\x01\x02", 2);
  }
  CHECK_THROWS(load_pgm(dir / "short.pgm"));
  {
    std::ofstream out(dir / "ragged.csv");
    out << "1,2,3\n4,5\n";
  }
  CHECK_THROWS(load_csv_matrix(dir / "ragged.csv"));
}

TEST_CASE("CSV formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(0.0) == "0");
  BenchRow row;
  row.solver = SolverKind::greenkhorn;
  row.n = 16;
  row.accuracy = 0.01;
  row.pair = 2;
  row.seed = 9;
  row.cost_units = 1234;
  row.ot_value = 0.5;
  row.d_final = 0.25;
  row.stop_reason = StopReason::marginal_target;
  CHECK(csv_row(row) == "greenkhorn,16,0.01,2,9,1234,0,0.5,0.25,marginal_target");
  CHECK(std::string(kCsvHeader) ==
        "solver,n,accuracy,pair,seed,cost_units,wall_ms,ot_value,d_final,stop_reason");
}

TEST_CASE("aggregation") {
  BenchRow r;
  r.n = 9;
  r.accuracy = 0.01;
  r.cost_units = 500;
  r.ot_value = 0.3;
  std::vector<BenchRow> rows(5, r);
  auto cells = aggregate(rows);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].runs == 5);
  CHECK(cells[0].mean_cost_units == 500.0);
  CHECK(cells[0].std_cost_units == 0.0);
  CHECK(cells[0].mean_ot_value == doctest::Approx(0.3));

  rows[1].cost_units = 700;
  rows.push_back(r);
  rows.back().solver = SolverKind::sinkhorn;
  cells = aggregate(rows);
  REQUIRE(cells.size() == 2);
  const auto& p = cells[0].solver == SolverKind::pdasgd ? cells[0] : cells[1];
  CHECK(p.mean_cost_units == 540.0);
  CHECK(p.std_cost_units == doctest::Approx(std::sqrt(40000.0 / 5.0 * 4.0 / 4.0 * 1.0)));
  CHECK(aggregate(std::vector<BenchRow>(1, r))[0].std_cost_units == 0.0);
}

TEST_CASE("seed derivation and pair instances") {
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  const auto plan = small_plan();
  const auto a = make_pair_instance(plan, 4, 0, nullptr);
  const auto b = make_pair_instance(plan, 4, 0, nullptr);
  CHECK(a.alpha.weights() == b.alpha.weights());
  CHECK(a.beta.weights() == b.beta.weights());
  CHECK(a.alpha.weights() != a.beta.weights());
  CHECK(a.cost.size() == 16);
  CHECK(a.cost.max_abs() == 1.0);
}

TEST_CASE("PDASGD cost units match the instrumented counters") {
  const auto plan = small_plan();
  const auto inst = make_pair_instance(plan, 4, 1, nullptr);
  ApproxResult<double> kept;
  const auto row = run_single(inst, SolverKind::pdasgd, 0.02, 1, 5, plan, &kept);
  const std::uint64_t n = 16;
  const std::uint64_t m = 8;  // round(2 sqrt 16)
  const auto s = std::uint64_t(kept.iterations);
  CHECK(kept.counts.component_gradients == s * (n + m));
  CHECK(kept.counts.inner_steps == s * m);
  CHECK(row.cost_units == 4 * n * s * (n + m) + 6 * n * s * m + 4 * n * n * kept.counts.primal_maps);
  CHECK(row.d_final <= 0.02);
  CHECK(row.stop_reason == StopReason::marginal_target);
  const auto again = run_single(inst, SolverKind::pdasgd, 0.02, 1, 5, plan);
  CHECK(again.cost_units == row.cost_units);
  CHECK(csv_row(again) == csv_row(row));
}

TEST_CASE("benchmark output is deterministic and plans recompute d") {
  auto plan = small_plan();
  plan.dump_plans = true;
  const auto d1 = scratch_dir("bench1");
  const auto d2 = scratch_dir("bench2");
  const auto s1 = run_benchmark(plan, d1);
  plan.threads = 3;
  const auto s2 = run_benchmark(plan, d2);
  CHECK(s1.rows.size() == 3 * 2 * 2 * 2);
  for (const char* f : {"runs.csv", "aggregate.csv", "plot_data.csv"}) {
    INFO(f);
    CHECK(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  }
  std::istringstream runs(slurp(d1 / "runs.csv"));
  std::string line;
  std::getline(runs, line);
  CHECK(line == kCsvHeader);

  for (const auto& row : s1.rows) {
    const std::string tag = std::string(to_string(row.solver)) + "_n" + std::to_string(row.n) +
                            "_acc" + format_double(row.accuracy) + "_pair" +
                            std::to_string(row.pair);
    const MatrixXd x = load_csv_matrix(d1 / "plans" / (tag + "_unrounded.csv"));
    const MatrixXd xr = load_csv_matrix(d1 / "plans" / (tag + "_rounded.csv"));
    const MatrixXd marg = load_csv_matrix(d1 / "plans" / (tag + "_marginals.csv"));
    const VectorXd a = marg.row(0).transpose();
    const VectorXd b = marg.row(1).transpose();
    CHECK(format_double(marginal_distance(x, a, b)) == format_double(row.d_final));
    CHECK(row.d_final <= row.accuracy);
    CHECK(xr.minCoeff() >= 0.0);
  }
}
