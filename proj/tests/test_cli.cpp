#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(GEXP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return rc < 0 ? -1 : WEXITSTATUS(rc);
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() /
                     ("gexp_cli_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream f(p);
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST(Cli, ArgumentAndConfigErrorsExitTwo) {
  const fs::path dir = fresh_dir("errs");
  write_file(dir / "ok.cfg", "theta.lo = 0.5\ntheta.hi = 1.0\n");
  write_file(dir / "bad.cfg", "theta.lo = abc\ntheta.hi = 1.0\n");

  EXPECT_EQ(run_cli("bogus --config " + (dir / "ok.cfg").string()), 2);
  EXPECT_EQ(run_cli("gheat"), 2);
  EXPECT_EQ(run_cli("gheat --config " + (dir / "missing.cfg").string()), 2);
  EXPECT_EQ(run_cli("gheat --config " + (dir / "bad.cfg").string() +
                    " --out " + (dir / "out").string()),
            2);
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Cli, GheatSliceMatchesGaussianMoment) {
  const fs::path dir = fresh_dir("gheat");
  write_file(dir / "run.cfg",
             "# demo config\n"
             "theta.kind = scalar_interval\n"
             "theta.lo = 1.0\n"
             "theta.hi = 1.0\n"
             "gheat.datum = absmin10\n"
             "grid.nx = 321\n");
  ASSERT_EQ(run_cli("gheat --config " + (dir / "run.cfg").string() +
                    " --out " + (dir / "out").string()),
            0);

  const auto rows = read_csv(dir / "out" / "gheat_slice.csv");
  ASSERT_GT(rows.size(), 2u);
  ASSERT_EQ(rows[0], (std::vector<std::string>{"x", "u"}));
  double best_x = 1e9, u0 = 0.0;
  for (size_t i = 1; i < rows.size(); ++i) {
    const double x = std::stod(rows[i][0]);
    if (std::abs(x) < std::abs(best_x)) {
      best_x = x;
      u0 = std::stod(rows[i][1]);
    }
  }
  ASSERT_LT(std::abs(best_x), 1e-9);
  EXPECT_NEAR(u0, std::sqrt(2.0 / std::numbers::pi), 1e-3);

  const std::string report = read_file(dir / "out" / "report.txt");
  EXPECT_NE(report.find("bound_check: pass"), std::string::npos);

  const std::string manifest = read_file(dir / "out" / "manifest.txt");
  EXPECT_NE(manifest.find("# demo config"), std::string::npos);
  EXPECT_NE(manifest.find("theta.lo = 1.0"), std::string::npos);
  EXPECT_NE(manifest.find("verb = gheat"), std::string::npos);
  EXPECT_NE(manifest.find("--- config (effective) ---"), std::string::npos);
}

TEST(Cli, VerifyVarZeroFunctionalPasses) {
  const fs::path dir = fresh_dir("varzero");
  write_file(dir / "run.cfg",
             "theta.lo = 0.5\n"
             "theta.hi = 1.0\n"
             "var.phi = zero\n"
             "var.random_h = 2\n"
             "sim.M = 32\n"
             "sim.n_paths = 2000\n"
             "grid.nx = 81\n");
  ASSERT_EQ(run_cli("verify-var --config " + (dir / "run.cfg").string() +
                    " --out " + (dir / "out").string()),
            0);
  const std::string report = read_file(dir / "out" / "report.txt");
  EXPECT_NE(report.find("lower_bound: pass"), std::string::npos);
  EXPECT_NE(report.find("gap_closure: pass"), std::string::npos);

  // h = 0, two random steps, and the gradient feedback control
  const auto rows = read_csv(dir / "out" / "var_table.csv");
  ASSERT_EQ(rows.size(), 5u);
  ASSERT_EQ(rows[0].size(), 5u);
}

TEST(Cli, RerunsAreByteIdenticalAndSeedSensitive) {
  const fs::path dir = fresh_dir("seeds");
  write_file(dir / "run.cfg",
             "theta.lo = 0.5\n"
             "theta.hi = 1.0\n"
             "var.phi = tanh\n"
             "var.random_h = 1\n"
             "sim.M = 32\n"
             "sim.n_paths = 2000\n"
             "grid.nx = 81\n");
  const std::string base =
      "verify-var --config " + (dir / "run.cfg").string() + " ";
  run_cli(base + "--seed 1 --out " + (dir / "a").string());
  run_cli(base + "--seed 1 --out " + (dir / "b").string());
  run_cli(base + "--seed 2 --out " + (dir / "c").string());

  const std::string ta = read_file(dir / "a" / "var_table.csv");
  ASSERT_FALSE(ta.empty());
  EXPECT_EQ(ta, read_file(dir / "b" / "var_table.csv"));
  EXPECT_NE(ta, read_file(dir / "c" / "var_table.csv"));
  EXPECT_EQ(read_file(dir / "a" / "manifest.txt"),
            read_file(dir / "b" / "manifest.txt"));
  EXPECT_EQ(read_file(dir / "a" / "report.txt"),
            read_file(dir / "b" / "report.txt"));
}

TEST(Cli, LdpThresholdFailureExitsOne) {
  const fs::path dir = fresh_dir("ldpfail");
  write_file(dir / "run.cfg",
             "theta.lo = 0.5\n"
             "theta.hi = 1.0\n"
             "ldp.phi = atan\n"
             "ldp.eps = 1.0\n"
             "ldp.threshold = 0.0001\n"
             "grid.nx = 161\n");
  EXPECT_EQ(run_cli("ldp --config " + (dir / "run.cfg").string() + " --out " +
                    (dir / "out").string()),
            1);
  const std::string report = read_file(dir / "out" / "report.txt");
  EXPECT_NE(report.find("final_gap: FAIL"), std::string::npos);

  const auto table = read_csv(dir / "out" / "ldp_table.csv");
  ASSERT_EQ(table.size(), 2u);
  const auto arg = read_csv(dir / "out" / "ldp_argmax.csv");
  ASSERT_GE(arg.size(), 3u);
  ASSERT_EQ(arg[0], (std::vector<std::string>{"s", "x"}));
}

TEST(Cli, UpperTraceOrderedAndPassing) {
  const fs::path dir = fresh_dir("upper");
  write_file(dir / "run.cfg",
             "theta.lo = 0.5\n"
             "theta.hi = 1.0\n"
             "upper.functional = absmin10\n"
             "upper.family = constants\n"
             "upper.points = 5\n"
             "sim.M = 32\n"
             "sim.n_paths = 4000\n");
  ASSERT_EQ(run_cli("upper --config " + (dir / "run.cfg").string() +
                    " --out " + (dir / "out").string()),
            0);
  const std::string report = read_file(dir / "out" / "report.txt");
  EXPECT_NE(report.find("order_check: pass"), std::string::npos);
  const auto trace = read_csv(dir / "out" / "upper_trace.csv");
  ASSERT_GE(trace.size(), 2u);
  ASSERT_EQ(trace[0],
            (std::vector<std::string>{"eval", "best_value", "argmax_hash"}));
}
