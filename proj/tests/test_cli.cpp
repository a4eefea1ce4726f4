#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qc1d/run.hpp"

using namespace qc1d;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qc1d_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_quiet(const RunConfig& cfg) {
  std::ostringstream log, err;
  return run(cfg, log, err);
}

}  // namespace

TEST_CASE("solve command writes one solution file per model per N", "[cli]") {
  const fs::path dir = scratch_dir("solve");
  RunConfig cfg;
  cfg.command = Command::solve;
  cfg.models_str = "qce,qnl";
  cfg.potential_str = "lj";
  cfg.load_str = "sin:1,1";
  cfg.n_list = {16, 32};
  cfg.out_prefix = (dir / "run_").string();
  REQUIRE(run_quiet(cfg) == 0);
  for (const char* f : {"run_solution_qce_N16.csv", "run_solution_qce_N32.csv",
                        "run_solution_qnl_N16.csv", "run_solution_qnl_N32.csv"}) {
    CHECK(fs::exists(dir / f));
  }
  const std::string text = slurp(dir / "run_solution_qce_N16.csv");
  CHECK(text.rfind("#meta ", 0) == 0);
  CHECK(text.find("j,x_j,u_j,Du_j") != std::string::npos);
  // one row per lattice site plus header lines
  CHECK(std::count(text.begin(), text.end(), '\n') == 32 + 2);
}

TEST_CASE("solve can dump assembled operators as triplets", "[cli]") {
  const fs::path dir = scratch_dir("dump");
  RunConfig cfg;
  cfg.command = Command::solve;
  cfg.models_str = "qnl";
  cfg.potential_str = "explicit:0,1,0.05,-0.1";
  cfg.load_str = "zero";
  cfg.n_list = {8};
  cfg.k_rule_str = "count:3";
  cfg.out_prefix = (dir / "d_").string();
  cfg.dump_operator = true;
  REQUIRE(run_quiet(cfg) == 0);
  std::istringstream is(slurp(dir / "d_operator_qnl_N8.txt"));
  long i, j;
  double v;
  int rows = 0;
  while (is >> i >> j >> v) {
    CHECK(i >= -7);
    CHECK(i <= 8);
    CHECK(v != 0.0);
    ++rows;
  }
  CHECK(rows > 16 * 3);  // at least the three-point band everywhere
}

TEST_CASE("identical configurations produce byte-identical CSV", "[cli]") {
  const fs::path dir1 = scratch_dir("det1");
  const fs::path dir2 = scratch_dir("det2");
  for (const fs::path& dir : {dir1, dir2}) {
    RunConfig cfg;
    cfg.command = Command::sweep;
    cfg.models_str = "qnl";
    cfg.potential_str = "lj";
    cfg.load_str = "sin:1,1";
    cfg.n_list = {16, 32, 64, 128};
    cfg.k_rule_str = "frac:0.25";
    cfg.out_prefix = (dir / "s_").string();
    REQUIRE(run_quiet(cfg) == 0);
  }
  CHECK(slurp(dir1 / "s_sweep.csv") == slurp(dir2 / "s_sweep.csv"));
}

TEST_CASE("sweep CSV carries data rows and rate footer", "[cli]") {
  const fs::path dir = scratch_dir("sweep");
  RunConfig cfg;
  cfg.command = Command::sweep;
  cfg.models_str = "qce";
  cfg.potential_str = "explicit:0,1,0.05,-0.2";
  cfg.load_str = "sin:1,1";
  cfg.n_list = {16, 32, 64, 128};
  cfg.out_prefix = (dir / "s_").string();
  REQUIRE(run_quiet(cfg) == 0);
  const std::string text = slurp(dir / "s_sweep.csv");
  CHECK(text.find("model,N,h,K,e_linf,de_l1,de_l2,de_linf") != std::string::npos);
  CHECK(text.find("\nqce,16,") != std::string::npos);
  CHECK(text.find("#rate,qce,e_linf,") != std::string::npos);
  CHECK(text.find("#rate,qce,de_linf,") != std::string::npos);
  // 17-significant-digit formatting: h = 1/16 prints exactly
  CHECK(text.find(",0.0625,") != std::string::npos);
}

TEST_CASE("ghost command reports the forcing and the zero-load response", "[cli]") {
  const fs::path dir = scratch_dir("ghost");
  RunConfig cfg;
  cfg.command = Command::ghost;
  cfg.potential_str = "lj";
  cfg.n_list = {128};
  cfg.k_rule_str = "frac:0.25";
  cfg.out_prefix = (dir / "g_").string();
  REQUIRE(run_quiet(cfg) == 0);
  const std::string text = slurp(dir / "g_ghost_N128.csv");
  CHECK(text.find("j,g_j,u_qce_j") != std::string::npos);
  int nonzero_g = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'j') continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (std::stod(line.substr(c1 + 1, c2 - c1 - 1)) != 0.0) ++nonzero_g;
  }
  CHECK(nonzero_g == 8);
}

TEST_CASE("QCE solve under zero load without first-order coupling is zero", "[cli]") {
  const fs::path dir = scratch_dir("nullghost");
  RunConfig cfg;
  cfg.command = Command::solve;
  cfg.models_str = "qce";
  cfg.potential_str = "explicit:0,1,0,-0.1";  // phi'_2F = 0: no ghost forcing
  cfg.load_str = "zero";
  cfg.n_list = {32};
  cfg.out_prefix = (dir / "z_").string();
  REQUIRE(run_quiet(cfg) == 0);
  std::istringstream lines(slurp(dir / "z_solution_qce_N32.csv"));
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'j') continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto c3 = line.find(',', c2 + 1);
    CHECK(std::stod(line.substr(c2 + 1, c3 - c2 - 1)) == 0.0);
  }
}

TEST_CASE("stability command emits one row per model per N", "[cli]") {
  const fs::path dir = scratch_dir("stab");
  RunConfig cfg;
  cfg.command = Command::stability;
  cfg.models_str = "qce,qnl";
  cfg.potential_str = "lj";
  cfg.n_list = {16, 32};
  cfg.trials = 25;
  cfg.out_prefix = (dir / "st_").string();
  REQUIRE(run_quiet(cfg) == 0);
  const std::string text = slurp(dir / "st_stability.csv");
  CHECK(text.find("model,N,K,nu_theory,min_ratio") != std::string::npos);
  CHECK(text.find("\nqce,16,") != std::string::npos);
  CHECK(text.find("\nqnl,32,") != std::string::npos);
}

TEST_CASE("configuration errors name the offending key", "[cli]") {
  RunConfig cfg;
  cfg.command = Command::sweep;
  cfg.models_str = "qnl";
  cfg.load_str = "sin:1,1";
  cfg.out_prefix = "/tmp/never_";

  cfg.n_list = {16, 32, 64};  // too few levels
  CHECK_THROWS_AS(run_quiet(cfg), ConfigError);

  cfg.n_list = {16, 24, 32, 64};  // 24 is not 16 * 2^k
  CHECK_THROWS_MATCHES(run_quiet(cfg), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("N")));

  cfg.n_list = {16, 32, 64, 128};
  cfg.k_rule_str = "frac:0.9";  // K = round(0.9 * 16) = 14 = N - 2 is legal...
  cfg.k_rule_str = "frac:0.95";  // ...but 15 > N-2 is not
  CHECK_THROWS_MATCHES(run_quiet(cfg), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("K")));

  cfg.k_rule_str = "third:0.25";
  CHECK_THROWS_AS(run_quiet(cfg), ConfigError);

  cfg.k_rule_str = "frac:0.25";
  cfg.models_str = "spring";
  CHECK_THROWS_MATCHES(run_quiet(cfg), ConfigError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("model")));
}

TEST_CASE("assumption violations surface as typed errors", "[cli]") {
  RunConfig cfg;
  cfg.command = Command::sweep;
  cfg.models_str = "qnl";
  cfg.potential_str = "explicit:0,0.1,0,-0.1";  // c_cont < 0: no exact solution
  cfg.load_str = "sin:1,1";
  cfg.n_list = {16, 32, 64, 128};
  cfg.out_prefix = (scratch_dir("assume") / "a_").string();
  // every level fails with an AssumptionError annotation; the sweep writes a
  // partial report and exits with the assumption-violation code
  std::ostringstream log, err;
  CHECK(run(cfg, log, err) == 3);
  CHECK(err.str().find("failed") != std::string::npos);
}

TEST_CASE("unwritable output prefix raises an io error", "[cli]") {
  RunConfig cfg;
  cfg.command = Command::ghost;
  cfg.potential_str = "lj";
  cfg.n_list = {16};
  cfg.out_prefix = "/nonexistent_dir_qc1d/x_";
  CHECK_THROWS_AS(run_quiet(cfg), IoError);
}

TEST_CASE("meta line records potential, strain, and coefficients", "[cli]") {
  const fs::path dir = scratch_dir("meta");
  RunConfig cfg;
  cfg.command = Command::ghost;
  cfg.potential_str = "lj";
  cfg.strain = 1.0;
  cfg.n_list = {16};
  cfg.out_prefix = (dir / "m_").string();
  REQUIRE(run_quiet(cfg) == 0);
  const std::string text = slurp(dir / "m_ghost_N16.csv");
  const std::string meta = text.substr(0, text.find('\n'));
  CHECK(meta.find("tool=qc1d") != std::string::npos);
  CHECK(meta.find("version=") != std::string::npos);
  CHECK(meta.find("potential=lj") != std::string::npos);
  CHECK(meta.find("F=1") != std::string::npos);
  CHECK(meta.find("phi2F=72") != std::string::npos);
  CHECK(meta.find("phi2_2F=-0.318603515625") != std::string::npos);
}
