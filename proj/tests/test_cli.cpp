#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "cisim/io.hpp"
#include "cisim/quantum_core.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cisim::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("cisim_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

double value_after(const std::string& text, const std::string& key) {
  const auto pos = text.find(key + " = ");
  if (pos == std::string::npos) return NAN;
  return std::stod(text.substr(pos + key.size() + 3));
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 64);
  auto r = run_cli({"teleport"});
  EXPECT_EQ(r.code, 64);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run_cli({"oracle", "revival", "--warp", "9"}).code, 64);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, RevivalOracle) {
  auto half = run_cli({"oracle", "revival", "--beta", "1", "--delta-khz", "100", "--t-us", "5"});
  ASSERT_EQ(half.code, 0) << half.err;
  EXPECT_NEAR(value_after(half.out, "revival_probability"), std::exp(-4.0), 1e-8);
  auto full = run_cli({"oracle", "revival", "--beta", "1", "--delta-khz", "100", "--t-us", "10"});
  EXPECT_NEAR(value_after(full.out, "revival_probability"), 1.0, 1e-8);
}

TEST(Cli, OracleMissingParameterIsValidationError) {
  auto r = run_cli({"oracle", "chevron", "--g-khz", "150"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("required"), std::string::npos);
  EXPECT_EQ(run_cli({"oracle", "nonsense"}).code, 2);
}

TEST(Cli, OtherOracles) {
  auto r = run_cli({"oracle", "measurement-rate", "--g-khz", "117", "--kappa-khz", "320"});
  ASSERT_EQ(r.code, 0);
  const double g = 2 * M_PI * 0.117, k = 2 * M_PI * 0.320;
  EXPECT_NEAR(value_after(r.out, "measurement_rate_per_us"), g * g * k / (k * k / 4), 1e-7);
  EXPECT_EQ(run_cli({"oracle", "dephasing", "--g-khz", "117", "--kappa-khz", "320", "--t-us", "1"}).code, 0);
  EXPECT_EQ(run_cli({"oracle", "positive-p", "--g-khz", "117", "--kappa-khz", "320", "--t-us", "1"}).code, 0);
  EXPECT_EQ(
      run_cli({"oracle", "zeno", "--case", "a", "--gap-khz", "0", "--g-khz", "117", "--kappa-khz", "320"}).code, 0);
}

TEST(Cli, NullKerr) {
  auto r = run_cli({"nullkerr", "--anharm-mhz", "244", "--rabi-mhz", "80"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::isfinite(value_after(r.out, "delta_r_mhz")));
  EXPECT_EQ(run_cli({"nullkerr", "--anharm-mhz", "244"}).code, 64);
}

TEST(Cli, SimulateMisspelledKey) {
  auto d = scratch("typo");
  auto cfg = write(d / "c.json", R"({"schema_version": 1, "scenario": "chevron", "parameters": {"g_khzz": 150}})");
  auto r = run_cli({"simulate", cfg.string(), "--out-dir", d.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("g_khzz"), std::string::npos);
}

TEST(Cli, SimulateWritesOutputsAndHonorsSeed) {
  auto d = scratch("sim");
  auto cfg = write(d / "c.json", R"({"schema_version": 1, "scenario": "chevron", "parameters": {"noise_sigma": 0.01}})");
  auto r = run_cli({"--seed", "99", "simulate", cfg.string(), "--out-dir", (d / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(d / "out" / "chevron.csv"));
  std::ifstream m(d / "out" / "chevron_manifest.json");
  std::stringstream ss;
  ss << m.rdbuf();
  EXPECT_NE(ss.str().find("\"seed\": 99"), std::string::npos);

  auto fr = run_cli({"fit", (d / "out" / "chevron.csv").string(), "--model", "chevron"});
  ASSERT_EQ(fr.code, 0) << fr.err << fr.out;
  EXPECT_NEAR(value_after(fr.out, "g_khz") / 150.0, 1.0, 0.03);
  EXPECT_NEAR(value_after(fr.out, "kappa_khz") / 320.0, 1.0, 0.03);
}

TEST(Cli, ConvergenceFailureExitCode) {
  auto d = scratch("conv");
  auto cfg = write(d / "c.json", R"({"schema_version": 1, "scenario": "revivals",
    "parameters": {"delta_a_khz": [457]}, "integrator": {"method": "rk4", "fixed_step_us": 0.05},
    "time_grid": {"t_end_us": 2.0, "points": 11}})");
  auto r = run_cli({"simulate", cfg.string(), "--out-dir", (d / "a").string()});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("convergence"), std::string::npos);
  auto ok = run_cli({"--allow-unconverged", "simulate", cfg.string(), "--out-dir", (d / "b").string()});
  EXPECT_EQ(ok.code, 0);
}

TEST(Cli, FitValidation) {
  auto d = scratch("fit");
  auto csv = write(d / "x.csv", "t_us,value\n0,1\n1,0.5\n2,0.25\n3,0.125\n");
  auto r = run_cli({"fit", csv.string(), "--model", "exp_decay", "--out-dir", d.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(value_after(r.out, "T_us"), 1.0 / std::log(2.0), 1e-6);
  EXPECT_TRUE(fs::exists(d / "fit_result.json"));
  EXPECT_EQ(run_cli({"fit", csv.string(), "--model", "banana"}).code, 2);
  EXPECT_EQ(run_cli({"fit", csv.string(), "--model", "exp_decay", "--freeze", "Q=1"}).code, 2);
  EXPECT_EQ(run_cli({"fit", csv.string(), "--model", "chevron"}).code, 2);
}

TEST(Cli, RwaCheck) {
  auto d = scratch("rwa");
  auto good = write(d / "p.json", R"({"chi_mhz": 0.3, "delta_c_khz": 150, "omega_r_mhz": 80})");
  auto r = run_cli({"rwa-check", good.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(value_after(r.out, "g_khz"), 150.0, 1e-6);
  auto bad = write(d / "q.json", R"({"chi_mhz": 0.3, "delta_c_khz": 150, "omega_r_mhz": 80, "omega": 1})");
  auto b = run_cli({"rwa-check", bad.string()});
  EXPECT_EQ(b.code, 2);
  EXPECT_NE(b.err.find("omega"), std::string::npos);
}

TEST(Cli, WignerFromStateFile) {
  auto d = scratch("wig");
  cisim::io::write_state_json(d / "s.json", cisim::coherent_state(0.0, 8));
  auto r = run_cli({"wigner", (d / "s.json").string(), "--grid", "-1:1:3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("6.36619772e-01"), std::string::npos) << r.out;
  EXPECT_EQ(run_cli({"wigner", (d / "s.json").string(), "--grid", "1:0:3"}).code, 2);
}
