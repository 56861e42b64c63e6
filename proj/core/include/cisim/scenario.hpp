#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "cisim/lindblad.hpp"
#include "cisim/ode.hpp"
#include "cisim/quantum_core.hpp"
#include "cisim/time_series.hpp"

namespace cisim::scenario {

inline constexpr int kSchemaVersion = 1;

// Numbers, equal-length numeric lists (zipped into rows) or flags.
using ParamValue = std::variant<double, std::vector<double>, bool>;

struct InitialStateSpec {
  std::string qubit = "minus";  // "plus" | "minus"
  std::vector<double> alpha0;   // real displacement of mode a; one entry per row or a single value
  std::string alpha0_units = "alpha_g";  // "alpha_g" | "absolute"
  int mode_b_fock = 0;
};

struct TimeGridSpec {
  double t_end_us = 0.0;
  int points = 0;
};

struct OutputSpec {
  bool wigner = true;
  int wigner_points = 61;
};

struct ConvergenceSpec {
  std::string rows = "all";  // "all" | "last"
};

// Fully resolved configuration: parse_config fills every default, so the echo
// in the manifest reproduces the run.
struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  std::string scenario;
  std::uint64_t seed = 0;
  std::map<std::string, ParamValue> parameters;
  InitialStateSpec initial_state;
  TimeGridSpec time_grid;
  std::map<std::string, int> truncations;
  OdeOptions integrator;
  OutputSpec output;
  ConvergenceSpec convergence;
};

std::vector<std::string> scenario_names();
ScenarioConfig default_config(const std::string& name);

// Throws ValidationError carrying the offending field path.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::filesystem::path& path);
std::string to_json(const ScenarioConfig& cfg, int indent = 2);

// Row values after zipping list-valued parameters (and alpha0 in absolute units).
std::vector<std::map<std::string, double>> expand_rows(const ScenarioConfig& cfg);

struct RunOptions {
  std::filesystem::path out_dir;  // empty: nothing is written
  bool run_convergence = true;
  unsigned threads = 0;
};

struct RowResult {
  std::map<std::string, double> values;
  std::vector<TimeSeries> series;  // simulated observables followed by overlays
  InvariantReport invariants;
  OdeStats stats;
};

struct ConvergenceSummary {
  bool checked = false;
  bool pass = true;
  std::vector<std::size_t> rows;
  double max_deviation = 0.0;
  double tolerance_deviation = 0.0;
  double truncation_deviation = 0.0;
  std::string worst_observable;
  std::map<std::string, double> deviations;  // per observable, max over checked rows
  std::vector<int> enlarged_dims;
  double threshold = 1e-5;
};

struct RunResult {
  ScenarioConfig config;
  std::vector<RowResult> rows;
  std::map<std::string, double> metrics;
  std::map<std::string, QuantumState> states;  // reduced or conditional states
  ConvergenceSummary convergence;
  bool invariants_ok = true;
  double wall_clock_s = 0.0;
  std::vector<std::filesystem::path> files;  // outputs, manifest last
};

RunResult run(const ScenarioConfig& cfg, const RunOptions& opt = {});

}  // namespace cisim::scenario
