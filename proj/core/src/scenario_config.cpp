#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cisim/error.hpp"
#include "cisim/hamiltonians.hpp"
#include "scenario_schema.hpp"

namespace cisim::scenario {

using nlohmann::json;
using detail::Schema;

namespace detail {

namespace {

using List = std::vector<double>;

std::map<std::string, Schema> build_registry() {
  std::map<std::string, Schema> r;
  const std::set<std::string> all_initial{"qubit", "alpha0", "alpha0_units", "mode_b_fock"};

  Schema s;
  s.name = "revivals";
  s.parameters = {{"g_x_khz", 450.0}, {"delta_a_khz", List{457.0, 355.0, 246.0}}};
  s.initial_keys = {"qubit", "alpha0", "alpha0_units"};
  s.initial.alpha0 = {0.0};
  s.initial.alpha0_units = "absolute";
  s.grid = {8.2, 411};
  s.truncation_keys = {"mode_a"};
  r[s.name] = s;

  s = {};
  s.name = "dephasing";
  s.parameters = {{"g_y_khz", 117.0}, {"kappa_b_khz", 320.0}, {"delta_b_khz", List{0.0, 400.0, 800.0}}};
  s.initial_keys = {"qubit", "mode_b_fock"};
  s.grid = {10.0, 201};
  s.truncation_keys = {"mode_b"};
  r[s.name] = s;

  s = {};
  s.name = "aligned_revivals";
  s.parameters = {{"g_x_khz", 410.0}, {"delta_a_khz", 324.0}, {"g_y_khz", 156.0},
                  {"delta_b_khz", 0.0}, {"kappa_b_khz", 320.0},  {"t2_rho_us", 50.0}};
  s.initial_keys = all_initial;
  s.initial.alpha0 = {0.0, 0.5, 1.0};
  s.grid = {10.0, 201};
  s.truncation_keys = {"mode_a", "mode_b"};
  s.convergence_rows = "last";
  r[s.name] = s;

  s = {};
  s.name = "branching_wigner";
  s.parameters = {{"g_x_khz", 410.0}, {"delta_a_khz", 324.0}, {"g_y_khz", 156.0},
                  {"delta_b_khz", 0.0}, {"kappa_b_khz", 320.0},  {"t2_rho_us", 51.7}};
  s.initial_keys = all_initial;
  s.initial.alpha0 = {1.0};
  s.grid = {10.0, 101};
  s.truncation_keys = {"mode_a", "mode_b"};
  s.convergence_rows = "last";
  r[s.name] = s;

  s = {};
  s.name = "conical_intersection";
  s.parameters = {{"g_x_khz", 158.0},     {"delta_a_khz", 125.8}, {"g_y_khz", 115.0},
                  {"delta_b_khz", 0.0},   {"kappa_b_khz", 320.0},
                  {"t2_rho_us", List{51.7, 51.1, 57.8, 53.9, 48.8}},
                  {"snapshot_1_us", 2.0}, {"snapshot_2_us", 6.0}};
  s.initial_keys = all_initial;
  s.initial.alpha0 = {0.0, 0.5, 1.0, 1.5, 2.0};
  s.grid = {8.0, 161};
  s.truncation_keys = {"mode_a", "mode_b"};
  s.fixed_truncations = {{"mode_a", 35}, {"mode_b", 8}};
  s.convergence_rows = "last";
  r[s.name] = s;

  s = {};
  s.name = "chevron";
  List deltas;
  for (int k = 0; k <= 40; ++k) deltas.push_back(-1000.0 + 50.0 * k);
  s.parameters = {{"g_khz", 150.0}, {"kappa_khz", 320.0}, {"delta_khz", deltas},
                  {"red_sideband", false}, {"noise_sigma", 0.0}};
  s.initial_keys = {};
  s.grid = {10.0, 201};
  s.truncation_keys = {"mode"};
  s.fixed_truncations = {{"mode", 2}};
  r[s.name] = s;

  s = {};
  s.name = "decode_scan";
  s.parameters = {{"rabi_mhz", 80.0},          {"static_detuning_mhz", 7.0}, {"t2_rho_us", 27.0},
                  {"decode_min_mhz", 72.5},    {"decode_max_mhz", 73.5},     {"decode_points", 101.0},
                  {"noise_sigma", 0.0}};
  s.initial_keys = {};
  s.grid = {40.0, 401};
  r[s.name] = s;

  s = {};
  s.name = "zeno_trajectory";
  s.parameters = {{"g_x_khz", 158.0},   {"delta_a_khz", 125.8}, {"g_y_khz", 115.0},
                  {"delta_b_khz", 0.0}, {"kappa_b_khz", 320.0},
                  {"t2_rho_us", List{51.7, 51.1, 57.8, 53.9, 48.8}},
                  {"compare_full_model", false}};
  s.initial_keys = all_initial;
  s.initial.alpha0 = {0.0, 0.5, 1.0, 1.5, 2.0};
  s.grid = {8.0, 161};
  s.truncation_keys = {"mode_b", "mode_a"};
  s.fixed_truncations = {{"mode_b", 8}, {"mode_a", 35}};
  r[s.name] = s;
  return r;
}

const std::map<std::string, Schema>& registry() {
  static const std::map<std::string, Schema> r = build_registry();
  return r;
}

double khz(const std::map<std::string, double>& row, const std::string& key) { return row.at(key); }

}  // namespace

const Schema& schema(const std::string& name) {
  const auto& r = registry();
  auto it = r.find(name);
  if (it == r.end()) throw ValidationError("scenario", "unknown scenario '" + name + "'");
  return it->second;
}

std::map<std::string, int> auto_truncations(const std::string& scenario,
                                            const std::map<std::string, double>& row) {
  std::map<std::string, int> t;
  const double sign = row.count("qubit_sign") ? row.at("qubit_sign") : -1.0;
  // Mode a circles its branch center +-alpha_g; a qubit flip moves it to the other center.
  auto mode_a = [&](bool both_branches) {
    const double ag = khz(row, "g_x_khz") / khz(row, "delta_a_khz");
    const double a0 = row.count("alpha0") ? row.at("alpha0") : 0.0;
    const double center = -sign * ag;
    double amp = std::abs(center) + std::abs(a0 - center);
    if (both_branches) amp = std::max(amp, std::abs(center) + std::abs(a0 + center));
    return min_coherent_dim(amp);
  };
  // Steady conditional field g / |Delta - i kappa/2|; detuned drives can overshoot by 2x.
  auto mode_b = [&] {
    const double g = khz(row, "g_y_khz"), k = khz(row, "kappa_b_khz"), d = khz(row, "delta_b_khz");
    const double amp = g / std::hypot(d, k / 2.0) * (d == 0.0 ? 1.0 : 2.0);
    return min_coherent_dim(amp);
  };
  if (scenario == "revivals") t["mode_a"] = mode_a(false);
  if (scenario == "dephasing") t["mode_b"] = mode_b();
  if (scenario == "aligned_revivals" || scenario == "branching_wigner") {
    t["mode_a"] = mode_a(true);
    t["mode_b"] = mode_b();
  }
  return t;
}

std::map<std::string, int> row_truncations(const ScenarioConfig& cfg,
                                           const std::map<std::string, double>& row) {
  const Schema& s = schema(cfg.scenario);
  std::map<std::string, int> t = s.fixed_truncations;
  for (const auto& [k, v] : auto_truncations(cfg.scenario, row)) t[k] = v;
  for (const auto& [k, v] : cfg.truncations) t[k] = v;
  return t;
}

}  // namespace detail

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ValidationError(path, what); }

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) fail(path.empty() ? item.key() : path + "." + item.key(), "unknown field");
}

std::vector<double> get_numbers(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array() || j.empty()) fail(path, "expected a number or a non-empty list of numbers");
  std::vector<double> v;
  for (std::size_t k = 0; k < j.size(); ++k) v.push_back(get_number(j[k], path + "[" + std::to_string(k) + "]"));
  return v;
}

json param_to_json(const ParamValue& v) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  if (const bool* b = std::get_if<bool>(&v)) return *b;
  return std::get<std::vector<double>>(v);
}

const char* method_name(OdeMethod m) { return m == OdeMethod::RK4 ? "rk4" : "dp45"; }

void check_resolved(const ScenarioConfig& c) {
  if (!(c.time_grid.t_end_us > 0.0)) fail("time_grid.t_end_us", "must be > 0");
  if (c.time_grid.points < 2) fail("time_grid.points", "time grid is empty; need at least 2 points");
  if (c.initial_state.qubit != "plus" && c.initial_state.qubit != "minus")
    fail("initial_state.qubit", "expected \"plus\" or \"minus\"");
  if (c.initial_state.alpha0_units != "alpha_g" && c.initial_state.alpha0_units != "absolute")
    fail("initial_state.alpha0_units", "expected \"alpha_g\" or \"absolute\"");
  if (c.initial_state.mode_b_fock < 0) fail("initial_state.mode_b_fock", "must be >= 0");
  for (const auto& [k, v] : c.truncations)
    if (v < 2) fail("truncations." + k, "must be >= 2");
  if (!(c.integrator.rtol > 0.0)) fail("integrator.rtol", "must be > 0");
  if (!(c.integrator.atol > 0.0)) fail("integrator.atol", "must be > 0");
  if (!(c.integrator.fixed_step > 0.0)) fail("integrator.fixed_step_us", "must be > 0");
  if (c.output.wigner_points < 3) fail("output.wigner_points", "must be >= 3");
  if (c.convergence.rows != "all" && c.convergence.rows != "last")
    fail("convergence.rows", "expected \"all\" or \"last\"");
  expand_rows(c);
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"revivals",      "dephasing", "aligned_revivals", "branching_wigner", "conical_intersection",
          "chevron",       "decode_scan", "zeno_trajectory"};
}

ScenarioConfig default_config(const std::string& name) {
  const Schema& s = detail::schema(name);
  ScenarioConfig c;
  c.scenario = name;
  c.parameters = s.parameters;
  c.initial_state = s.initial;
  c.time_grid = s.grid;
  c.convergence.rows = s.convergence_rows;
  return c;
}

ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("", std::string("malformed JSON: ") + e.what());
  }
  require_object(j, "(root)");
  check_keys(j, "", {"schema_version", "scenario", "seed", "parameters", "initial_state", "time_grid",
                     "truncations", "integrator", "output", "convergence"});
  if (!j.contains("schema_version")) fail("schema_version", "required field missing");
  if (!j.contains("scenario")) fail("scenario", "required field missing");
  const int version = get_int(j["schema_version"], "schema_version");
  if (version != kSchemaVersion)
    fail("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                               std::to_string(kSchemaVersion) + ")");
  ScenarioConfig c = default_config(get_string(j["scenario"], "scenario"));
  const Schema& s = detail::schema(c.scenario);

  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      fail("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }

  if (j.contains("parameters")) {
    const json& p = j["parameters"];
    require_object(p, "parameters");
    for (const auto& item : p.items()) {
      const std::string path = "parameters." + item.key();
      auto it = c.parameters.find(item.key());
      if (it == c.parameters.end()) fail(path, "unknown field");
      if (std::holds_alternative<bool>(it->second)) {
        if (!item.value().is_boolean()) fail(path, "expected true or false");
        it->second = item.value().get<bool>();
      } else if (item.value().is_array()) {
        it->second = get_numbers(item.value(), path);
      } else {
        it->second = get_number(item.value(), path);
      }
    }
  }

  if (j.contains("initial_state")) {
    const json& is = j["initial_state"];
    require_object(is, "initial_state");
    check_keys(is, "initial_state", s.initial_keys);
    if (is.contains("qubit")) c.initial_state.qubit = get_string(is["qubit"], "initial_state.qubit");
    if (is.contains("alpha0")) c.initial_state.alpha0 = get_numbers(is["alpha0"], "initial_state.alpha0");
    if (is.contains("alpha0_units"))
      c.initial_state.alpha0_units = get_string(is["alpha0_units"], "initial_state.alpha0_units");
    if (is.contains("mode_b_fock"))
      c.initial_state.mode_b_fock = get_int(is["mode_b_fock"], "initial_state.mode_b_fock");
  }

  if (j.contains("time_grid")) {
    const json& g = j["time_grid"];
    require_object(g, "time_grid");
    check_keys(g, "time_grid", {"t_end_us", "points"});
    if (g.contains("t_end_us")) c.time_grid.t_end_us = get_number(g["t_end_us"], "time_grid.t_end_us");
    if (g.contains("points")) c.time_grid.points = get_int(g["points"], "time_grid.points");
  }

  if (j.contains("truncations")) {
    const json& t = j["truncations"];
    require_object(t, "truncations");
    check_keys(t, "truncations", {s.truncation_keys.begin(), s.truncation_keys.end()});
    for (const auto& item : t.items())
      c.truncations[item.key()] = get_int(item.value(), "truncations." + item.key());
  }

  if (j.contains("integrator")) {
    const json& g = j["integrator"];
    require_object(g, "integrator");
    check_keys(g, "integrator", {"method", "rtol", "atol", "fixed_step_us"});
    if (g.contains("method")) {
      const std::string m = get_string(g["method"], "integrator.method");
      if (m == "dp45") c.integrator.method = OdeMethod::DormandPrince45;
      else if (m == "rk4") c.integrator.method = OdeMethod::RK4;
      else fail("integrator.method", "expected \"dp45\" or \"rk4\"");
    }
    if (g.contains("rtol")) c.integrator.rtol = get_number(g["rtol"], "integrator.rtol");
    if (g.contains("atol")) c.integrator.atol = get_number(g["atol"], "integrator.atol");
    if (g.contains("fixed_step_us"))
      c.integrator.fixed_step = get_number(g["fixed_step_us"], "integrator.fixed_step_us");
  }

  if (j.contains("output")) {
    const json& o = j["output"];
    require_object(o, "output");
    check_keys(o, "output", {"wigner", "wigner_points"});
    if (o.contains("wigner")) {
      if (!o["wigner"].is_boolean()) fail("output.wigner", "expected true or false");
      c.output.wigner = o["wigner"].get<bool>();
    }
    if (o.contains("wigner_points")) c.output.wigner_points = get_int(o["wigner_points"], "output.wigner_points");
  }

  if (j.contains("convergence")) {
    const json& o = j["convergence"];
    require_object(o, "convergence");
    check_keys(o, "convergence", {"rows"});
    if (o.contains("rows")) c.convergence.rows = get_string(o["rows"], "convergence.rows");
  }

  check_resolved(c);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError(path.string(), "cannot open config file");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const ScenarioConfig& c, int indent) {
  json j;
  j["schema_version"] = c.schema_version;
  j["scenario"] = c.scenario;
  j["seed"] = c.seed;
  json p = json::object();
  for (const auto& [k, v] : c.parameters) p[k] = param_to_json(v);
  j["parameters"] = p;
  const Schema& s = detail::schema(c.scenario);
  json is = json::object();
  if (s.initial_keys.count("qubit")) is["qubit"] = c.initial_state.qubit;
  if (s.initial_keys.count("alpha0")) is["alpha0"] = c.initial_state.alpha0;
  if (s.initial_keys.count("alpha0_units")) is["alpha0_units"] = c.initial_state.alpha0_units;
  if (s.initial_keys.count("mode_b_fock")) is["mode_b_fock"] = c.initial_state.mode_b_fock;
  j["initial_state"] = is;
  j["time_grid"] = {{"t_end_us", c.time_grid.t_end_us}, {"points", c.time_grid.points}};
  json t = json::object();
  for (const auto& [k, v] : c.truncations) t[k] = v;
  j["truncations"] = t;
  j["integrator"] = {{"method", method_name(c.integrator.method)},
                     {"rtol", c.integrator.rtol},
                     {"atol", c.integrator.atol},
                     {"fixed_step_us", c.integrator.fixed_step}};
  j["output"] = {{"wigner", c.output.wigner}, {"wigner_points", c.output.wigner_points}};
  j["convergence"] = {{"rows", c.convergence.rows}};
  return j.dump(indent);
}

std::vector<std::map<std::string, double>> expand_rows(const ScenarioConfig& c) {
  std::size_t n = 1;
  std::string list_key;
  auto take = [&](const std::string& key, std::size_t len) {
    if (len == 1) return;
    if (n != 1 && len != n)
      fail(key, "list length " + std::to_string(len) + " does not match '" + list_key + "' (" +
                    std::to_string(n) + ")");
    n = len;
    list_key = key;
  };
  for (const auto& [k, v] : c.parameters)
    if (const auto* l = std::get_if<std::vector<double>>(&v)) take("parameters." + k, l->size());
  const bool has_alpha = detail::schema(c.scenario).initial_keys.count("alpha0") > 0;
  if (has_alpha) take("initial_state.alpha0", c.initial_state.alpha0.size());

  std::vector<std::map<std::string, double>> rows(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto& row = rows[r];
    for (const auto& [k, v] : c.parameters) {
      if (const double* d = std::get_if<double>(&v)) row[k] = *d;
      else if (const bool* b = std::get_if<bool>(&v)) row[k] = *b ? 1.0 : 0.0;
      else {
        const auto& l = std::get<std::vector<double>>(v);
        row[k] = l.size() == 1 ? l[0] : l[r];
      }
    }
    row["qubit_sign"] = c.initial_state.qubit == "plus" ? 1.0 : -1.0;
    if (has_alpha) {
      const auto& a = c.initial_state.alpha0;
      const double a0 = a.empty() ? 0.0 : (a.size() == 1 ? a[0] : a[r]);
      row["alpha0_input"] = a0;
      if (c.initial_state.alpha0_units == "alpha_g") {
        if (!row.count("g_x_khz") || !row.count("delta_a_khz"))
          fail("initial_state.alpha0_units", "alpha_g units need g_x_khz and delta_a_khz");
        row["alpha0"] = a0 * row.at("g_x_khz") / row.at("delta_a_khz");
      } else {
        row["alpha0"] = a0;
      }
    }
  }
  return rows;
}

}  // namespace cisim::scenario
