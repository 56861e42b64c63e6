#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "cisim/driven_frame.hpp"
#include "cisim/error.hpp"
#include "cisim/fit.hpp"
#include "cisim/io.hpp"
#include "cisim/oracles.hpp"
#include "cisim/phase_space.hpp"
#include "cisim/scenario.hpp"

namespace cisim::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out_dir = "cisim_out";
  bool out_dir_given = false;
  bool allow_unconverged = false;
  unsigned threads = 0;
};

std::string num(double v) { return io::format_number(v); }

// "k=v" pairs for --freeze / --guess.
std::pair<std::string, double> key_value(const std::string& s, const std::string& flag) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError(flag, "expected name=value, got '" + s + "'");
  try {
    std::size_t used = 0;
    const double v = std::stod(s.substr(eq + 1), &used);
    if (used != s.size() - eq - 1) throw std::invalid_argument(s);
    return {s.substr(0, eq), v};
  } catch (const std::exception&) {
    throw ValidationError(flag, "not a number in '" + s + "'");
  }
}

// lo:hi:n
std::vector<double> parse_axis(const std::string& s, const std::string& flag) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw ValidationError(flag, "expected lo:hi:n, got '" + s + "'");
  try {
    const double lo = std::stod(parts[0]), hi = std::stod(parts[1]);
    const int n = std::stoi(parts[2]);
    if (n < 2 || !(hi > lo)) throw ValidationError(flag, "need hi > lo and n >= 2");
    return linspace(lo, hi, n);
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError(flag, "expected lo:hi:n, got '" + s + "'");
  }
}

int cmd_simulate(const std::string& config, const Globals& g, std::ostream& out, std::ostream& err) {
  scenario::ScenarioConfig cfg = scenario::load_config(config);
  if (g.seed) cfg.seed = *g.seed;
  scenario::RunOptions opt;
  opt.out_dir = g.out_dir;
  opt.threads = g.threads;
  const scenario::RunResult r = scenario::run(cfg, opt);
  out << "scenario " << cfg.scenario << ": " << r.rows.size() << " row(s), " << num(r.wall_clock_s) << " s\n";
  for (const auto& [k, v] : r.metrics) out << "  " << k << " = " << num(v) << "\n";
  out << "invariants: " << (r.invariants_ok ? "within bounds" : "OUT OF BOUNDS") << "\n";
  const auto& c = r.convergence;
  out << "convergence: " << (c.pass ? "PASS" : "FAIL") << " (max deviation " << num(c.max_deviation)
      << ", threshold " << num(c.threshold) << ")\n";
  for (const auto& [label, d] : c.deviations) out << "  " << label << ": " << num(d) << "\n";
  out << "manifest: " << r.files.back().string() << "\n";
  if (!c.pass) {
    err << "convergence check failed: worst observable '" << c.worst_observable << "', tolerance deviation "
        << num(c.tolerance_deviation) << ", truncation deviation " << num(c.truncation_deviation) << "\n";
    if (!g.allow_unconverged) return kConvergence;
  }
  return kOk;
}

struct FitArgs {
  std::string data;
  std::string model;
  std::vector<std::string> freeze, guess, release;
};

int cmd_fit(const FitArgs& a, const Globals& g, std::ostream& out) {
  fit::FitModel m = fit::FitModel::by_name(a.model);
  auto known = [&](const std::string& name, const std::string& flag) {
    for (const auto& p : m.parameters())
      if (p.name == name) return;
    throw ValidationError(flag, "model '" + a.model + "' has no parameter '" + name + "'");
  };
  for (const auto& s : a.freeze) {
    const auto [k, v] = key_value(s, "--freeze");
    known(k, "--freeze");
    m.freeze(k, v);
  }
  for (const auto& s : a.guess) {
    const auto [k, v] = key_value(s, "--guess");
    known(k, "--guess");
    m.set(k, v);
  }
  for (const auto& k : a.release) {
    known(k, "--release");
    m.release(k);
  }
  const fit::DataSet d = io::read_fit_csv(a.data);
  if (m.two_dimensional() != !d.delta_khz.empty())
    throw ValidationError(a.data, m.two_dimensional() ? "model needs (t_us, delta_khz, value) columns"
                                                      : "model needs (t_us, value) columns");
  const fit::FitResult r = fit::fit(m, d);
  out << "model " << m.name() << ": " << r.status << " after " << r.iterations << " iterations\n";
  for (const auto& e : r.estimates)
    out << "  " << e.name << " = " << num(e.value) << (e.free ? " +/- " + num(e.sigma) : std::string(" (fixed)"))
        << "\n";
  out << "  residual_norm = " << num(r.residual_norm) << "\n";
  for (const auto& u : r.unidentifiable) out << "  unidentifiable: " << u << "\n";
  if (g.out_dir_given) {
    json j;
    j["model"] = m.name();
    j["status"] = r.status;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["residual_norm"] = r.residual_norm;
    for (const auto& e : r.estimates)
      j["estimates"][e.name] = {{"value", e.value}, {"sigma", std::isfinite(e.sigma) ? json(e.sigma) : json(nullptr)},
                                {"free", e.free}};
    j["unidentifiable"] = r.unidentifiable;
    fs::create_directories(g.out_dir);
    std::ofstream f(fs::path(g.out_dir) / "fit_result.json", std::ios::binary);
    f << j.dump(2) << "\n";
  }
  return r.converged ? kOk : kConvergence;
}

int cmd_nullkerr(double anharm_mhz, double rabi_mhz, int levels, std::ostream& out) {
  const auto r = driven::null_cross_kerr(FrequencyParam::mhz(anharm_mhz), FrequencyParam::mhz(rabi_mhz), levels);
  out << "delta_r_mhz = " << num(r.delta_r.mhz()) << "\n";
  out << "epsilon_r_mhz = " << num(r.epsilon_r.mhz()) << "\n";
  out << "residual_over_chi = " << num(r.residual_over_chi) << "\n";
  return kOk;
}

int cmd_rwa(const std::string& path, std::ostream& out) {
  std::ifstream f(path);
  if (!f) throw ValidationError(path, "cannot open parameter file");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ValidationError(path, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError(path, "expected an object");
  const std::set<std::string> allowed{"chi_mhz",     "xi0",          "phi_delta",  "phi_sigma",  "u_pm",
                                      "delta_c_khz", "omega_r_mhz",  "photon_scale", "x_expect", "threshold",
                                      "verify",      "horizon_us",   "cavity_dim"};
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) throw ValidationError(item.key(), "unknown field");
  auto number = [&](const char* key, std::optional<double> def) {
    if (!j.contains(key)) {
      if (!def) throw ValidationError(key, "required field missing");
      return *def;
    }
    if (!j[key].is_number()) throw ValidationError(key, "expected a number");
    return j[key].get<double>();
  };
  driven::EngineeringParams eng;
  eng.chi = FrequencyParam::mhz(number("chi_mhz", std::nullopt));
  eng.xi0 = number("xi0", 1.0);
  eng.phi_delta = number("phi_delta", 0.0);
  eng.phi_sigma = number("phi_sigma", 0.0);
  eng.u_pm = number("u_pm", 0.5);
  const auto delta_c = FrequencyParam::khz(number("delta_c_khz", std::nullopt));
  const auto omega_r = FrequencyParam::mhz(number("omega_r_mhz", std::nullopt));
  const auto rep = driven::rwa_conditions(eng, delta_c, omega_r, number("photon_scale", 1.0),
                                          number("x_expect", 1.0), number("threshold", 0.05));
  auto flag = [](bool ok) { return ok ? "ok" : "VIOLATED"; };
  out << "g_khz = " << num(FrequencyParam::rad_per_us(rep.g).khz()) << "\n";
  out << "displacement_ratio = " << num(rep.displacement_ratio) << " " << flag(rep.displacement_ok) << "\n";
  out << "photon_ratio = " << num(rep.photon_ratio) << " " << flag(rep.photon_ok) << "\n";
  out << "drive_ratio = " << num(rep.drive_ratio) << " " << flag(rep.drive_ok) << "\n";
  out << "chi_over_g = " << num(rep.chi_over_g) << "\n";
  out << "optimal_xi0 = " << num(rep.optimal_xi0) << "\n";
  bool verify = false;
  if (j.contains("verify")) {
    if (!j["verify"].is_boolean()) throw ValidationError("verify", "expected true or false");
    verify = j["verify"].get<bool>();
  }
  if (verify) {
    driven::EffectiveCheck c;
    c.eng = eng;
    c.delta_c = delta_c;
    c.omega_r = omega_r;
    c.horizon_us = number("horizon_us", 0.0);
    c.cavity_dim = int(number("cavity_dim", 14));
    const auto v = driven::verify_effective_hamiltonian(c);
    out << "effective_infidelity = " << num(v.infidelity) << " (horizon " << num(v.horizon_us) << " us)\n";
  }
  out << "rwa: " << (rep.all_ok() ? "all conditions satisfied" : "conditions violated") << "\n";
  return kOk;
}

struct OracleArgs {
  std::string name;
  std::optional<double> beta, delta_khz, t_us, g_khz, kappa_khz, gap_khz;
  bool red = false;
  std::string zeno_case = "a";
};

int cmd_oracle(const OracleArgs& a, std::ostream& out) {
  auto need = [&](const std::optional<double>& v, const char* flag) {
    if (!v) throw ValidationError(flag, "required for oracle '" + a.name + "'");
    return *v;
  };
  auto khz = [](double v) { return FrequencyParam::khz(v); };
  if (a.name == "revival") {
    const double t = need(a.t_us, "--t-us");
    const auto d = khz(need(a.delta_khz, "--delta-khz"));
    const double p = a.beta ? oracles::revival_probability(*a.beta, d, t)
                            : oracles::revival_probability(khz(need(a.g_khz, "--beta or --g-khz")), d, t);
    out << "revival_probability = " << num(p) << "\n";
  } else if (a.name == "chevron") {
    const auto kind = a.red ? oracles::SidebandKind::Red : oracles::SidebandKind::Blue;
    out << "chevron_population = "
        << num(oracles::chevron_population(khz(need(a.g_khz, "--g-khz")), khz(need(a.kappa_khz, "--kappa-khz")),
                                           khz(a.delta_khz.value_or(0.0)), need(a.t_us, "--t-us"), kind))
        << "\n";
  } else if (a.name == "dephasing") {
    const cplx c = oracles::pure_dephasing_coherence(khz(need(a.g_khz, "--g-khz")),
                                                     khz(need(a.kappa_khz, "--kappa-khz")), need(a.t_us, "--t-us"));
    out << "coherence = " << num(c.real()) << "\n";
  } else if (a.name == "positive-p") {
    const auto ts = oracles::positive_p_ode(khz(need(a.g_khz, "--g-khz")), khz(need(a.kappa_khz, "--kappa-khz")),
                                            khz(a.delta_khz.value_or(0.0)), {need(a.t_us, "--t-us")});
    out << "coherence = " << num(ts.values[0].real()) << " " << num(ts.values[0].imag()) << "i\n";
  } else if (a.name == "measurement-rate") {
    const double r = oracles::measurement_rate(khz(need(a.g_khz, "--g-khz")), khz(need(a.kappa_khz, "--kappa-khz")),
                                               khz(a.delta_khz.value_or(0.0)));
    out << "measurement_rate_per_us = " << num(r) << "\n";
  } else if (a.name == "zeno") {
    if (a.zeno_case != "a" && a.zeno_case != "b") throw ValidationError("--case", "expected a or b");
    const auto p = oracles::zeno_effective_rate(a.zeno_case == "a" ? oracles::ZenoCase::A : oracles::ZenoCase::B,
                                                khz(need(a.gap_khz, "--gap-khz")), khz(a.delta_khz.value_or(0.0)),
                                                khz(need(a.g_khz, "--g-khz")), khz(need(a.kappa_khz, "--kappa-khz")));
    out << "kappa_q_per_us = " << num(p.kappa_q) << "\n";
    out << "steady_state_sigma_x = " << num(p.steady_state_sigma_x) << "\n";
    out << "sigma_x_relaxation_rate_per_us = " << num(p.sigma_x_relaxation_rate) << "\n";
    for (const auto& w : p.warnings) out << "warning: " << w << "\n";
  } else {
    throw ValidationError("oracle", "unknown oracle '" + a.name +
                                        "' (revival, chevron, dephasing, positive-p, measurement-rate, zeno)");
  }
  return kOk;
}

int cmd_wigner(const std::string& state_file, const std::string& grid, const std::string& im_grid,
               const Globals& g, std::ostream& out) {
  const QuantumState s = io::read_state_json(state_file);
  const auto re = parse_axis(grid, "--grid");
  const auto im = im_grid.empty() ? re : parse_axis(im_grid, "--im-grid");
  const WignerGrid w = wigner_grid(s, re, im);
  if (g.out_dir_given) {
    const fs::path p = fs::path(g.out_dir) / "wigner.csv";
    io::write_wigner_csv(p, w);
    out << "wrote " << p.string() << " (integral " << num(wigner_integral(w)) << ")\n";
  } else {
    const fs::path tmp = fs::temp_directory_path() / ("cisim_wigner_" + std::to_string(::getpid()) + ".csv");
    io::write_wigner_csv(tmp, w);
    std::ifstream f(tmp);
    out << f.rdbuf();
    fs::remove(tmp);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cisim: open-system simulation of a driven qubit coupled to two oscillators", "cisim"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Random seed (overrides the config seed)");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_flag("--allow-unconverged", g.allow_unconverged, "Exit 0 even if the convergence check fails");
  app.add_option("--threads", g.threads, "Worker threads for scenario rows (0 = hardware)");
  app.set_version_flag("--version", std::string(CISIM_CLI_VERSION));

  std::string config;
  auto* sim = app.add_subcommand("simulate", "Run a scenario config");
  sim->add_option("config", config, "Scenario config (JSON)")->required();

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit a calibration model to CSV data");
  fit->add_option("data", fa.data, "CSV with (t_us, value) or (t_us, delta_khz, value)")->required();
  fit->add_option("--model", fa.model, "revival | exp_decay | chevron | chevron_red")->required();
  fit->add_option("--freeze", fa.freeze, "Fix a parameter: name=value");
  fit->add_option("--guess", fa.guess, "Initial guess: name=value");
  fit->add_option("--release", fa.release, "Free a nuisance parameter");

  double anharm = 0.0, rabi = 0.0;
  int levels = 8;
  auto* nk = app.add_subcommand("nullkerr", "Static detuning that nulls the residual cross-Kerr");
  nk->add_option("--anharm-mhz", anharm, "Transmon anharmonicity")->required();
  nk->add_option("--rabi-mhz", rabi, "Target Rabi frequency")->required();
  nk->add_option("--levels", levels, "Transmon levels");

  std::string rwa_file;
  auto* rwa = app.add_subcommand("rwa-check", "Check the rotating-wave conditions");
  rwa->add_option("params", rwa_file, "Parameter JSON")->required();

  OracleArgs oa;
  double beta = 0, dk = 0, tu = 0, gk = 0, kk = 0, gap = 0;
  auto* orc = app.add_subcommand("oracle", "Evaluate a closed-form reference");
  orc->add_option("name", oa.name, "revival | chevron | dephasing | positive-p | measurement-rate | zeno")->required();
  auto* o_beta = orc->add_option("--beta", beta);
  auto* o_dk = orc->add_option("--delta-khz", dk);
  auto* o_tu = orc->add_option("--t-us", tu);
  auto* o_gk = orc->add_option("--g-khz", gk);
  auto* o_kk = orc->add_option("--kappa-khz", kk);
  auto* o_gap = orc->add_option("--gap-khz", gap);
  orc->add_flag("--red", oa.red, "Red sideband");
  orc->add_option("--case", oa.zeno_case, "Zeno regime a | b");

  std::string state_file, grid, im_grid;
  auto* wg = app.add_subcommand("wigner", "Wigner function of a single-mode state file");
  wg->add_option("state", state_file, "State JSON")->required();
  wg->add_option("--grid", grid, "Re(alpha) axis lo:hi:n")->required();
  wg->add_option("--im-grid", im_grid, "Im(alpha) axis lo:hi:n (defaults to --grid)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << CISIM_CLI_VERSION << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }
  if (app.count("--seed")) g.seed = seed;
  g.out_dir_given = app.count("--out-dir") > 0;
  auto opt = [](CLI::Option* o, double v) { return o->count() ? std::optional<double>(v) : std::nullopt; };
  oa.beta = opt(o_beta, beta);
  oa.delta_khz = opt(o_dk, dk);
  oa.t_us = opt(o_tu, tu);
  oa.g_khz = opt(o_gk, gk);
  oa.kappa_khz = opt(o_kk, kk);
  oa.gap_khz = opt(o_gap, gap);

  try {
    if (sim->parsed()) return cmd_simulate(config, g, out, err);
    if (fit->parsed()) return cmd_fit(fa, g, out);
    if (nk->parsed()) return cmd_nullkerr(anharm, rabi, levels, out);
    if (rwa->parsed()) return cmd_rwa(rwa_file, out);
    if (orc->parsed()) return cmd_oracle(oa, out);
    if (wg->parsed()) return cmd_wigner(state_file, grid, im_grid, g, out);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const TruncationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const InvalidArgument& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  err << app.help();
  return kUsage;
}

}  // namespace cisim::cli
