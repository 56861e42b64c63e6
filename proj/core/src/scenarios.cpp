#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include <json.hpp>

#include "cisim/error.hpp"
#include "cisim/fit.hpp"
#include "cisim/hamiltonians.hpp"
#include "cisim/io.hpp"
#include "cisim/oracles.hpp"
#include "cisim/phase_space.hpp"
#include "scenario_schema.hpp"

#ifndef CISIM_VERSION
#define CISIM_VERSION "0.0.0"
#endif

namespace cisim::scenario {

namespace {

using Row = std::map<std::string, double>;
namespace fs = std::filesystem;

FrequencyParam khz(const Row& r, const char* key) { return FrequencyParam::khz(r.at(key)); }

OperatorMatrix vacuum_projector(int dim) {
  Mat p = Mat::Zero(dim, dim);
  p(0, 0) = 1.0;
  return {SubsystemLayout({dim}), p, true};
}

QuantumState qubit(const Row& r) { return r.at("qubit_sign") > 0.0 ? qubit_plus() : qubit_minus(); }

// Qubit dephasing at gamma_y / 2 on D[sigma_y], gamma_y = 1 / T2.
CollapseTerm sigma_y_dephasing(const Row& r, const SubsystemLayout& l) {
  return {embed(pauli(Axis::Y), 0, l), FrequencyParam::rad_per_us(0.5 / r.at("t2_rho_us")), "gamma_y"};
}

std::vector<double> time_grid(const ScenarioConfig& c) {
  return linspace(0.0, c.time_grid.t_end_us, c.time_grid.points);
}

// Three-slot (qubit, a, b) problems share their collapse, initial state and observables.
LindbladSpec three_slot_spec(const ScenarioConfig& c, const Row& r, const SubsystemLayout& l, OperatorMatrix h) {
  LindbladSpec s;
  s.layout = l;
  s.hamiltonian = std::move(h);
  s.collapse = {{embed(annihilation(l.dim(2)), 2, l), khz(r, "kappa_b_khz"), "kappa_b"},
                sigma_y_dephasing(r, l)};
  s.initial = tensor({qubit(r), coherent_state(r.at("alpha0"), l.dim(1)),
                      basis_state(l.dim(2), c.initial_state.mode_b_fock)});
  s.t_grid = time_grid(c);
  s.observables = {{"sx", embed(pauli(Axis::X), 0, l)},
                   {"p0_a", embed(vacuum_projector(l.dim(1)), 1, l)},
                   {"n_a", embed(number(l.dim(1)), 1, l)}};
  s.integrator = c.integrator;
  return s;
}

LVCParams lvc_params(const Row& r, const SubsystemLayout& l) {
  return {khz(r, "delta_a_khz"), khz(r, "delta_b_khz"), khz(r, "g_x_khz"), khz(r, "g_y_khz"), l};
}

ModelProblem make_problem(const ScenarioConfig& cfg, const Row& row) {
  const auto t = detail::row_truncations(cfg, row);
  ModelProblem p;
  p.params = row;
  const std::string& name = cfg.scenario;
  auto dim = [&](const char* k) { return t.at(k); };

  if (name == "revivals") {
    p.dims = {2, dim("mode_a")};
    p.fock_slots = {1};
    p.build = [cfg](const ParameterSet& r, const SubsystemLayout& l) {
      LindbladSpec s;
      s.layout = l;
      s.hamiltonian = build_conditional_displacement(Mode::A, Axis::X, khz(r, "delta_a_khz"), khz(r, "g_x_khz"), l);
      s.initial = tensor(qubit(r), coherent_state(r.at("alpha0"), l.dim(1)));
      s.t_grid = time_grid(cfg);
      s.observables = {{"p0_a", embed(vacuum_projector(l.dim(1)), 1, l)}, {"sx", embed(pauli(Axis::X), 0, l)}};
      s.integrator = cfg.integrator;
      return s;
    };
  } else if (name == "dephasing") {
    p.dims = {2, dim("mode_b")};
    p.fock_slots = {1};
    p.build = [cfg](const ParameterSet& r, const SubsystemLayout& l) {
      LindbladSpec s;
      s.layout = l;
      s.hamiltonian = build_conditional_displacement(Mode::B, Axis::Y, khz(r, "delta_b_khz"), khz(r, "g_y_khz"), l);
      s.collapse = {{embed(annihilation(l.dim(1)), 1, l), khz(r, "kappa_b_khz"), "kappa_b"}};
      s.initial = tensor(qubit(r), basis_state(l.dim(1), cfg.initial_state.mode_b_fock));
      s.t_grid = time_grid(cfg);
      s.observables = {{"sx", embed(pauli(Axis::X), 0, l)}, {"n_b", embed(number(l.dim(1)), 1, l)}};
      s.integrator = cfg.integrator;
      return s;
    };
  } else if (name == "aligned_revivals" || name == "branching_wigner") {
    p.dims = {2, dim("mode_a"), dim("mode_b")};
    p.fock_slots = {1, 2};
    p.build = [cfg](const ParameterSet& r, const SubsystemLayout& l) {
      return three_slot_spec(cfg, r, l, build_aligned(lvc_params(r, l)));
    };
  } else if (name == "conical_intersection") {
    p.dims = {2, dim("mode_a"), dim("mode_b")};
    p.fock_slots = {1, 2};
    p.build = [cfg](const ParameterSet& r, const SubsystemLayout& l) {
      return three_slot_spec(cfg, r, l, build_lvc(lvc_params(r, l)));
    };
  } else if (name == "chevron") {
    p.dims = {2, dim("mode")};
    p.fock_slots = {1};
    p.build = [cfg](const ParameterSet& r, const SubsystemLayout& l) {
      const bool red = r.at("red_sideband") != 0.0;
      LindbladSpec s;
      s.layout = l;
      s.hamiltonian = build_sideband({khz(r, "g_khz"), khz(r, "delta_khz"), red ? Sideband::Red : Sideband::Blue, l});
      s.collapse = {{embed(annihilation(l.dim(1)), 1, l), khz(r, "kappa_khz"), "kappa"}};
      s.initial = tensor(red ? qubit_plus() : qubit_minus(), basis_state(l.dim(1), 0));
      s.t_grid = time_grid(cfg);
      s.observables = {{"p_minus", embed(projector_minus(), 0, l)}};
      s.integrator = cfg.integrator;
      return s;
    };
  } else if (name == "decode_scan") {
    p.dims = {2};
    p.build = [cfg](const ParameterSet& r, const SubsystemLayout& l) {
      // Precession at Omega_R - Delta_R about sigma_x in the drive frame, transverse decay 1/T2.
      const double w = FrequencyParam::mhz(r.at("rabi_mhz") - r.at("static_detuning_mhz")).rad_per_us();
      LindbladSpec s;
      s.layout = l;
      s.hamiltonian = (0.5 * w) * pauli(Axis::X);
      s.collapse = {{pauli(Axis::X), FrequencyParam::rad_per_us(0.5 / r.at("t2_rho_us")), "t2_rho"}};
      Vec psi(2);
      psi << 1.0, cplx(0.0, 1.0);  // +1 eigenstate of sigma_z
      s.initial = QuantumState::pure(l, psi / std::sqrt(2.0));
      s.t_grid = time_grid(cfg);
      s.observables = {{"sz", pauli(Axis::Z)}, {"sy", pauli(Axis::Y)}};
      s.integrator = cfg.integrator;
      return s;
    };
  } else if (name == "zeno_trajectory") {
    p.dims = {2, dim("mode_b")};
    p.fock_slots = {1};
    p.build = [cfg](const ParameterSet& r, const SubsystemLayout& l) {
      // Semiclassical tuning coordinate: alpha(t) = c + (alpha0 - c) e^{-i Delta_a t}, c = -sign alpha_g.
      const double ag = r.at("g_x_khz") / r.at("delta_a_khz");
      const double c = -r.at("qubit_sign") * ag, a0 = r.at("alpha0");
      const double gx = khz(r, "g_x_khz").rad_per_us(), da = khz(r, "delta_a_khz").rad_per_us();
      TimeDependentHamiltonian h;
      h.h0 = build_zeno({FrequencyParam::rad_per_us(0.0), khz(r, "delta_b_khz"), khz(r, "g_y_khz"),
                         khz(r, "kappa_b_khz"), l});
      h.terms = {{embed(pauli(Axis::X), 0, l),
                  [=](double t) { return 2.0 * gx * (c + (a0 - c) * std::cos(da * t)); }}};
      LindbladSpec s;
      s.layout = l;
      s.hamiltonian = h;
      s.collapse = {{embed(annihilation(l.dim(1)), 1, l), khz(r, "kappa_b_khz"), "kappa_b"},
                    sigma_y_dephasing(r, l)};
      s.initial = tensor(qubit(r), basis_state(l.dim(1), cfg.initial_state.mode_b_fock));
      s.t_grid = time_grid(cfg);
      s.observables = {{"sx", embed(pauli(Axis::X), 0, l)}};
      s.integrator = cfg.integrator;
      return s;
    };
  } else {
    throw ValidationError("scenario", "unknown scenario '" + name + "'");
  }
  return p;
}

double nearest_grid_time(const std::vector<double>& grid, double t) {
  return *std::min_element(grid.begin(), grid.end(),
                           [t](double a, double b) { return std::abs(a - t) < std::abs(b - t); });
}

struct RowRun {
  EvolveResult result;
  double seconds = 0.0;
};

std::vector<RowRun> run_rows(const std::vector<ModelProblem>& problems, const EvolveOptions& eo, unsigned threads) {
  std::vector<RowRun> out(problems.size());
  std::vector<std::exception_ptr> errors(problems.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::max(1u, std::min<unsigned>(threads, unsigned(problems.size())));
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= problems.size()) return;
        k = next++;
      }
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const auto& p = problems[k];
        out[k].result = evolve(p.build(p.params, SubsystemLayout(p.dims)), eo);
        out[k].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// Reduced single-mode state of `slot` from a full density matrix.
QuantumState reduce(const Mat& rho, const std::vector<int>& dims, int slot) {
  StateTolerance tol;
  tol.norm = 1e-6;
  tol.hermiticity = 1e-6;
  tol.min_eigenvalue = -1e-5;
  const QuantumState full = QuantumState::mixed(SubsystemLayout(dims), 0.5 * (rho + rho.adjoint()), tol);
  return partial_trace(full, {slot});
}

std::string fmt_tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  std::string s = buf;
  std::replace(s.begin(), s.end(), '.', 'p');
  std::replace(s.begin(), s.end(), '-', 'm');
  return s;
}

class Writer {
 public:
  Writer(fs::path dir, std::vector<fs::path>& files) : dir_(std::move(dir)), files_(files) {}
  bool enabled() const { return !dir_.empty(); }

  void series(const std::string& name, const std::vector<TimeSeries>& s) {
    if (!enabled()) return;
    io::write_time_series_csv(dir_ / name, s);
    files_.push_back(dir_ / name);
  }
  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& cols) {
    if (!enabled()) return;
    io::write_csv(dir_ / name, header, cols);
    files_.push_back(dir_ / name);
  }
  void wigner(const std::string& name, const WignerGrid& g) {
    if (!enabled()) return;
    io::write_wigner_csv(dir_ / name, g);
    files_.push_back(dir_ / name);
  }
  void state(const std::string& name, const QuantumState& s) {
    if (!enabled()) return;
    io::write_state_json(dir_ / name, s);
    files_.push_back(dir_ / name);
  }

 private:
  fs::path dir_;
  std::vector<fs::path>& files_;
};

TimeSeries overlay(const std::string& label, const std::vector<double>& t, const std::vector<double>& v) {
  TimeSeries s{label, t, {}};
  for (double x : v) s.values.emplace_back(x);
  return s;
}

WignerGrid mode_wigner(const QuantumState& s, double extent, int points) {
  const auto axis = linspace(-extent, extent, points);
  return wigner_grid(s, axis, axis);
}

double max_abs_diff(const TimeSeries& a, const TimeSeries& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) d = std::max(d, std::abs(a.values[k] - b.values[k]));
  return d;
}

// ---- scenario-specific post-processing ----

void post_revivals(RunResult& res, Writer& w) {
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    auto& row = res.rows[k];
    const auto& t = row.series.front().times;
    const double beta = row.values.at("g_x_khz") / row.values.at("delta_a_khz");
    const auto da = FrequencyParam::khz(row.values.at("delta_a_khz"));
    std::vector<double> o;
    for (double x : t) o.push_back(oracles::revival_probability(beta, da, x));
    row.series.push_back(overlay("p0_a_oracle", t, o));
    // The oracle covers the vacuum start only.
    if (row.values.at("alpha0") == 0.0)
      res.metrics["row" + std::to_string(k) + ".p0_oracle_max_dev"] =
          max_abs_diff(find_series(row.series, "p0_a"), row.series.back());
    w.series("revivals_row" + std::to_string(k) + ".csv", row.series);
  }
}

void post_dephasing(RunResult& res, Writer& w) {
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    auto& row = res.rows[k];
    const auto& v = row.values;
    const auto& t = row.series.front().times;
    const double sign = v.at("qubit_sign");
    const auto g = FrequencyParam::khz(v.at("g_y_khz")), kap = FrequencyParam::khz(v.at("kappa_b_khz"));
    const auto d = FrequencyParam::khz(v.at("delta_b_khz"));
    const std::string tag = "row" + std::to_string(k);
    // Both oracles start from an empty coupling mode.
    if (res.config.initial_state.mode_b_fock != 0) {
      w.series("dephasing_" + tag + ".csv", row.series);
      continue;
    }
    const TimeSeries pp = oracles::positive_p_ode(g, kap, d, t);
    std::vector<double> o;
    for (cplx c : pp.values) o.push_back(2.0 * sign * c.real());
    row.series.push_back(overlay("sx_positive_p", t, o));
    res.metrics[tag + ".positive_p_max_dev"] = max_abs_diff(find_series(row.series, "sx"), row.series.back());
    if (d.rad_per_us() == 0.0) {
      std::vector<double> cf;
      for (double x : t) cf.push_back(2.0 * sign * oracles::pure_dephasing_coherence(g, kap, x).real());
      row.series.push_back(overlay("sx_closed_form", t, cf));
      res.metrics[tag + ".closed_form_max_dev"] = max_abs_diff(find_series(row.series, "sx"), row.series.back());
    }
    w.series("dephasing_" + tag + ".csv", row.series);
  }
}


void post_aligned(RunResult& res, Writer& w) {
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    auto& row = res.rows[k];
    const auto& t = row.series.front().times;
    // H commutes with sigma_x, so only the sigma_y dephasing moves <sigma_x>.
    std::vector<double> env;
    for (double x : t) env.push_back(row.values.at("qubit_sign") * std::exp(-x / row.values.at("t2_rho_us")));
    row.series.push_back(overlay("sx_gamma_y_envelope", t, env));
    res.metrics["row" + std::to_string(k) + ".sx_envelope_max_dev"] =
        max_abs_diff(find_series(row.series, "sx"), row.series.back());
    w.series("aligned_revivals_row" + std::to_string(k) + ".csv", row.series);
  }
}

struct Branch {
  double probability = 0.0;
  QuantumState mode_a;
};

Branch condition_on_qubit(const Mat& rho, const std::vector<int>& dims, bool plus) {
  const SubsystemLayout l(dims);
  const Mat proj = embed(plus ? projector_plus() : projector_minus(), 0, l).matrix();
  Mat r = proj * rho * proj;
  Branch b;
  b.probability = r.trace().real();
  if (!(b.probability > 0.0)) throw Error("conditional branch has zero probability");
  b.mode_a = reduce(r / b.probability, dims, 1);
  return b;
}

// Relative RMS of the angular marginal A(theta) = int W(center + r e^{i theta}) r dr.
double ring_rms(const QuantumState& s, cplx center, double r_max, cplx* centroid) {
  const int n_theta = 72, n_r = 60;
  std::vector<cplx> pts;
  for (int i = 0; i < n_theta; ++i)
    for (int j = 1; j <= n_r; ++j)
      pts.push_back(center + std::polar(r_max * j / n_r, 2.0 * std::numbers::pi * i / n_theta));
  const auto w = wigner(s, pts);
  std::vector<double> a(n_theta, 0.0);
  for (int i = 0; i < n_theta; ++i)
    for (int j = 1; j <= n_r; ++j) a[std::size_t(i)] += w[std::size_t(i * n_r + j - 1)] * (r_max * j / n_r);
  double mean = 0.0;
  for (double x : a) mean += x / n_theta;
  double var = 0.0;
  for (double x : a) var += (x - mean) * (x - mean) / n_theta;
  const int dim = s.layout().dim(0);
  *centroid = expectation(s, annihilation(dim));
  return std::sqrt(var) / std::abs(mean);
}

void post_branching(RunResult& res, const std::vector<RowRun>& runs, const std::vector<ModelProblem>& problems,
                    Writer& w) {
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    auto& row = res.rows[k];
    const auto& v = row.values;
    const std::string tag = res.rows.size() == 1 ? "" : "_row" + std::to_string(k);
    w.series("branching_wigner" + tag + ".csv", row.series);
    const bool start_plus = v.at("qubit_sign") > 0.0;
    const Branch same = condition_on_qubit(runs[k].result.final_density, problems[k].dims, start_plus);
    const Branch flip = condition_on_qubit(runs[k].result.final_density, problems[k].dims, !start_plus);
    const double ag = v.at("g_x_khz") / v.at("delta_a_khz");
    const double flip_center = v.at("qubit_sign") * ag;  // ground state of the flipped branch
    const double radius = std::abs(v.at("alpha0") - flip_center);
    cplx centroid;
    const double rms = ring_rms(flip.mode_a, flip_center, radius + 2.5, &centroid);
    const std::string m = "row" + std::to_string(k) + ".";
    res.metrics[m + "p_flip"] = flip.probability;
    res.metrics[m + "purity_unflipped"] = purity(same.mode_a);
    res.metrics[m + "purity_flipped"] = purity(flip.mode_a);
    res.metrics[m + "ring_rms"] = rms;
    res.metrics[m + "ring_center_expected_re"] = flip_center;
    res.metrics[m + "flipped_centroid_re"] = centroid.real();
    res.metrics[m + "flipped_centroid_im"] = centroid.imag();
    res.states["unflipped" + tag] = same.mode_a;
    res.states["flipped" + tag] = flip.mode_a;
    if (res.config.output.wigner) {
      const double extent = std::abs(flip_center) + radius + 1.5;
      w.wigner("branching_wigner" + tag + "_unflipped_wigner.csv",
               mode_wigner(same.mode_a, extent, res.config.output.wigner_points));
      w.wigner("branching_wigner" + tag + "_flipped_wigner.csv",
               mode_wigner(flip.mode_a, extent, res.config.output.wigner_points));
    }
    w.state("branching_wigner" + tag + "_unflipped_state.json", same.mode_a);
    w.state("branching_wigner" + tag + "_flipped_state.json", flip.mode_a);
  }
}

void post_conical(RunResult& res, const std::vector<RowRun>& runs, const std::vector<ModelProblem>& problems,
                  const std::vector<double>& snaps, Writer& w) {
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    auto& row = res.rows[k];
    const std::string tag = "row" + std::to_string(k);
    const auto& sx = find_series(row.series, "sx");
    res.metrics[tag + ".sx_final"] = sx.values.back().real();
    res.metrics[tag + ".wall_clock_s"] = runs[k].seconds;
    w.series("conical_intersection_" + tag + ".csv", row.series);
    for (std::size_t s = 0; s < snaps.size(); ++s) {
      const QuantumState a = reduce(runs[k].result.snapshots[s], problems[k].dims, 1);
      const std::string name = "conical_intersection_" + tag + "_t" + fmt_tag(snaps[s]) + "us";
      res.states[tag + "_t" + fmt_tag(snaps[s]) + "us"] = a;
      res.metrics[tag + ".purity_a_t" + fmt_tag(snaps[s]) + "us"] = purity(a);
      if (res.config.output.wigner) {
        const double ag = row.values.at("g_x_khz") / row.values.at("delta_a_khz");
        const double extent = ag + std::abs(row.values.at("alpha0")) + ag + 1.5;
        w.wigner(name + "_wigner.csv", mode_wigner(a, extent, res.config.output.wigner_points));
      }
    }
  }
}

void post_chevron(RunResult& res, Writer& w) {
  std::vector<double> tt, dd, sim, orc, noisy;
  std::mt19937_64 rng(res.config.seed);
  double dev = 0.0;
  for (auto& row : res.rows) {
    const auto& v = row.values;
    const auto kind = v.at("red_sideband") != 0.0 ? oracles::SidebandKind::Red : oracles::SidebandKind::Blue;
    const auto& p = find_series(row.series, "p_minus");
    const double sigma = v.at("noise_sigma");
    std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
    std::vector<double> o;
    for (std::size_t k = 0; k < p.times.size(); ++k) {
      const double t = p.times[k];
      const double x = oracles::chevron_population(FrequencyParam::khz(v.at("g_khz")),
                                                   FrequencyParam::khz(v.at("kappa_khz")),
                                                   FrequencyParam::khz(v.at("delta_khz")), t, kind);
      o.push_back(x);
      tt.push_back(t);
      dd.push_back(v.at("delta_khz"));
      sim.push_back(p.values[k].real());
      orc.push_back(x);
      noisy.push_back(p.values[k].real() + (sigma > 0.0 ? noise(rng) : 0.0));
      dev = std::max(dev, std::abs(p.values[k].real() - x));
    }
    row.series.push_back(overlay("p_minus_oracle", p.times, o));
  }
  res.metrics["oracle_max_dev"] = dev;
  // Fit-ready layout (t_us, delta_khz, value).
  w.csv("chevron.csv", {"t_us", "delta_khz", "value"}, {tt, dd, noisy});
  w.csv("chevron_oracle.csv", {"t_us", "delta_khz", "value"}, {tt, dd, orc});
  w.csv("chevron_noiseless.csv", {"t_us", "delta_khz", "value"}, {tt, dd, sim});
}

void post_decode(RunResult& res, Writer& w) {
  const auto& row = res.rows.front();
  const auto& v = row.values;
  const auto& sz = find_series(row.series, "sz");
  const auto& sy = find_series(row.series, "sy");
  const auto& t = sz.times;
  const int n = std::max(2, int(v.at("decode_points")));
  const auto rates = linspace(v.at("decode_min_mhz"), v.at("decode_max_mhz"), n);
  // Decoded signal S = Re[e^{-i Omega_d t} (<sz> - i <sy>)].
  auto signal = [&](double mhz, std::size_t k) {
    const double wd = FrequencyParam::mhz(mhz).rad_per_us();
    return (std::exp(cplx(0.0, -wd * t[k])) * (sz.values[k].real() - cplx(0.0, 1.0) * sy.values[k].real())).real();
  };
  std::mt19937_64 rng(res.config.seed);
  const double sigma = v.at("noise_sigma");
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  std::vector<double> tt, rr, ss, score(std::size_t(n), 0.0);
  for (std::size_t i = 0; i < rates.size(); ++i)
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double s = signal(rates[i], k) + (sigma > 0.0 ? noise(rng) : 0.0);
      tt.push_back(t[k]);
      rr.push_back(rates[i]);
      ss.push_back(s);
      score[i] += s;
    }
  w.csv("decode_scan.csv", {"t_us", "decode_mhz", "signal"}, {tt, rr, ss});

  // Ridge: maximum of the delay-summed signal, refined by a parabola through the neighbours.
  const std::size_t best = std::size_t(std::max_element(score.begin(), score.end()) - score.begin());
  double ridge = rates[best];
  if (best > 0 && best + 1 < rates.size()) {
    const double a = score[best - 1], b = score[best], c = score[best + 1];
    const double den = a - 2.0 * b + c;
    if (den < 0.0) ridge += 0.5 * (a - c) / den * (rates[1] - rates[0]);
  }
  std::vector<double> along;
  for (std::size_t k = 0; k < t.size(); ++k) along.push_back(signal(ridge, k));
  w.csv("decode_ridge.csv", {"t_us", "value"}, {t, along});

  fit::DataSet d;
  d.t_us = t;
  d.y = along;
  fit::FitModel m = fit::FitModel::exp_decay();
  const fit::FitResult f = fit::fit(m, d);
  res.metrics["ridge_mhz"] = ridge;
  res.metrics["expected_ridge_mhz"] = v.at("rabi_mhz") - v.at("static_detuning_mhz");
  res.metrics["t2_fit_us"] = f.value("T_us");
  res.metrics["t2_fit_converged"] = f.converged ? 1.0 : 0.0;
}

void post_zeno(RunResult& res, const std::vector<ModelProblem>& problems, const RunOptions& opt, Writer& w) {
  const bool compare = res.rows.front().values.at("compare_full_model") != 0.0;
  std::vector<RowRun> full;
  if (compare) {
    ScenarioConfig ci = res.config;
    ci.scenario = "conical_intersection";
    std::vector<ModelProblem> fp;
    for (std::size_t k = 0; k < problems.size(); ++k) {
      Row r = res.rows[k].values;
      ModelProblem p = make_problem(ci, r);
      const auto t = detail::row_truncations(res.config, r);
      p.dims = {2, t.at("mode_a"), t.at("mode_b")};
      fp.push_back(p);
    }
    EvolveOptions eo;
    full = run_rows(fp, eo, opt.threads);
  }
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    auto& row = res.rows[k];
    if (compare) {
      TimeSeries s = find_series(full[k].result.series, "sx");
      s.label = "sx_full_model";
      row.series.push_back(s);
      res.metrics["row" + std::to_string(k) + ".full_model_max_dev"] =
          max_abs_diff(find_series(row.series, "sx"), s);
    }
    res.metrics["row" + std::to_string(k) + ".sx_final"] = find_series(row.series, "sx").values.back().real();
    w.series("zeno_trajectory_row" + std::to_string(k) + ".csv", row.series);
  }
}

std::vector<std::size_t> convergence_rows(const ScenarioConfig& cfg, std::size_t n) {
  if (cfg.convergence.rows == "last") return {n - 1};
  std::vector<std::size_t> all(n);
  for (std::size_t k = 0; k < n; ++k) all[k] = k;
  return all;
}

void write_manifest(RunResult& res, const fs::path& dir) {
  using nlohmann::json;
  json j;
  j["tool"] = "cisim";
  j["version"] = CISIM_VERSION;
  j["config"] = json::parse(to_json(res.config));
  const auto& c = res.convergence;
  j["convergence"] = {{"checked", c.checked},
                      {"verdict", c.pass ? "PASS" : "FAIL"},
                      {"threshold", c.threshold},
                      {"rows", c.rows},
                      {"max_deviation", c.max_deviation},
                      {"tolerance_deviation", c.tolerance_deviation},
                      {"truncation_deviation", c.truncation_deviation},
                      {"worst_observable", c.worst_observable},
                      {"deviations", c.deviations},
                      {"enlarged_dims", c.enlarged_dims}};
  json rows = json::array();
  for (const auto& r : res.rows) {
    json row;
    for (const auto& [k, v] : r.values) row["values"][k] = v;
    row["invariants"] = {{"max_trace_drift", r.invariants.max_trace_drift},
                         {"max_hermiticity_drift", r.invariants.max_hermiticity_drift},
                         {"positivity_ok", r.invariants.positivity_ok},
                         {"final_min_eigenvalue", r.invariants.final_min_eigenvalue},
                         {"within_bounds", r.invariants.within()}};
    row["integrator"] = {{"accepted", r.stats.accepted}, {"rejected", r.stats.rejected}, {"rhs_evals", r.stats.rhs_evals}};
    rows.push_back(row);
  }
  j["rows"] = rows;
  j["invariants_ok"] = res.invariants_ok;
  json m = json::object();
  for (const auto& [k, v] : res.metrics) m[k] = v;
  j["metrics"] = m;
  j["wall_clock_s"] = res.wall_clock_s;
  json files = json::array();
  for (const auto& f : res.files)
    files.push_back({{"file", f.filename().string()}, {"sha256", io::sha256_file(f)}});
  j["outputs"] = files;
  const fs::path path = dir / (res.config.scenario + "_manifest.json");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest '" + path.string() + "'");
  out << j.dump(2) << "\n";
  res.files.push_back(path);
}

}  // namespace

RunResult run(const ScenarioConfig& cfg, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  res.config = cfg;
  const auto rows = expand_rows(cfg);

  std::vector<ModelProblem> problems;
  for (const auto& r : rows) problems.push_back(make_problem(cfg, r));
  // Echo the truncations actually used (per-row values when they differ).
  for (const auto& key : detail::schema(cfg.scenario).truncation_keys) {
    int mx = 0;
    for (const auto& r : rows) mx = std::max(mx, detail::row_truncations(cfg, r).at(key));
    if (!res.config.truncations.count(key)) res.config.truncations[key] = mx;
  }

  EvolveOptions eo;
  std::vector<double> snaps;
  if (cfg.scenario == "conical_intersection") {
    const auto grid = time_grid(cfg);
    for (const char* key : {"snapshot_1_us", "snapshot_2_us"}) {
      const double want = rows.front().at(key);
      if (want < 0.0 || want > cfg.time_grid.t_end_us) throw ValidationError(std::string("parameters.") + key, "outside the time grid");
      snaps.push_back(nearest_grid_time(grid, want));
    }
    eo.snapshot_times = snaps;
  }

  if (!opt.out_dir.empty()) fs::create_directories(opt.out_dir);
  const auto runs = run_rows(problems, eo, opt.threads);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    RowResult rr;
    rr.values = rows[k];
    rr.series = runs[k].result.series;
    rr.invariants = runs[k].result.invariants;
    rr.stats = runs[k].result.stats;
    res.invariants_ok = res.invariants_ok && rr.invariants.within();
    res.rows.push_back(std::move(rr));
  }

  Writer w(opt.out_dir, res.files);
  const std::string& name = cfg.scenario;
  if (name == "revivals") post_revivals(res, w);
  else if (name == "dephasing") post_dephasing(res, w);
  else if (name == "aligned_revivals") post_aligned(res, w);
  else if (name == "branching_wigner") post_branching(res, runs, problems, w);
  else if (name == "conical_intersection") post_conical(res, runs, problems, snaps, w);
  else if (name == "chevron") post_chevron(res, w);
  else if (name == "decode_scan") post_decode(res, w);
  else if (name == "zeno_trajectory") post_zeno(res, problems, opt, w);

  if (opt.run_convergence) {
    auto& c = res.convergence;
    c.checked = true;
    c.rows = convergence_rows(cfg, rows.size());
    double worst = -1.0;
    for (std::size_t k : c.rows) {
      const ConvergenceReport rep = convergence_check(problems[k], runs[k].result, c.threshold);
      c.pass = c.pass && rep.pass;
      c.tolerance_deviation = std::max(c.tolerance_deviation, rep.tolerance_deviation);
      c.truncation_deviation = std::max(c.truncation_deviation, rep.truncation_deviation);
      for (const auto& [label, d] : rep.deviations) c.deviations[label] = std::max(c.deviations[label], d);
      if (rep.max_deviation > worst) {
        worst = rep.max_deviation;
        c.worst_observable = rep.worst_observable;
        c.enlarged_dims = rep.enlarged_dims;
      }
      c.max_deviation = std::max(c.max_deviation, rep.max_deviation);
    }
  }

  res.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!opt.out_dir.empty()) write_manifest(res, opt.out_dir);
  return res;
}

}  // namespace cisim::scenario
