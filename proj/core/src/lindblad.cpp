#include "cisim/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/SparseCore>

#include "cisim/error.hpp"

namespace cisim {

std::vector<double> TimeSeries::real() const {
  std::vector<double> r;
  r.reserve(values.size());
  for (cplx v : values) r.push_back(v.real());
  return r;
}

const TimeSeries& find_series(const std::vector<TimeSeries>& all, const std::string& label) {
  for (const auto& s : all)
    if (s.label == label) return s;
  throw InvalidArgument("no time series labeled '" + label + "'");
}

bool InvariantReport::within(const InvariantBounds& b) const {
  return max_trace_drift <= b.trace && max_hermiticity_drift <= b.hermiticity && positivity_ok &&
         final_min_eigenvalue >= b.min_eigenvalue;
}

QuantumState EvolveResult::final_state(const SubsystemLayout& layout) const {
  StateTolerance tol;
  tol.norm = 1e-6;
  tol.hermiticity = 1e-6;
  tol.min_eigenvalue = -1e-4;
  return QuantumState::mixed(layout, final_density, tol);
}

namespace {

using Sp = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

// Sparse operator with a fixed pattern whose values are rebuilt per evaluation:
// value_k(t) = (base_k + sum_m c_m(t) term_m,k) * exp(i w_k tau).
struct PhasedSparse {
  Sp m;
  std::vector<cplx> base;
  std::vector<std::vector<cplx>> terms;
  std::vector<double> freq;

  PhasedSparse() = default;
  PhasedSparse(const std::vector<const Mat*>& parts, const Eigen::VectorXd& frame) {
    const Eigen::Index n = parts.front()->rows();
    double scale = 1e-300;
    for (const Mat* p : parts) scale = std::max(scale, max_abs(*p));
    const double cut = 1e-15 * scale;
    std::vector<Eigen::Triplet<cplx>> trip;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        bool nz = false;
        for (const Mat* p : parts) nz = nz || std::abs((*p)(i, j)) > cut;
        if (nz) trip.emplace_back(i, j, cplx(1.0));
      }
    m.resize(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    const std::size_t nnz = std::size_t(m.nonZeros());
    base.resize(nnz);
    freq.resize(nnz);
    terms.assign(parts.size() - 1, std::vector<cplx>(nnz));
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Sp::InnerIterator it(m, i); it; ++it, ++k) {
        const Eigen::Index j = it.col();
        base[k] = (*parts[0])(i, j);
        for (std::size_t q = 1; q < parts.size(); ++q) terms[q - 1][k] = (*parts[q])(i, j);
        freq[k] = frame.size() ? frame(i) - frame(j) : 0.0;
      }
  }

  void update(double tau, const std::vector<double>& coeffs) {
    cplx* v = m.valuePtr();
    for (std::size_t k = 0; k < base.size(); ++k) {
      cplx x = base[k];
      for (std::size_t q = 0; q < terms.size(); ++q) x += coeffs[q] * terms[q][k];
      v[k] = freq[k] == 0.0 ? x : x * std::polar(1.0, freq[k] * tau);
    }
  }
};

// rho' = -i H_eff rho + i rho H_eff^dagger + sum_k rate_k L_k rho L_k^dagger with
// H_eff = H - (i/2) sum_k rate_k L_k^dagger L_k, evaluated in the frame rotating with
// diag(frame). Only sparse * dense products: rho H^dag = (H rho^dag)^dag and
// L rho L^dag = L (L rho^dag)^dag.
class Generator {
 public:
  Generator(const Mat& h0, const std::vector<const Mat*>& hk,
            std::vector<std::function<double(double)>> ck, const std::vector<CollapseTerm>& collapse,
            bool rotating, double t0)
      : ck_(std::move(ck)), coeffs_(ck_.size()), t0_(t0) {
    Mat heff = h0;
    if (rotating) {
      frame_ = h0.diagonal().real();
      heff.diagonal() -= frame_.cast<cplx>();
    }
    for (const auto& c : collapse) {
      const double r = c.rate.rad_per_us();
      if (r == 0.0) continue;
      const Mat& l = c.op.matrix();
      heff -= cplx(0.0, 0.5 * r) * (l.adjoint() * l);
      jumps_.push_back(PhasedSparse({&l}, frame_));
      rates_.push_back(r);
    }
    std::vector<const Mat*> parts{&heff};
    parts.insert(parts.end(), hk.begin(), hk.end());
    h_ = PhasedSparse(parts, frame_);
    static_ = hk.empty() && frame_.size() == 0;
    if (static_) {
      h_.update(0.0, coeffs_);
      for (auto& j : jumps_) j.update(0.0, coeffs_);
    }
  }

  // hermitian: rho is Hermitian, so rho' = A + A^dagger with
  // A = -i H_eff rho + (1/2) sum_k rate_k L_k (L_k rho)^dagger.
  void apply(double t, const Mat& rho, Mat& out, bool hermitian) {
    if (!static_) {
      for (std::size_t k = 0; k < ck_.size(); ++k) coeffs_[k] = ck_[k](t);
      h_.update(t - t0_, coeffs_);
      for (auto& j : jumps_) j.update(t - t0_, coeffs_);
    }
    const cplx mi(0.0, -1.0);
    if (hermitian) {
      work_.noalias() = mi * (h_.m * rho);
      for (std::size_t k = 0; k < jumps_.size(); ++k) {
        tmp_.noalias() = jumps_[k].m * rho;
        work_.noalias() += (0.5 * rates_[k]) * (jumps_[k].m * tmp_.adjoint());
      }
      out = work_ + work_.adjoint();
      return;
    }
    const Mat rho_dag = rho.adjoint();
    out.noalias() = mi * (h_.m * rho);
    tmp_.noalias() = h_.m * rho_dag;
    out += cplx(0.0, 1.0) * tmp_.adjoint();
    for (std::size_t k = 0; k < jumps_.size(); ++k) {
      tmp_.noalias() = jumps_[k].m * rho_dag;
      out.noalias() += rates_[k] * (jumps_[k].m * tmp_.adjoint());
    }
  }

  // Lab-frame density from the rotating-frame one at time t.
  void to_lab(double t, const Mat& rho_rot, Mat& lab) const {
    if (frame_.size() == 0) {
      lab = rho_rot;
      return;
    }
    const Eigen::VectorXcd ph =
        (cplx(0.0, -(t - t0_)) * frame_.cast<cplx>()).array().exp().matrix();
    lab = ph.asDiagonal() * rho_rot * ph.conjugate().asDiagonal();
  }

 private:
  PhasedSparse h_;
  std::vector<PhasedSparse> jumps_;
  std::vector<double> rates_;
  std::vector<std::function<double(double)>> ck_;
  std::vector<double> coeffs_;
  Eigen::VectorXd frame_;
  double t0_;
  bool static_ = true;
  Mat work_, tmp_;
};

Generator make_generator(const OperatorMatrix& h, const LindbladSpec& spec, bool rotating,
                         double t0) {
  return Generator(h.matrix(), {}, {}, spec.collapse, rotating, t0);
}

Generator make_generator(const TimeDependentHamiltonian& h, const LindbladSpec& spec,
                         bool rotating, double t0) {
  std::vector<const Mat*> hk;
  std::vector<std::function<double(double)>> ck;
  for (const auto& term : h.terms) {
    hk.push_back(&term.op.matrix());
    ck.push_back(term.coeff);
  }
  return Generator(h.h0.matrix(), hk, std::move(ck), spec.collapse, rotating, t0);
}

void check_layout(const SubsystemLayout& expected, const SubsystemLayout& got, const char* what) {
  if (!(expected == got)) throw SpecError(std::string("layout mismatch in ") + what);
}

struct Recorder {
  const LindbladSpec& spec;
  const EvolveOptions& opt;
  std::vector<std::vector<std::pair<Eigen::Index, std::pair<Eigen::Index, cplx>>>> obs_nnz;
  EvolveResult result;

  Recorder(const LindbladSpec& s, const EvolveOptions& o) : spec(s), opt(o) {
    for (const auto& ob : spec.observables) {
      result.series.push_back({ob.label, std::vector<double>(spec.t_grid.size()),
                               std::vector<cplx>(spec.t_grid.size())});
      std::vector<std::pair<Eigen::Index, std::pair<Eigen::Index, cplx>>> nz;
      const Mat& m = ob.op.matrix();
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
          if (m(i, j) != cplx(0.0)) nz.push_back({i, {j, m(i, j)}});
      obs_nnz.push_back(std::move(nz));
    }
    snapshot_slot.assign(spec.t_grid.size(), -1);
    result.snapshots.resize(opt.snapshot_times.size());
    for (std::size_t k = 0; k < opt.snapshot_times.size(); ++k) {
      const auto it = std::find(spec.t_grid.begin(), spec.t_grid.end(), opt.snapshot_times[k]);
      if (it == spec.t_grid.end())
        throw SpecError("snapshot time " + std::to_string(opt.snapshot_times[k]) + " is not on the time grid");
      snapshot_slot[std::size_t(it - spec.t_grid.begin())] = long(k);
    }
  }

  std::vector<long> snapshot_slot;

  void record(std::size_t idx, double t, const Mat& rho) {
    if (snapshot_slot[idx] >= 0) result.snapshots[std::size_t(snapshot_slot[idx])] = rho;
    for (std::size_t k = 0; k < obs_nnz.size(); ++k) {
      cplx v = 0.0;
      for (const auto& [i, jv] : obs_nnz[k]) v += jv.second * rho(jv.first, i);
      result.series[k].times[idx] = t;
      result.series[k].values[idx] = v;
    }
    if (!opt.check_invariants) return;
    auto& inv = result.invariants;
    inv.max_trace_drift = std::max(inv.max_trace_drift, std::abs(rho.trace() - 1.0));
    inv.max_hermiticity_drift = std::max(inv.max_hermiticity_drift, hermiticity_defect(rho));
    Mat shifted = 0.5 * (rho + rho.adjoint());
    shifted.diagonal().array() += -opt.bounds.min_eigenvalue;
    Eigen::LLT<Mat> llt(shifted);
    if (llt.info() != Eigen::Success) inv.positivity_ok = false;
  }
};

}  // namespace

void validate(const LindbladSpec& spec) {
  const auto& l = spec.layout;
  if (l.slots() == 0) throw SpecError("spec has no layout");
  std::visit(
      [&](const auto& h) {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, OperatorMatrix>) {
          check_layout(l, h.layout(), "hamiltonian");
        } else if constexpr (std::is_same_v<T, TimeDependentHamiltonian>) {
          check_layout(l, h.h0.layout(), "hamiltonian");
          for (const auto& term : h.terms) {
            check_layout(l, term.op.layout(), "time-dependent term");
            if (!term.coeff) throw SpecError("time-dependent term without coefficient");
          }
        } else {
          if (h.segments.empty()) throw SpecError("piecewise hamiltonian has no segments");
          double prev = 0.0;
          for (const auto& seg : h.segments) {
            check_layout(l, seg.h.layout(), "piecewise segment");
            if (!(seg.t_end > prev)) throw SpecError("piecewise segment ends must increase");
            prev = seg.t_end;
          }
          if (!spec.t_grid.empty() && prev < spec.t_grid.back())
            throw SpecError("piecewise segments end before the time grid");
        }
      },
      spec.hamiltonian);
  for (const auto& c : spec.collapse) {
    check_layout(l, c.op.layout(), "collapse operator");
    if (!(c.rate.rad_per_us() >= 0.0)) throw SpecError("collapse rates must be >= 0");
  }
  for (const auto& o : spec.observables) check_layout(l, o.op.layout(), "observable");
  check_layout(l, spec.initial.layout(), "initial state");
  if (spec.t_grid.empty()) throw SpecError("time grid is empty");
  if (spec.t_grid.front() != 0.0) throw SpecError("time grid must start at 0");
  for (std::size_t k = 1; k < spec.t_grid.size(); ++k)
    if (!(spec.t_grid[k] > spec.t_grid[k - 1])) throw SpecError("time grid must be strictly increasing");
}

Mat lindblad_rhs(const LindbladSpec& spec, double t, const Mat& rho) {
  Mat out;
  std::visit(
      [&](const auto& h) {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, PiecewiseHamiltonian>) {
          for (const auto& seg : h.segments)
            if (t < seg.t_end || &seg == &h.segments.back()) {
              make_generator(seg.h, spec, false, 0.0).apply(t, rho, out, false);
              return;
            }
        } else {
          make_generator(h, spec, false, 0.0).apply(t, rho, out, false);
        }
      },
      spec.hamiltonian);
  return out;
}

EvolveResult evolve(const LindbladSpec& spec, const EvolveOptions& opt) {
  validate(spec);
  Recorder rec(spec, opt);
  Mat rho = spec.initial.density();

  Mat lab;
  auto run = [&](Generator gen, const std::vector<double>& grid, const std::vector<long>& global_index) {
    OdeStats st = integrate([&gen](double t, const Mat& y, Mat& dy) { gen.apply(t, y, dy, true); }, rho,
                            grid, spec.integrator, [&](std::size_t i, double t, const Mat& y) {
                              const bool last = i + 1 == grid.size();
                              if (global_index[i] < 0 && !last) return;
                              gen.to_lab(t, y, lab);
                              if (global_index[i] >= 0) rec.record(std::size_t(global_index[i]), t, lab);
                              if (last) rho = lab;
                            });
    rec.result.stats.accepted += st.accepted;
    rec.result.stats.rejected += st.rejected;
    rec.result.stats.rhs_evals += st.rhs_evals;
  };
  const bool rot = opt.rotating_frame;

  std::visit(
      [&](const auto& h) {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, PiecewiseHamiltonian>) {
          std::size_t next = 0;
          double start = 0.0;
          for (const auto& seg : h.segments) {
            if (next >= spec.t_grid.size()) break;
            std::vector<double> grid{start};
            std::vector<long> gi{-1};
            if (spec.t_grid[next] == start) gi[0] = long(next++);
            while (next < spec.t_grid.size() && spec.t_grid[next] <= seg.t_end) {
              grid.push_back(spec.t_grid[next]);
              gi.push_back(long(next++));
            }
            if (next < spec.t_grid.size() && grid.back() < seg.t_end) {
              grid.push_back(seg.t_end);
              gi.push_back(-1);
            }
            run(make_generator(seg.h, spec, rot, start), grid, gi);
            start = seg.t_end;
          }
        } else {
          std::vector<long> gi(spec.t_grid.size());
          for (std::size_t k = 0; k < gi.size(); ++k) gi[k] = long(k);
          run(make_generator(h, spec, rot, 0.0), spec.t_grid, gi);
        }
      },
      spec.hamiltonian);

  rec.result.final_density = rho;
  if (opt.check_invariants) rec.result.invariants.final_min_eigenvalue = min_eigenvalue_hermitian(rho);
  return std::move(rec.result);
}

std::vector<EvolveResult> evolve_sweep(const ModelProblem& base, const std::string& axis,
                                       const std::vector<double>& values, const EvolveOptions& opt,
                                       unsigned threads) {
  if (!base.params.count(axis)) throw UnknownParameter("unknown sweep parameter '" + axis + "'");
  std::vector<EvolveResult> out(values.size());
  if (values.empty()) return out;
  const SubsystemLayout layout(base.dims);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, unsigned(values.size()));

  std::vector<std::exception_ptr> errors(values.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= values.size()) return;
        k = next++;
      }
      try {
        ParameterSet p = base.params;
        p[axis] = values[k];
        out[k] = evolve(base.build(p, layout), opt);
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

namespace {

std::map<std::string, cplx> final_values(const EvolveResult& r) {
  std::map<std::string, cplx> m;
  for (const auto& s : r.series) m[s.label] = s.values.back();
  return m;
}

EvolveResult final_only(LindbladSpec spec) {
  spec.t_grid = {0.0, spec.t_grid.back()};
  EvolveOptions o;
  o.check_invariants = false;
  return evolve(spec, o);
}

double compare(const std::map<std::string, cplx>& a, const std::map<std::string, cplx>& b,
               ConvergenceReport& rep, double& worst_value) {
  double dev = 0.0;
  for (const auto& [label, v] : a) {
    auto it = b.find(label);
    if (it == b.end()) continue;
    const double d = std::abs(v - it->second);
    dev = std::max(dev, d);
    rep.deviations[label] = std::max(rep.deviations[label], d);
    if (d > worst_value) {
      worst_value = d;
      rep.worst_observable = label;
    }
  }
  return dev;
}

}  // namespace

ConvergenceReport convergence_check(const ModelProblem& problem, const EvolveResult& baseline,
                                    double threshold) {
  ConvergenceReport rep;
  rep.threshold = threshold;
  const SubsystemLayout layout(problem.dims);
  LindbladSpec spec = problem.build(problem.params, layout);
  validate(spec);
  std::vector<int> big = problem.dims;
  for (int s : problem.fock_slots) big[std::size_t(s)] = int(std::ceil(1.5 * big[std::size_t(s)]));
  rep.enlarged_dims = big;
  if (spec.t_grid.back() == 0.0) return rep;

  const auto ref = final_values(baseline);
  double worst = -1.0;

  LindbladSpec fine = spec;
  fine.integrator.rtol *= 0.5;
  fine.integrator.atol *= 0.5;
  if (fine.integrator.method == OdeMethod::RK4) fine.integrator.fixed_step *= 0.5;
  rep.tolerance_deviation = compare(ref, final_values(final_only(fine)), rep, worst);

  if (big != problem.dims) {
    const LindbladSpec wide = problem.build(problem.params, SubsystemLayout(big));
    rep.truncation_deviation = compare(ref, final_values(final_only(wide)), rep, worst);
  }
  rep.max_deviation = std::max(rep.tolerance_deviation, rep.truncation_deviation);
  rep.pass = rep.max_deviation < threshold;
  return rep;
}

ConvergenceReport convergence_check(const ModelProblem& problem, double threshold) {
  const LindbladSpec spec = problem.build(problem.params, SubsystemLayout(problem.dims));
  validate(spec);
  if (spec.t_grid.back() == 0.0) {
    ConvergenceReport rep;
    rep.threshold = threshold;
    return rep;
  }
  return convergence_check(problem, final_only(spec), threshold);
}

}  // namespace cisim
