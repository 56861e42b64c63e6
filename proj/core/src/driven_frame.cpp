#include "cisim/driven_frame.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/roots.hpp>

#include "cisim/error.hpp"
#include "cisim/ode.hpp"

namespace cisim::driven {

namespace {

Eigen::MatrixXd transmon_hamiltonian(double alpha, double eps, double delta, int n) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) h(k, k) = -delta * k - 0.5 * alpha * k * (k - 1);
  for (int k = 1; k < n; ++k) h(k - 1, k) = h(k, k - 1) = eps * std::sqrt(double(k));
  return h;
}

struct Tracked {
  Eigen::MatrixXd vecs;  // columns follow Fock-id labels 0..n-1
  Eigen::VectorXd vals;
};

Tracked order_by_labels(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& es,
                        const Eigen::MatrixXd* prev) {
  const int n = int(es.eigenvalues().size());
  Tracked t{Eigen::MatrixXd(n, n), Eigen::VectorXd(n)};
  std::vector<int> assign(std::size_t(n), -1);
  std::vector<bool> used(std::size_t(n), false);
  if (!prev) {
    // Undriven: eigenvectors are Fock states.
    for (int j = 0; j < n; ++j) {
      Eigen::Index fock;
      es.eigenvectors().col(j).cwiseAbs().maxCoeff(&fock);
      assign[std::size_t(fock)] = j;
    }
  } else {
    const Eigen::MatrixXd ov = (prev->transpose() * es.eigenvectors()).cwiseAbs2();
    std::vector<std::pair<double, std::pair<int, int>>> cand;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) cand.push_back({ov(i, j), {i, j}});
    std::sort(cand.begin(), cand.end(), [](auto& a, auto& b) { return a.first > b.first; });
    for (const auto& [w, ij] : cand) {
      const auto [i, j] = ij;
      if (assign[std::size_t(i)] >= 0 || used[std::size_t(j)]) continue;
      assign[std::size_t(i)] = j;
      used[std::size_t(j)] = true;
    }
  }
  for (int i = 0; i < n; ++i) {
    const int j = assign[std::size_t(i)];
    if (j < 0) throw Error("eigenvector labeling failed");
    Eigen::VectorXd v = es.eigenvectors().col(j);
    if (prev && prev->col(i).dot(v) < 0.0) v = -v;
    t.vecs.col(i) = v;
    t.vals(i) = es.eigenvalues()(j);
  }
  return t;
}

}  // namespace

DrivenBasis diagonalize_driven_transmon(const TransmonDriveParams& p, int ramp_steps) {
  const int n = p.levels;
  if (n < 4) throw InvalidDimension("transmon needs at least 4 levels");
  const double alpha = p.alpha_q.rad_per_us();
  if (!(alpha > 0.0)) throw InvalidArgument("anharmonicity must be > 0");
  const double eps = p.epsilon_r.rad_per_us();
  const double delta = p.delta_r.rad_per_us();
  ramp_steps = std::max(ramp_steps, 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(transmon_hamiltonian(alpha, 0.0, delta, n));
  Tracked cur = order_by_labels(es, nullptr);
  double min_overlap = 1.0;
  if (eps != 0.0) {
    for (int k = 1; k <= ramp_steps; ++k) {
      es.compute(transmon_hamiltonian(alpha, eps * double(k) / ramp_steps, delta, n));
      Tracked next = order_by_labels(es, &cur.vecs);
      // Continuity of the {0,1} pair as a subspace, and of |2>.
      const Eigen::MatrixXd pair = cur.vecs.leftCols(2);
      for (int j = 0; j < 2; ++j)
        min_overlap = std::min(min_overlap, (pair.transpose() * next.vecs.col(j)).squaredNorm());
      min_overlap = std::min(min_overlap, std::pow(cur.vecs.col(2).dot(next.vecs.col(2)), 2));
      cur = std::move(next);
    }
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  if (cur.vals(1) > cur.vals(0)) std::swap(order[0], order[1]);
  std::sort(order.begin() + 3, order.end(), [&](int a, int b) { return cur.vals(a) > cur.vals(b); });

  DrivenBasis b;
  Eigen::MatrixXd v(n, n);
  for (int k = 0; k < n; ++k) {
    v.col(k) = cur.vecs.col(order[std::size_t(k)]);
    b.energies.push_back(cur.vals(order[std::size_t(k)]));
  }
  b.transform = v.cast<cplx>();
  Eigen::VectorXd nd(n);
  for (int k = 0; k < n; ++k) nd(k) = double(k);
  b.dressing = (v.transpose() * nd.asDiagonal() * v).cast<cplx>();
  b.omega_r = FrequencyParam::rad_per_us(b.energies[0] - b.energies[1]);
  b.alpha_tilde = FrequencyParam::rad_per_us(b.energies[1] - b.energies[2] - b.omega_r.rad_per_us());
  b.min_label_overlap = min_overlap;
  for (int k = 0; k < 3; ++k)
    b.top_population = std::max(b.top_population, v(n - 1, k) * v(n - 1, k) + v(n - 2, k) * v(n - 2, k));
  if (b.top_population > 1e-6)
    throw TruncationError("top transmon levels hold " + std::to_string(b.top_population) +
                          " population; increase levels");
  return b;
}

FrequencyParam residual_cross_kerr(const DrivenBasis& basis, FrequencyParam chi) {
  return FrequencyParam::rad_per_us(chi.rad_per_us() * (basis.u_pp() - basis.u_mm()));
}

namespace {

constexpr int kSolverRamp = 64;

double rabi_at(double alpha, double eps, double delta, int levels) {
  return diagonalize_driven_transmon({FrequencyParam::rad_per_us(alpha), FrequencyParam::rad_per_us(eps),
                                      FrequencyParam::rad_per_us(delta), levels},
                                     kSolverRamp)
      .omega_r.rad_per_us();
}

}  // namespace

FrequencyParam solve_drive_for_rabi(FrequencyParam alpha_q, FrequencyParam delta_r,
                                    FrequencyParam omega_target, int levels) {
  const double alpha = alpha_q.rad_per_us(), delta = delta_r.rad_per_us();
  const double target = omega_target.rad_per_us();
  auto f = [&](double eps) { return rabi_at(alpha, eps, delta, levels) - target; };
  const double f0 = f(0.0);
  if (f0 >= 0.0) {
    if (f0 == 0.0) return FrequencyParam::rad_per_us(0.0);
    throw InvalidArgument("Rabi target below |Delta_R|; not reachable");
  }
  double hi = target, fhi = f(hi);
  for (int k = 0; fhi < 0.0; ++k) {
    if (k > 30) throw InvalidArgument("Rabi target not reachable");
    hi *= 2.0;
    fhi = f(hi);
  }
  std::uintmax_t iters = 200;
  // 1e-7 rad/us is far below 1 kHz.
  auto tol = [](double a, double b) { return std::abs(b - a) < 1e-7; };
  auto r = boost::math::tools::toms748_solve(f, 0.0, hi, f0, fhi, tol, iters);
  return FrequencyParam::rad_per_us(0.5 * (r.first + r.second));
}

NullResult null_cross_kerr(FrequencyParam alpha_q, FrequencyParam omega_target, int levels) {
  const double target = omega_target.rad_per_us();
  if (!(target > 0.0)) throw InvalidArgument("Rabi target must be > 0");
  auto basis_at = [&](double delta) {
    const FrequencyParam d = FrequencyParam::rad_per_us(delta);
    const FrequencyParam eps = solve_drive_for_rabi(alpha_q, d, omega_target, levels);
    return std::make_pair(eps, diagonalize_driven_transmon({alpha_q, eps, d, levels}));
  };
  auto residual = [&](double delta) {
    const auto b = basis_at(delta).second;
    return b.u_pp() - b.u_mm();
  };

  const int npts = 37;
  const double lim = 0.45 * target;
  std::vector<double> ds(npts), rs(npts);
  for (int k = 0; k < npts; ++k) {
    ds[std::size_t(k)] = -lim + 2.0 * lim * k / (npts - 1);
    rs[std::size_t(k)] = residual(ds[std::size_t(k)]);
  }
  int best = -1;
  for (int k = 0; k + 1 < npts; ++k) {
    if (rs[std::size_t(k)] == 0.0 || (rs[std::size_t(k)] < 0.0) != (rs[std::size_t(k + 1)] < 0.0)) {
      const double mid = std::abs(ds[std::size_t(k)] + ds[std::size_t(k + 1)]);
      if (best < 0 || mid < std::abs(ds[std::size_t(best)] + ds[std::size_t(best + 1)])) best = k;
    }
  }
  if (best < 0) throw NoNullFound("residual cross-Kerr has no sign change in the scanned Delta_R range");

  double root;
  if (rs[std::size_t(best)] == 0.0) {
    root = ds[std::size_t(best)];
  } else {
    std::uintmax_t iters = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) < 2.0 * std::numbers::pi * 1e-6; };
    auto r = boost::math::tools::toms748_solve(residual, ds[std::size_t(best)], ds[std::size_t(best + 1)],
                                               rs[std::size_t(best)], rs[std::size_t(best + 1)], tol, iters);
    root = 0.5 * (r.first + r.second);
  }
  NullResult out;
  auto [eps, basis] = basis_at(root);
  out.delta_r = FrequencyParam::rad_per_us(root);
  out.epsilon_r = eps;
  out.residual_over_chi = basis.u_pp() - basis.u_mm();
  out.basis = std::move(basis);
  return out;
}

RwaReport rwa_conditions(const EngineeringParams& eng, FrequencyParam delta_c, FrequencyParam omega_r,
                         double photon_scale, double x_expect, double threshold) {
  const double om = omega_r.rad_per_us();
  if (!(om > 0.0)) throw InvalidArgument("Omega_R must be > 0");
  if (eng.xi0 < 0.0) throw InvalidArgument("xi0 must be >= 0");
  RwaReport r;
  r.threshold = threshold;
  r.g = eng.g();
  r.displacement_ratio = std::abs(delta_c.rad_per_us() * eng.xi0 * x_expect) / om;
  r.photon_ratio = eng.xi0 > 0.0 ? r.g / eng.xi0 * photon_scale / om : eng.chi.rad_per_us() * eng.u_pm * photon_scale / om;
  r.drive_ratio = r.g * eng.xi0 / om;
  r.displacement_ok = r.displacement_ratio <= threshold;
  r.photon_ok = r.photon_ratio <= threshold;
  r.drive_ok = r.drive_ratio <= threshold;
  r.chi_over_g = r.g > 0.0 ? eng.chi.rad_per_us() / r.g : 0.0;
  r.optimal_xi0 = r.g > 0.0 ? optimal_xi0(FrequencyParam::rad_per_us(r.g), delta_c, photon_scale, x_expect) : 0.0;
  return r;
}

double implied_xi0(FrequencyParam g, FrequencyParam chi, double u_pm) {
  return g.rad_per_us() / (chi.rad_per_us() * u_pm);
}

double optimal_xi0(FrequencyParam g, FrequencyParam delta_c, double photon_scale, double x_expect) {
  const double gg = g.rad_per_us();
  const double rising = std::max(std::abs(delta_c.rad_per_us() * x_expect), gg);
  return std::sqrt(gg * photon_scale / rising);
}

namespace {

struct Ops {
  Mat n, x, id, pp, pm, spm;  // cavity n, x, identity; qubit |+><+|, |-><-|, |+><-|
};

Ops make_ops(int dim) {
  Ops o;
  o.n = Mat::Zero(dim, dim);
  Mat a = Mat::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) o.n(k, k) = double(k);
  for (int k = 1; k < dim; ++k) a(k - 1, k) = std::sqrt(double(k));
  o.x = a + a.adjoint();
  o.id = Mat::Identity(dim, dim);
  o.pp = Mat::Zero(2, 2);
  o.pp(0, 0) = 1.0;
  o.pm = Mat::Zero(2, 2);
  o.pm(1, 1) = 1.0;
  o.spm = Mat::Zero(2, 2);
  o.spm(0, 1) = 1.0;
  return o;
}

double horizon_for(const EffectiveCheck& c) {
  double t = c.horizon_us;
  if (!(t > 0.0)) {
    const double g = c.eng.g();
    const double dc = std::abs(c.delta_c.rad_per_us());
    t = g > 0.0 ? 1.0 / g : (dc > 0.0 ? 1.0 / dc : 1.0);
  }
  if (c.stroboscopic) {
    const double period = 2.0 * std::numbers::pi / c.omega_r.rad_per_us();
    t = std::max(1.0, std::round(t / period)) * period;
  }
  return t;
}

}  // namespace

Mat effective_hamiltonian(const EffectiveCheck& c) {
  const Ops o = make_ops(c.cavity_dim);
  const double chi = c.eng.chi.rad_per_us(), xi0 = c.eng.xi0, dc = c.delta_c.rad_per_us();
  const cplx ph = std::exp(cplx(0.0, -c.eng.phi_delta));
  const Mat diag_u = c.u_pp * o.pp + c.u_mm * o.pm;
  const Mat coupling = ph * o.spm + std::conj(ph) * o.spm.adjoint();
  return dc * kron(Mat::Identity(2, 2), o.n) - chi * xi0 * c.eng.u_pm * kron(coupling, o.x) -
         chi * kron(diag_u, o.n) - 2.0 * chi * xi0 * xi0 * kron(diag_u, o.id);
}

EffectiveCheckResult verify_effective_hamiltonian(const EffectiveCheck& c) {
  if (!(c.omega_r.rad_per_us() > 0.0)) throw InvalidArgument("Omega_R must be > 0");
  if (c.cavity_dim < 2) throw InvalidDimension("cavity_dim must be >= 2");
  const Ops o = make_ops(c.cavity_dim);
  const double chi = c.eng.chi.rad_per_us(), xi0 = c.eng.xi0, dc = c.delta_c.rad_per_us();
  const double om = c.omega_r.rad_per_us(), phi = c.eng.phi_delta;
  const double upm = c.eng.u_pm;
  const Mat diag_u = c.u_pp * o.pp + c.u_mm * o.pm;
  const Mat i2 = Mat::Identity(2, 2);
  const Mat hn = dc * kron(i2, o.n) - chi * kron(diag_u, o.n);
  const Mat hx_free = kron(i2, o.x);
  const Mat x_full = kron(i2, o.x), id_full = kron(i2, o.id);

  // H(t) = Delta_c (n + xi X) - chi Q(t) (n + xi X + xi^2), xi = 2 xi0 cos(Omega t + phi).
  auto rhs = [&](double t, const Mat& psi, Mat& dpsi) {
    const double xi = 2.0 * xi0 * std::cos(om * t + phi);
    const cplx e = std::exp(cplx(0.0, om * t));
    const Mat qoff = upm * (e * o.spm + std::conj(e) * o.spm.adjoint());
    const Mat qfull = kron(diag_u, o.id) + kron(qoff, o.id);
    Mat h = hn + dc * xi * hx_free;
    h -= chi * kron(qoff, o.n);
    h -= chi * (qfull * (xi * x_full + xi * xi * id_full));
    dpsi.noalias() = cplx(0.0, -1.0) * (h * psi);
  };

  const double t_end = horizon_for(c);
  Mat psi0 = Mat::Zero(2 * c.cavity_dim, 1);
  psi0(0, 0) = 1.0;  // |+> (x) |0>
  OdeOptions opt;
  opt.rtol = 1e-11;
  opt.atol = 1e-13;
  Mat psi_full;
  integrate(rhs, psi0, {0.0, t_end}, opt, [&](std::size_t i, double, const Mat& y) {
    if (i == 1) psi_full = y;
  });
  const Mat heff = effective_hamiltonian(c);
  const Vec psi_eff = expm_hermitian(heff, cplx(0.0, -t_end)) * psi0.col(0);
  EffectiveCheckResult r;
  r.horizon_us = t_end;
  r.infidelity = std::max(0.0, 1.0 - std::norm(psi_eff.dot(psi_full.col(0))));
  return r;
}

}  // namespace cisim::driven
