#include "cisim/oracles.hpp"

#include <cmath>

#include "cisim/error.hpp"
#include "cisim/ode.hpp"

namespace cisim::oracles {

double revival_probability(double beta, FrequencyParam delta_a, double t_us) {
  if (t_us < 0.0) throw InvalidArgument("revival_probability needs t >= 0");
  return std::exp(2.0 * beta * beta * (std::cos(delta_a.rad_per_us() * t_us) - 1.0));
}

double revival_probability(FrequencyParam g_x, FrequencyParam delta_a, double t_us) {
  return revival_probability(g_x.rad_per_us() / delta_a.rad_per_us(), delta_a, t_us);
}

cplx chevron_field(FrequencyParam g, FrequencyParam kappa, FrequencyParam delta, double t_us, cplx d0) {
  if (t_us < 0.0) throw InvalidArgument("chevron_field needs t >= 0");
  const double gg = g.rad_per_us();
  const cplx keff(kappa.rad_per_us(), 2.0 * delta.rad_per_us());
  // z^2 = (W t / 4)^2; cosh(z) and sinh(z)/z depend on z^2 only.
  const cplx z2 = (keff * keff - 16.0 * gg * gg) * (t_us * t_us / 16.0);
  cplx ch, shc;
  if (std::abs(z2) < 1e-8) {
    ch = 1.0 + z2 / 2.0 + z2 * z2 / 24.0;
    shc = 1.0 + z2 / 6.0 + z2 * z2 / 120.0;
  } else {
    const cplx z = std::sqrt(z2);
    ch = std::cosh(z);
    shc = std::sinh(z) / z;
  }
  return d0 * std::exp(-keff * t_us / 4.0) * (ch + keff * t_us / 4.0 * shc);
}

double chevron_population(FrequencyParam g, FrequencyParam kappa, FrequencyParam delta, double t_us,
                          SidebandKind kind) {
  const double blue = std::norm(chevron_field(g, kappa, delta, t_us));
  return kind == SidebandKind::Blue ? blue : 1.0 - blue;
}

cplx pure_dephasing_coherence(FrequencyParam g, FrequencyParam kappa_b, double t_us) {
  if (t_us < 0.0) throw InvalidArgument("pure_dephasing_coherence needs t >= 0");
  const double k = kappa_b.rad_per_us();
  if (!(k > 0.0)) throw InvalidArgument("pure_dephasing_coherence needs kappa_b > 0");
  const double gg = g.rad_per_us();
  const double e = -8.0 * gg * gg * t_us / k + 16.0 * gg * gg / (k * k) * (-std::expm1(-k * t_us / 2.0));
  return 0.5 * std::exp(e);
}

TimeSeries positive_p_ode(FrequencyParam g, FrequencyParam kappa_b, FrequencyParam delta_y,
                          const std::vector<double>& t_grid) {
  const double k = kappa_b.rad_per_us();
  if (!(k > 0.0)) throw InvalidArgument("positive_p_ode needs kappa_b > 0");
  const double gg = g.rad_per_us();
  const double dd = delta_y.rad_per_us();
  const cplx i(0.0, 1.0);
  TimeSeries ts{"coherence", t_grid, std::vector<cplx>(t_grid.size())};
  if (t_grid.empty()) return ts;

  // y = (beta, gamma, ln C)
  Mat y0(3, 1);
  y0 << 0.0, 0.0, std::log(0.5);
  auto rhs = [&](double, const Mat& y, Mat& dy) {
    dy.resize(3, 1);
    dy(0) = (i * dd - k / 2.0) * y(0) - i * gg;
    dy(1) = (-i * dd - k / 2.0) * y(1) - i * gg;
    dy(2) = -2.0 * i * gg * (y(0) + y(1));
  };
  OdeOptions opt;
  opt.rtol = 1e-12;
  opt.atol = 1e-14;
  std::vector<double> grid = t_grid;
  const bool prepend = grid.front() != 0.0;
  if (prepend) grid.insert(grid.begin(), 0.0);
  try {
    integrate(rhs, y0, grid, opt, [&](std::size_t idx, double, const Mat& y) {
      if (prepend && idx == 0) return;
      ts.values[prepend ? idx - 1 : idx] = std::exp(y(2));
    });
  } catch (const IntegrationError& e) {
    throw IntegrationError(std::string("positive_p_ode: ") + e.what());
  }
  return ts;
}

cplx conditional_mean_field(FrequencyParam g, FrequencyParam kappa_b, double t_us) {
  const double k = kappa_b.rad_per_us();
  return cplx(0.0, 2.0 * g.rad_per_us()) * (-std::expm1(-k * t_us / 2.0)) / k;
}

double measurement_rate(FrequencyParam g, FrequencyParam kappa_b, FrequencyParam delta_b) {
  const double gg = g.rad_per_us(), k = kappa_b.rad_per_us(), d = delta_b.rad_per_us();
  return gg * gg * k / (k * k / 4.0 + d * d);
}

ZenoPrediction zeno_effective_rate(ZenoCase which, FrequencyParam energy_gap, FrequencyParam delta_y,
                                   FrequencyParam g, FrequencyParam kappa_b) {
  const double e = energy_gap.rad_per_us(), d = delta_y.rad_per_us();
  const double gg = g.rad_per_us(), k = kappa_b.rad_per_us();
  ZenoPrediction p;
  if (which == ZenoCase::A) {
    p.kappa_q = gg * gg * k / (4.0 * e * e + k * k / 4.0);
    p.steady_state_sigma_x = 0.0;
    // Symmetric jumps |+><-| and |-><+| at rate kappa_q each.
    p.sigma_x_relaxation_rate = 2.0 * p.kappa_q;
    if (!(k > 3.0 * gg)) p.warnings.push_back("case (a) expects kappa_b >> g");
  } else {
    const double det = 2.0 * e - d;
    p.kappa_q = gg * gg * k / (det * det + k * k / 4.0);
    p.steady_state_sigma_x = -1.0;
    // Single jump |-><+| at rate kappa_q.
    p.sigma_x_relaxation_rate = p.kappa_q;
    const double near = std::abs(2.0 * d - e), far = std::abs(2.0 * d + e);
    if (!(near < far)) p.warnings.push_back("case (b) expects |2 Delta_y - E| << |2 Delta_y + E|");
    if (!(far > 3.0 * k)) p.warnings.push_back("case (b) expects |2 Delta_y + E| >> kappa_b");
    if (!(k > 3.0 * gg)) p.warnings.push_back("case (b) expects kappa_b >> g");
  }
  return p;
}

}  // namespace cisim::oracles
