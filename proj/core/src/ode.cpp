#include "cisim/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cisim/error.hpp"

namespace cisim {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b_hat
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// Scaled RMS norm over all complex components.
double error_norm(const Mat& err, const Mat& y0, const Mat& y1, double atol, double rtol) {
  double sum = 0.0;
  const cplx* e = err.data();
  const cplx* p = y0.data();
  const cplx* q = y1.data();
  for (Eigen::Index k = 0; k < err.size(); ++k) {
    const double sc = atol + rtol * std::max(std::abs(p[k]), std::abs(q[k]));
    sum += std::norm(e[k]) / (sc * sc);
  }
  return std::sqrt(sum / double(std::max<Eigen::Index>(err.size(), 1)));
}

OdeStats integrate_dp45(const OdeRhs& f, Mat y, const std::vector<double>& grid,
                        const OdeOptions& opt, const OdeObserver& observe) {
  OdeStats st;
  double t = grid.front();
  observe(0, t, y);
  if (grid.size() == 1) return st;

  Mat k1, k2, k3, k4, k5, k6, k7, tmp, ynew, err;
  f(t, y, k1);
  ++st.rhs_evals;

  // Initial step from the derivative scale (Hairer & Wanner II.4).
  double h;
  {
    const double d0 = error_norm(y, y, y, opt.atol, opt.rtol);
    const double d1 = error_norm(k1, y, y, opt.atol, opt.rtol);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    const double span = grid.back() - grid.front();
    if (span > 0.0) h = std::min(h, span);
  }

  for (std::size_t idx = 1; idx < grid.size(); ++idx) {
    const double target = grid[idx];
    while (t < target) {
      if (st.accepted + st.rejected >= opt.max_steps)
        throw IntegrationError("maximum number of integrator steps exceeded");
      const double remaining = target - t;
      const bool clamp = h >= remaining * (1.0 - 1e-12);
      const double hs = clamp ? remaining : h;

      tmp = y + hs * a21 * k1;
      f(t + c2 * hs, tmp, k2);
      tmp = y + hs * (a31 * k1 + a32 * k2);
      f(t + c3 * hs, tmp, k3);
      tmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
      f(t + c4 * hs, tmp, k4);
      tmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      f(t + c5 * hs, tmp, k5);
      tmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      f(t + hs, tmp, k6);
      ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      f(t + hs, ynew, k7);
      st.rhs_evals += 6;
      err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double en = error_norm(err, y, ynew, opt.atol, opt.rtol);

      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      if (en <= 1.0) {
        t = clamp ? target : t + hs;
        y.swap(ynew);
        k1.swap(k7);
        ++st.accepted;
        // A clamped step says nothing about the natural step; only grow from it.
        h = clamp ? std::max(h, hs * fac) : hs * fac;
      } else {
        ++st.rejected;
        h = hs * std::max(fac, 0.2);
        if (h < opt.min_step)
          throw IntegrationError("step size fell below minimum at t = " + std::to_string(t));
      }
    }
    observe(idx, t, y);
  }
  return st;
}

OdeStats integrate_rk4(const OdeRhs& f, Mat y, const std::vector<double>& grid,
                       const OdeOptions& opt, const OdeObserver& observe) {
  if (!(opt.fixed_step > 0.0)) throw IntegrationError("RK4 needs a positive fixed step");
  OdeStats st;
  double t = grid.front();
  observe(0, t, y);
  Mat k1, k2, k3, k4, tmp;
  for (std::size_t idx = 1; idx < grid.size(); ++idx) {
    const double span = grid[idx] - t;
    const long n = span > 0.0 ? long(std::ceil(span / opt.fixed_step - 1e-9)) : 0;
    const double h = n > 0 ? span / double(n) : 0.0;
    for (long s = 0; s < n; ++s) {
      const double ts = t + double(s) * h;
      f(ts, y, k1);
      tmp = y + 0.5 * h * k1;
      f(ts + 0.5 * h, tmp, k2);
      tmp = y + 0.5 * h * k2;
      f(ts + 0.5 * h, tmp, k3);
      tmp = y + h * k3;
      f(ts + h, tmp, k4);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      st.rhs_evals += 4;
      ++st.accepted;
    }
    t = grid[idx];
    observe(idx, t, y);
  }
  return st;
}

}  // namespace

OdeStats integrate(const OdeRhs& f, Mat y, const std::vector<double>& grid, const OdeOptions& opt,
                   const OdeObserver& observe) {
  if (grid.empty()) throw IntegrationError("empty time grid");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (grid[k] < grid[k - 1]) throw IntegrationError("time grid must be nondecreasing");
  if (opt.method == OdeMethod::RK4) return integrate_rk4(f, std::move(y), grid, opt, observe);
  return integrate_dp45(f, std::move(y), grid, opt, observe);
}

}  // namespace cisim
