#include "cisim/phase_space.hpp"

#include <cmath>
#include <numbers>

#include "cisim/error.hpp"

namespace cisim {

namespace {

// Columns D(beta)|m>, rows 0..n-1, from D|m> = (a^dagger - beta^*) D|m-1> / sqrt(m).
// Rows 0..n-1 of the result only need rows 0..n-2 of the previous column, so the
// recurrence is exact on the kept block.
Mat displacement_block(cplx beta, int n) {
  Mat d(n, n);
  d(0, 0) = std::exp(-0.5 * std::norm(beta));
  for (int k = 1; k < n; ++k) d(k, 0) = d(k - 1, 0) * beta / std::sqrt(double(k));
  const cplx bc = std::conj(beta);
  for (int m = 1; m < n; ++m) {
    const double inv = 1.0 / std::sqrt(double(m));
    for (int k = 0; k < n; ++k) {
      const cplx up = k > 0 ? std::sqrt(double(k)) * d(k - 1, m - 1) : cplx(0.0);
      d(k, m) = (up - bc * d(k, m - 1)) * inv;
    }
  }
  return d;
}

double wigner_point(const Mat& rho, cplx alpha) {
  const int n = int(rho.rows());
  // D(a) Pi D(-a) = Pi D(-2a), so W = (2/pi) sum_k (-1)^k [D(-2a) rho]_kk.
  const Mat d = displacement_block(-2.0 * alpha, n);
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const double v = (d.row(k) * rho.col(k))(0, 0).real();
    acc += (k % 2 == 0) ? v : -v;
  }
  return 2.0 / std::numbers::pi * acc;
}

Mat single_mode_density(const QuantumState& state) {
  if (state.layout().slots() != 1)
    throw LayoutError("wigner expects a single-mode state; partial-trace first");
  return state.density();
}

}  // namespace

std::vector<double> wigner(const QuantumState& state, const std::vector<cplx>& points) {
  const Mat rho = single_mode_density(state);
  std::vector<double> out;
  out.reserve(points.size());
  for (cplx p : points) out.push_back(wigner_point(rho, p));
  return out;
}

WignerGrid wigner_grid(const QuantumState& state, const std::vector<double>& re_axis,
                       const std::vector<double>& im_axis) {
  const Mat rho = single_mode_density(state);
  WignerGrid g{re_axis, im_axis, Eigen::MatrixXd(Eigen::Index(re_axis.size()), Eigen::Index(im_axis.size()))};
  for (std::size_t i = 0; i < re_axis.size(); ++i)
    for (std::size_t j = 0; j < im_axis.size(); ++j)
      g.values(Eigen::Index(i), Eigen::Index(j)) = wigner_point(rho, cplx(re_axis[i], im_axis[j]));
  return g;
}

double wigner_integral(const WignerGrid& g) {
  auto weights = [](const std::vector<double>& ax) {
    std::vector<double> w(ax.size(), 0.0);
    for (std::size_t k = 0; k + 1 < ax.size(); ++k) {
      const double h = 0.5 * (ax[k + 1] - ax[k]);
      w[k] += h;
      w[k + 1] += h;
    }
    return w;
  };
  const auto wr = weights(g.re_axis);
  const auto wi = weights(g.im_axis);
  double s = 0.0;
  for (std::size_t i = 0; i < wr.size(); ++i)
    for (std::size_t j = 0; j < wi.size(); ++j) s += wr[i] * wi[j] * g.values(Eigen::Index(i), Eigen::Index(j));
  return s;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw InvalidArgument("linspace needs n >= 1");
  std::vector<double> v(static_cast<std::size_t>(n));
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (int k = 0; k < n; ++k) v[std::size_t(k)] = lo + (hi - lo) * double(k) / double(n - 1);
  return v;
}

}  // namespace cisim
