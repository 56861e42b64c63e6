#include "cisim/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "cisim/error.hpp"

namespace cisim::fit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Parameter> nuisance(bool amplitude_free) {
  return {{"amplitude", 1.0, -1e6, 1e6, amplitude_free, false},
          {"offset", 0.0, -1e6, 1e6, false, false},
          {"t_offset_us", 0.0, -1e6, 1e6, false, false}};
}

std::vector<Parameter> with_nuisance(std::vector<Parameter> p, bool amplitude_free) {
  auto n = nuisance(amplitude_free);
  p.insert(p.end(), n.begin(), n.end());
  return p;
}

}  // namespace

FitModel FitModel::revival() {
  return FitModel(ModelKind::Revival, with_nuisance({{"beta", 1.0, 0.0, 20.0, true, false},
                                                     {"delta_a_khz", 100.0, 1e-3, 1e6, true, false}},
                                                    false));
}

FitModel FitModel::exp_decay() {
  return FitModel(ModelKind::ExpDecay, with_nuisance({{"T_us", 1.0, 1e-9, 1e12, true, false}}, true));
}

FitModel FitModel::chevron(oracles::SidebandKind kind) {
  FitModel m(ModelKind::Chevron, with_nuisance({{"g_khz", 100.0, 1e-6, 1e6, true, false},
                                                {"kappa_khz", 100.0, 0.0, 1e6, true, false}},
                                               false));
  m.sideband_ = kind;
  return m;
}

FitModel FitModel::by_name(const std::string& name) {
  if (name == "revival") return revival();
  if (name == "exp_decay") return exp_decay();
  if (name == "chevron") return chevron(oracles::SidebandKind::Blue);
  if (name == "chevron_red") return chevron(oracles::SidebandKind::Red);
  throw InvalidArgument("unknown fit model '" + name + "'");
}

std::string FitModel::name() const {
  switch (kind_) {
    case ModelKind::Revival: return "revival";
    case ModelKind::ExpDecay: return "exp_decay";
    case ModelKind::Chevron: return sideband_ == oracles::SidebandKind::Red ? "chevron_red" : "chevron";
  }
  return "";
}

Parameter& FitModel::at(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw UnknownParameter("model " + this->name() + " has no parameter '" + name + "'");
}

const Parameter& FitModel::at(const std::string& name) const {
  return const_cast<FitModel*>(this)->at(name);
}

FitModel& FitModel::set(const std::string& name, double value) {
  auto& p = at(name);
  p.value = value;
  p.user_guess = true;
  return *this;
}

FitModel& FitModel::freeze(const std::string& name, double value) {
  auto& p = at(name);
  p.value = value;
  p.free = false;
  p.user_guess = true;
  return *this;
}

FitModel& FitModel::release(const std::string& name) {
  at(name).free = true;
  return *this;
}

FitModel& FitModel::bounds(const std::string& name, double lower, double upper) {
  auto& p = at(name);
  p.lower = lower;
  p.upper = upper;
  return *this;
}

void FitModel::validate() const {
  for (const auto& p : params_) {
    if (!(p.lower <= p.upper)) throw InvalidArgument("bounds of '" + p.name + "' are not ordered");
    if (p.free && (p.value < p.lower || p.value > p.upper))
      throw InvalidArgument("initial guess of '" + p.name + "' outside its bounds");
  }
}

double FitModel::evaluate(const std::vector<double>& v, double t_us, double delta_khz) const {
  const double amp = v[v.size() - 3], off = v[v.size() - 2], t0 = v[v.size() - 1];
  const double t = t_us - t0;
  double core = 0.0;
  switch (kind_) {
    case ModelKind::Revival: {
      const double w = FrequencyParam::khz(v[1]).rad_per_us();
      core = std::exp(2.0 * v[0] * v[0] * (std::cos(w * t) - 1.0));
      break;
    }
    case ModelKind::ExpDecay: core = std::exp(-t / v[0]); break;
    case ModelKind::Chevron:
      core = oracles::chevron_population(FrequencyParam::khz(v[0]), FrequencyParam::khz(v[1]),
                                         FrequencyParam::khz(delta_khz), std::max(t, 0.0), sideband_);
      break;
  }
  return amp * core + off;
}

double FitModel::evaluate(double t_us, double delta_khz) const {
  std::vector<double> v;
  for (const auto& p : params_) v.push_back(p.value);
  return evaluate(v, t_us, delta_khz);
}

DataSet from_time_series(const TimeSeries& ts) {
  DataSet d;
  d.t_us = ts.times;
  d.y = ts.real();
  return d;
}

double FitResult::value(const std::string& name) const {
  for (const auto& e : estimates)
    if (e.name == name) return e.value;
  throw UnknownParameter("no estimate named '" + name + "'");
}

double FitResult::sigma(const std::string& name) const {
  for (const auto& e : estimates)
    if (e.name == name) return e.sigma;
  throw UnknownParameter("no estimate named '" + name + "'");
}

double dominant_frequency(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  if (n < 4) throw InvalidArgument("need at least 4 samples for a frequency estimate");
  const auto [tmin, tmax] = std::minmax_element(t.begin(), t.end());
  const double span = *tmax - *tmin;
  if (!(span > 0.0)) throw InvalidArgument("time samples span zero duration");
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
  auto power = [&](double f) {
    double c = 0.0, s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double ph = 2.0 * std::numbers::pi * f * t[k];
      c += (y[k] - mean) * std::cos(ph);
      s += (y[k] - mean) * std::sin(ph);
    }
    return c * c + s * s;
  };
  const double fmin = 0.25 / span, fmax = 0.5 * double(n - 1) / span;
  const int m = 4000;
  double best_f = fmin, best_p = -1.0;
  for (int k = 0; k <= m; ++k) {
    const double f = fmin + (fmax - fmin) * k / m;
    const double p = power(f);
    if (p > best_p) {
      best_p = p;
      best_f = f;
    }
  }
  const double h = (fmax - fmin) / m;
  for (int k = -100; k <= 100; ++k) {
    const double f = best_f + h * k / 100.0;
    if (f <= 0.0) continue;
    const double p = power(f);
    if (p > best_p) {
      best_p = p;
      best_f = f;
    }
  }
  return best_f;
}

namespace {

void guess(FitModel& m, const std::string& name, double value) {
  auto& p = m.at(name);
  if (!p.free || p.user_guess) return;
  p.value = std::clamp(value, p.lower, p.upper);
}

}  // namespace

FitModel initial_guess(FitModel model, const DataSet& data) {
  const double amp = model.at("amplitude").value, off = model.at("offset").value;
  switch (model.kind()) {
    case ModelKind::Revival: {
      const double f = dominant_frequency(data.t_us, data.y);
      guess(model, "delta_a_khz", 1e3 * f);
      const double ymin = *std::min_element(data.y.begin(), data.y.end());
      const double pmin = std::clamp((ymin - off) / (amp != 0.0 ? amp : 1.0), 1e-12, 0.999);
      guess(model, "beta", std::sqrt(-std::log(pmin) / 4.0));
      break;
    }
    case ModelKind::ExpDecay: {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      int n = 0;
      const double ymax = *std::max_element(data.y.begin(), data.y.end());
      for (std::size_t k = 0; k < data.size(); ++k) {
        const double v = data.y[k] - off;
        if (v <= 1e-3 * (ymax - off)) continue;
        const double l = std::log(v);
        sx += data.t_us[k];
        sy += l;
        sxx += data.t_us[k] * data.t_us[k];
        sxy += data.t_us[k] * l;
        ++n;
      }
      const double den = n * sxx - sx * sx;
      if (n >= 2 && den > 0.0) {
        const double slope = (n * sxy - sx * sy) / den;
        const double icpt = (sy - slope * sx) / n;
        if (slope < 0.0) guess(model, "T_us", -1.0 / slope);
        guess(model, "amplitude", std::exp(icpt));
      }
      break;
    }
    case ModelKind::Chevron: {
      // Row nearest delta = 0: |d|^2 ~ cos^2(g t) oscillates at g/pi cycles/us.
      double best = kInf;
      for (double d : data.delta_khz) best = std::min(best, std::abs(d));
      std::vector<double> t, y;
      for (std::size_t k = 0; k < data.size(); ++k)
        if (std::abs(data.delta_khz[k]) == best) {
          t.push_back(data.t_us[k]);
          y.push_back(data.y[k]);
        }
      if (t.size() >= 4) {
        const double f = dominant_frequency(t, y);
        guess(model, "g_khz", 1e3 * f / 2.0);
      }
      guess(model, "kappa_khz", model.at("g_khz").value);
      break;
    }
  }
  return model;
}

namespace {

struct Problem {
  const FitModel& model;
  const DataSet& data;
  std::vector<int> free_idx;
  std::vector<double> base;

  std::vector<double> full(const Eigen::VectorXd& p) const {
    std::vector<double> v = base;
    for (std::size_t k = 0; k < free_idx.size(); ++k) v[std::size_t(free_idx[k])] = p(Eigen::Index(k));
    return v;
  }
  Eigen::VectorXd residual(const Eigen::VectorXd& p) const {
    const auto v = full(p);
    Eigen::VectorXd r(Eigen::Index(data.size()));
    const bool two_d = !data.delta_khz.empty();
    for (std::size_t k = 0; k < data.size(); ++k)
      r(Eigen::Index(k)) = model.evaluate(v, data.t_us[k], two_d ? data.delta_khz[k] : 0.0) - data.y[k];
    return r;
  }
};

Eigen::VectorXd clamp_to(const Eigen::VectorXd& p, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return p.cwiseMax(lo).cwiseMin(hi);
}

FitResult levenberg_marquardt(const FitModel& model, const DataSet& data, const FitOptions& opt) {
  Problem pr{model, data, {}, {}};
  const auto& params = model.parameters();
  for (std::size_t k = 0; k < params.size(); ++k) {
    pr.base.push_back(params[k].value);
    if (params[k].free) pr.free_idx.push_back(int(k));
  }
  const Eigen::Index np = Eigen::Index(pr.free_idx.size());
  Eigen::VectorXd p(np), lo(np), hi(np);
  for (Eigen::Index k = 0; k < np; ++k) {
    const auto& par = params[std::size_t(pr.free_idx[std::size_t(k)])];
    p(k) = par.value;
    lo(k) = par.lower;
    hi(k) = par.upper;
  }

  FitResult res;
  auto jacobian = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& r0) {
    Eigen::MatrixXd j(r0.size(), np);
    for (Eigen::Index k = 0; k < np; ++k) {
      double h = opt.jacobian_step * std::max(std::abs(x(k)), 1e-3);
      if (x(k) + h > hi(k)) h = -h;
      Eigen::VectorXd xp = x;
      xp(k) += h;
      j.col(k) = (pr.residual(xp) - r0) / h;
    }
    return j;
  };

  Eigen::VectorXd r = pr.residual(p);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  Eigen::MatrixXd jac = jacobian(p, r);
  res.status = "max_iterations";
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (cost == 0.0) {
      res.converged = true;
      res.status = "exact";
      break;
    }
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = a;
      for (Eigen::Index k = 0; k < np; ++k) damped(k, k) += lambda * std::max(a(k, k), 1e-300);
      const Eigen::VectorXd step = damped.ldlt().solve(-g);
      const Eigen::VectorXd trial = clamp_to(p + step, lo, hi);
      const Eigen::VectorXd rt = pr.residual(trial);
      const double ct = rt.squaredNorm();
      if (std::isfinite(ct) && ct < cost) {
        const double rel_step = (trial - p).norm() / (p.norm() + opt.step_tolerance);
        const double rel_cost = (cost - ct) / cost;
        p = trial;
        r = rt;
        cost = ct;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (rel_step < opt.step_tolerance || rel_cost < opt.residual_tolerance) {
          res.converged = true;
          res.status = "converged";
        }
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          // No descent direction left at this point: a local minimum to working precision.
          res.converged = true;
          res.status = "converged";
          break;
        }
      }
    }
    if (res.converged) {
      ++it;
      break;
    }
    jac = jacobian(p, r);
  }
  res.iterations = it;
  res.residual_norm = std::sqrt(cost);

  jac = jacobian(p, r);
  const Eigen::MatrixXd a = jac.transpose() * jac;
  const double dof = double(std::max<Eigen::Index>(r.size() - np, 1));
  const double s2 = cost / dof;
  // Scale columns so the identifiability test is unit-free.
  Eigen::VectorXd scale(np);
  for (Eigen::Index k = 0; k < np; ++k) scale(k) = a(k, k) > 0.0 ? 1.0 / std::sqrt(a(k, k)) : 1.0;
  const Eigen::MatrixXd as = scale.asDiagonal() * a * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(as);
  const double emax = np > 0 ? es.eigenvalues().maxCoeff() : 0.0;
  std::vector<bool> flagged(std::size_t(np), false);
  Eigen::MatrixXd cov_s = Eigen::MatrixXd::Zero(np, np);
  for (Eigen::Index k = 0; k < np; ++k) {
    const double ev = es.eigenvalues()(k);
    const Eigen::VectorXd v = es.eigenvectors().col(k);
    if (ev <= 1e-12 * emax || ev <= 0.0) {
      for (Eigen::Index j = 0; j < np; ++j)
        if (std::abs(v(j)) > 0.1) flagged[std::size_t(j)] = true;
    } else {
      cov_s += v * v.transpose() / ev;
    }
  }

  std::size_t fi = 0;
  const auto final_values = pr.full(p);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Estimate e{params[k].name, final_values[k], 0.0, params[k].free};
    if (params[k].free) {
      const Eigen::Index j = Eigen::Index(fi++);
      if (flagged[std::size_t(j)]) {
        e.sigma = kInf;
        res.unidentifiable.push_back(e.name);
      } else {
        e.sigma = std::sqrt(std::max(0.0, s2 * cov_s(j, j))) * scale(j);
      }
    }
    res.estimates.push_back(e);
  }
  if (!res.unidentifiable.empty() && res.status == "converged") res.status = "converged_unidentifiable";
  if (!res.converged)
    for (auto& e : res.estimates) e.sigma = e.free ? kInf : 0.0;
  return res;
}

}  // namespace

FitResult fit(FitModel model, DataSet data, const FitOptions& opt) {
  if (data.y.size() != data.t_us.size()) throw InvalidArgument("data columns have different lengths");
  if (model.two_dimensional() && data.delta_khz.size() != data.y.size())
    throw InvalidArgument("model " + model.name() + " needs (t_us, delta_khz, value) data");
  if (!model.two_dimensional()) data.delta_khz.clear();
  std::size_t nfree = 0;
  for (const auto& p : model.parameters()) nfree += p.free ? 1 : 0;
  if (nfree == 0) throw InvalidArgument("no free parameters");
  if (data.size() < 2 * nfree) throw InvalidArgument("need at least twice as many points as free parameters");

  // Canonical ordering makes the result independent of input order.
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  const bool two_d = !data.delta_khz.empty();
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (data.t_us[a] != data.t_us[b]) return data.t_us[a] < data.t_us[b];
    if (two_d && data.delta_khz[a] != data.delta_khz[b]) return data.delta_khz[a] < data.delta_khz[b];
    return data.y[a] < data.y[b];
  });
  DataSet sorted;
  for (std::size_t k : idx) {
    sorted.t_us.push_back(data.t_us[k]);
    sorted.y.push_back(data.y[k]);
    if (two_d) sorted.delta_khz.push_back(data.delta_khz[k]);
  }

  if (opt.initial_guess) model = initial_guess(std::move(model), sorted);
  model.validate();

  if (model.kind() != ModelKind::Chevron || !model.at("kappa_khz").free || model.at("kappa_khz").user_guess)
    return levenberg_marquardt(model, sorted, opt);

  // Chevron fits are multi-modal in kappa; start from several kappa/g ratios.
  FitResult best;
  bool have = false;
  for (double ratio : {0.5, 1.0, 2.0, 4.0}) {
    FitModel m = model;
    auto& k = m.at("kappa_khz");
    k.value = std::clamp(ratio * m.at("g_khz").value, k.lower, k.upper);
    FitResult r = levenberg_marquardt(m, sorted, opt);
    if (!have || (r.converged && !best.converged) ||
        (r.converged == best.converged && r.residual_norm < best.residual_norm)) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

DataSet generate_synthetic(const FitModel& truth, double sigma, const std::vector<double>& t_us,
                           const std::vector<double>& delta_khz, std::uint64_t seed) {
  if (sigma < 0.0) throw InvalidArgument("noise sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  DataSet d;
  auto push = [&](double t, double dk, bool two_d) {
    d.t_us.push_back(t);
    if (two_d) d.delta_khz.push_back(dk);
    const double n = noise(rng);
    d.y.push_back(truth.evaluate(t, dk) + sigma * n);
  };
  if (truth.two_dimensional()) {
    if (delta_khz.empty()) throw InvalidArgument("2-D model needs a detuning grid");
    for (double dk : delta_khz)
      for (double t : t_us) push(t, dk, true);
  } else {
    for (double t : t_us) push(t, 0.0, false);
  }
  return d;
}

}  // namespace cisim::fit
