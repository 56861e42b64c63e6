#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cisim/oracles.hpp"
#include "cisim/time_series.hpp"

namespace cisim::fit {

enum class ModelKind { Revival, ExpDecay, Chevron };

struct Parameter {
  std::string name;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool free = true;
  bool user_guess = false;  // value set by the caller; skips the heuristic guess
};

// Physical parameters use kHz (nu = omega / 2pi) and us. Every model carries the
// nuisance parameters amplitude, offset and t_offset_us (frozen by default except
// the exp_decay amplitude).
//   revival:   A * P0(beta, delta_a_khz; t - t0) + C
//   exp_decay: A * exp(-(t - t0) / T_us) + C
//   chevron:   A * |d(g_khz, kappa_khz, delta; t - t0)|^2 + C (blue) or A * (1 - |d|^2) + C (red)
class FitModel {
 public:
  static FitModel revival();
  static FitModel exp_decay();
  static FitModel chevron(oracles::SidebandKind kind = oracles::SidebandKind::Blue);
  static FitModel by_name(const std::string& name);

  ModelKind kind() const { return kind_; }
  std::string name() const;
  const std::vector<Parameter>& parameters() const { return params_; }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;

  FitModel& set(const std::string& name, double value);     // initial guess / true value
  FitModel& freeze(const std::string& name, double value);  // fixed at value
  FitModel& release(const std::string& name);               // make free
  FitModel& bounds(const std::string& name, double lower, double upper);

  bool two_dimensional() const { return kind_ == ModelKind::Chevron; }
  double evaluate(const std::vector<double>& values, double t_us, double delta_khz = 0.0) const;
  double evaluate(double t_us, double delta_khz = 0.0) const;
  void validate() const;

 private:
  FitModel(ModelKind k, std::vector<Parameter> p) : kind_(k), params_(std::move(p)) {}
  ModelKind kind_;
  oracles::SidebandKind sideband_ = oracles::SidebandKind::Blue;
  std::vector<Parameter> params_;
};

struct DataSet {
  std::vector<double> t_us;
  std::vector<double> delta_khz;  // empty for 1-D data
  std::vector<double> y;
  std::size_t size() const { return y.size(); }
};

DataSet from_time_series(const TimeSeries& ts);

struct FitOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-8;
  double residual_tolerance = 1e-10;
  double jacobian_step = 1e-6;
  bool initial_guess = true;  // heuristics for free parameters without a user guess
};

struct Estimate {
  std::string name;
  double value = 0.0;
  double sigma = 0.0;  // 1-sigma from local curvature; infinite if unidentifiable
  bool free = false;
};

struct FitResult {
  std::vector<Estimate> estimates;
  double residual_norm = 0.0;  // sqrt(sum r^2)
  bool converged = false;
  std::string status;
  int iterations = 0;
  std::vector<std::string> unidentifiable;

  double value(const std::string& name) const;
  double sigma(const std::string& name) const;
};

FitResult fit(FitModel model, DataSet data, const FitOptions& opt = {});

// Heuristic starting point applied by fit(); exposed for inspection.
FitModel initial_guess(FitModel model, const DataSet& data);

// Oracle evaluation on the grid plus i.i.d. N(0, sigma^2) noise from mt19937_64(seed).
// 2-D models use the outer product of t_us and delta_khz.
DataSet generate_synthetic(const FitModel& truth, double sigma, const std::vector<double>& t_us,
                           const std::vector<double>& delta_khz, std::uint64_t seed);

// Peak frequency (cycles/us) of a Lomb-style periodogram of y(t).
double dominant_frequency(const std::vector<double>& t, const std::vector<double>& y);

}  // namespace cisim::fit
