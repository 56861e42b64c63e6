#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "cisim/error.hpp"
#include "cisim/fit.hpp"
#include "cisim/oracles.hpp"
#include "cisim/phase_space.hpp"

using namespace cisim;
using namespace cisim::fit;

namespace {

std::vector<double> khz_grid() { return linspace(-1000.0, 1000.0, 21); }

}  // namespace

TEST(Fit, RevivalRecoversDetuning) {
  FitModel truth = FitModel::revival().set("beta", 0.985).set("delta_a_khz", 457.0);
  const double period = 1e3 / 457.0;
  DataSet d = generate_synthetic(truth, 0.01, linspace(0.0, 2 * period, 200), {}, 7);
  FitResult r = fit::fit(FitModel::revival(), d);
  ASSERT_TRUE(r.converged) << r.status;
  EXPECT_NEAR(r.value("delta_a_khz") / 457.0, 1.0, 0.02);
  EXPECT_NEAR(r.value("beta"), 0.985, 0.05);
}

TEST(Fit, NoiselessExpDecayExact) {
  FitModel truth = FitModel::exp_decay().set("T_us", 27.0);
  DataSet d = generate_synthetic(truth, 0.0, linspace(0.0, 80.0, 161), {}, 0);
  FitResult r = fit::fit(FitModel::exp_decay(), d);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.value("T_us") / 27.0, 1.0, 1e-6);
}

TEST(Fit, ChevronRecoversCouplingAndLoss) {
  FitModel truth = FitModel::chevron().set("g_khz", 150.0).set("kappa_khz", 320.0);
  DataSet d = generate_synthetic(truth, 0.01, linspace(0.0, 10.0, 51), khz_grid(), 3);
  FitResult r = fit::fit(FitModel::chevron(), d);
  ASSERT_TRUE(r.converged) << r.status;
  EXPECT_NEAR(r.value("g_khz") / 150.0, 1.0, 0.03);
  EXPECT_NEAR(r.value("kappa_khz") / 320.0, 1.0, 0.03);
}

TEST(Fit, FrozenParameterStaysPut) {
  FitModel truth = FitModel::exp_decay().set("T_us", 12.0).set("offset", 0.1);
  DataSet d = generate_synthetic(truth, 0.0, linspace(0.0, 40.0, 81), {}, 0);
  FitModel m = FitModel::exp_decay().freeze("T_us", 10.0);
  FitResult r = fit::fit(m, d);
  EXPECT_EQ(r.value("T_us"), 10.0);
  FitModel released = FitModel::exp_decay().release("offset");
  FitResult r2 = fit::fit(released, d);
  EXPECT_NEAR(r2.value("T_us"), 12.0, 1e-5);
  EXPECT_NEAR(r2.value("offset"), 0.1, 1e-6);
}

TEST(Fit, UnknownParameterThrows) {
  EXPECT_THROW(FitModel::revival().freeze("gamma", 1.0), UnknownParameter);
  EXPECT_THROW(FitModel::by_name("lorentzian"), InvalidArgument);
}

TEST(Fit, DegenerateDataFlagsUnidentifiable) {
  // constant data: the decay constant cannot be determined
  DataSet d;
  d.t_us = linspace(0.0, 1.0, 20);
  d.y.assign(20, 0.0);
  FitResult r = fit::fit(FitModel::exp_decay().freeze("amplitude", 0.0), d);
  EXPECT_FALSE(r.unidentifiable.empty());
}

TEST(Synthetic, ZeroNoiseReproducesOracle) {
  FitModel truth = FitModel::chevron().set("g_khz", 150.0).set("kappa_khz", 320.0);
  auto t = linspace(0.0, 5.0, 11);
  DataSet d = generate_synthetic(truth, 0.0, t, khz_grid(), 1);
  ASSERT_EQ(d.size(), t.size() * 21);
  for (std::size_t i = 0; i < d.size(); ++i)
    EXPECT_EQ(d.y[i], oracles::chevron_population(FrequencyParam::khz(150), FrequencyParam::khz(320),
                                                  FrequencyParam::khz(d.delta_khz[i]), d.t_us[i]));
}

TEST(Synthetic, SeedDeterminism) {
  FitModel truth = FitModel::revival().set("beta", 1.2).set("delta_a_khz", 300.0);
  auto t = linspace(0.0, 5.0, 100);
  DataSet a = generate_synthetic(truth, 0.01, t, {}, 42), b = generate_synthetic(truth, 0.01, t, {}, 42);
  DataSet c = generate_synthetic(truth, 0.01, t, {}, 43);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.y, c.y);
}

TEST(Synthetic, NoiseLevel) {
  FitModel truth = FitModel::exp_decay().set("T_us", 27.0);
  auto t = linspace(0.0, 50.0, 1000);
  DataSet clean = generate_synthetic(truth, 0.0, t, {}, 5), noisy = generate_synthetic(truth, 0.01, t, {}, 5);
  std::vector<double> r(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) r[i] = noisy.y[i] - clean.y[i];
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / double(r.size());
  double var = 0.0;
  for (double x : r) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / double(r.size() - 1));
  EXPECT_NEAR(sd / 0.01, 1.0, 0.15);
}

TEST(Guess, DominantFrequency) {
  auto t = linspace(0.0, 10.0, 400);
  std::vector<double> y(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) y[i] = std::cos(2 * std::numbers::pi * 0.457 * t[i]);
  EXPECT_NEAR(dominant_frequency(t, y), 0.457, 0.01);
}
