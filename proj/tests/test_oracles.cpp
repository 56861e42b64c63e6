#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cisim/error.hpp"
#include "cisim/hamiltonians.hpp"
#include "cisim/lindblad.hpp"
#include "cisim/oracles.hpp"
#include "cisim/phase_space.hpp"

using namespace cisim;
using namespace cisim::oracles;

namespace {

const FrequencyParam kG = FrequencyParam::khz(117), kKappa = FrequencyParam::khz(320);

// Qubit eigenstate of sigma_y with eigenvalue s.
QuantumState sigma_y_eigenstate(int s) {
  Vec v(2);
  v << 1.0 / std::sqrt(2.0), s / std::sqrt(2.0);
  return QuantumState::pure(SubsystemLayout({2}), v);
}

LindbladSpec dephasing_spec(QuantumState qubit, FrequencyParam delta_b, int nb, double t_end) {
  SubsystemLayout l({2, nb});
  LindbladSpec s;
  s.layout = l;
  s.hamiltonian = build_conditional_displacement(Mode::B, Axis::Y, delta_b, kG, l);
  s.collapse = {{embed(annihilation(nb), 1, l), kKappa, "kappa_b"}};
  s.initial = tensor(qubit, basis_state(nb, 0));
  s.t_grid = linspace(0.0, t_end, 41);
  Vec g = sigma_y_eigenstate(1).vector();
  s.observables = {{"sx", embed(pauli(Axis::X), 0, l)},
                   {"sy", embed(pauli(Axis::Y), 0, l)},
                   {"b", embed(annihilation(nb), 1, l)},
                   {"p_g", embed(OperatorMatrix(SubsystemLayout({2}), g * g.adjoint()), 0, l)}};
  return s;
}

}  // namespace

TEST(Revival, Values) {
  const auto d = FrequencyParam::khz(100);
  EXPECT_DOUBLE_EQ(revival_probability(1.0, d, 0.0), 1.0);
  const double half = std::numbers::pi / d.rad_per_us();
  EXPECT_NEAR(revival_probability(1.0, d, half), 0.018316, 1e-6);
  EXPECT_NEAR(revival_probability(1.0, d, 2 * half), 1.0, 1e-12);
}

TEST(Revival, MatchesCoherentAutocorrelation) {
  const auto gx = FrequencyParam::khz(450), da = FrequencyParam::khz(457);
  const double beta = gx.rad_per_us() / da.rad_per_us();
  const int d = min_coherent_dim(beta) + 10;
  for (double t : {0.3, 1.1, 1.7}) {
    const cplx rotated = beta * std::exp(cplx(0, -da.rad_per_us() * t));
    const double ov = std::norm(coherent_state(rotated, d).vector().dot(coherent_state(beta, d).vector()));
    EXPECT_NEAR(revival_probability(beta, da, t), ov, 1e-8);
    EXPECT_NEAR(revival_probability(gx, da, t), ov, 1e-8);
  }
}

TEST(Chevron, LosslessLimit) {
  const auto g = FrequencyParam::khz(150);
  for (double t : {0.0, 0.4, 1.3, 2.9, 7.5}) {
    const double c = std::cos(g.rad_per_us() * t);
    EXPECT_NEAR(chevron_population(g, FrequencyParam::khz(0), FrequencyParam::khz(0), t), c * c, 1e-12);
  }
}

TEST(Chevron, OverdampedDecayRate) {
  const auto g = FrequencyParam::khz(20), k = FrequencyParam::khz(2000);
  const double rate = 4 * std::pow(g.rad_per_us(), 2) / k.rad_per_us();
  double prev = 1.0;
  for (double t = 0.5; t < 20.0; t += 0.5) {
    const double p = chevron_population(g, k, FrequencyParam::khz(0), t);
    EXPECT_LT(p, prev);
    prev = p;
  }
  const double t1 = 5.0, t2 = 15.0;
  const double fitted = std::log(chevron_population(g, k, FrequencyParam::khz(0), t1) /
                                 chevron_population(g, k, FrequencyParam::khz(0), t2)) /
                        (t2 - t1);
  EXPECT_NEAR(fitted / rate, 1.0, 0.01);
}

TEST(Chevron, RedIsComplementOfBlue) {
  const auto g = FrequencyParam::khz(150), k = FrequencyParam::khz(320), d = FrequencyParam::khz(200);
  EXPECT_NEAR(chevron_population(g, k, d, 2.0, SidebandKind::Red),
              1.0 - chevron_population(g, k, d, 2.0, SidebandKind::Blue), 1e-15);
}

TEST(Chevron, CriticalDampingBranchIsSmooth) {
  // kappa = 4 g: W = 0, handled by the series branch
  const auto g = FrequencyParam::khz(100), k = FrequencyParam::khz(400);
  const double at = chevron_population(g, k, FrequencyParam::khz(0), 1.0);
  const double near = chevron_population(g, FrequencyParam::khz(400.0001), FrequencyParam::khz(0), 1.0);
  EXPECT_NEAR(at, near, 1e-6);
  EXPECT_TRUE(std::isfinite(at));
}

TEST(PureDephasing, InitialValueAndAsymptoticRate) {
  EXPECT_NEAR(pure_dephasing_coherence(kG, kKappa, 0.0).real(), 0.5, 1e-15);
  const double g = kG.rad_per_us(), k = kKappa.rad_per_us();
  EXPECT_NEAR(8 * g * g / k / (2 * std::numbers::pi), 0.342, 1e-3);
  // late enough for the transient e^{-kappa t/2} to be negligible
  const double t1 = 20.0, t2 = 24.0;
  const double rate =
      std::log(pure_dephasing_coherence(kG, kKappa, t1).real() / pure_dephasing_coherence(kG, kKappa, t2).real()) /
      (t2 - t1);
  EXPECT_NEAR(rate, 8 * g * g / k, 1e-7);
  EXPECT_NEAR(1.0 / rate, 0.465, 1e-3);
  EXPECT_NEAR(rate, 2 * measurement_rate(kG, kKappa, FrequencyParam::khz(0)), 1e-7);
}

TEST(PositiveP, ClosedFormAtZeroDetuning) {
  const double tmax = 10.0 / kKappa.rad_per_us();
  auto grid = linspace(0.0, tmax, 25);
  auto ts = positive_p_ode(kG, kKappa, FrequencyParam::khz(0), grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    EXPECT_NEAR(std::abs(ts.values[i] - pure_dephasing_coherence(kG, kKappa, grid[i])), 0.0, 1e-10);
}

TEST(PositiveP, MatchesMasterEquationAtFiniteDetuning) {
  for (double db : {0.0, 400.0, 800.0}) {
    auto s = dephasing_spec(qubit_minus(), FrequencyParam::khz(db), 10, 6.0);
    auto r = evolve(s);
    auto pp = positive_p_ode(kG, kKappa, FrequencyParam::khz(db), s.t_grid);
    for (std::size_t i = 0; i < s.t_grid.size(); ++i)
      EXPECT_NEAR(r.series[0].values[i].real(), -2.0 * pp.values[i].real(), 1e-6) << db << " " << s.t_grid[i];
  }
}

TEST(PositiveP, DiagonalSectorIsStationary) {
  auto s = dephasing_spec(qubit_minus(), FrequencyParam::khz(0), 10, 6.0);
  auto r = evolve(s);
  for (const auto& v : find_series(r.series, "p_g").values) EXPECT_NEAR(v.real(), 0.5, 1e-9);
}

TEST(PositiveP, ConditionalMeanField) {
  // branch with sigma_y = -1: H = -g (b + b^dagger)
  auto s = dephasing_spec(sigma_y_eigenstate(-1), FrequencyParam::khz(0), 16, 6.0);
  s.integrator.rtol = 1e-12;
  s.integrator.atol = 1e-14;
  auto r = evolve(s);
  const auto& b = find_series(r.series, "b");
  for (std::size_t i = 0; i < b.size(); ++i)
    EXPECT_NEAR(std::abs(b.values[i] - conditional_mean_field(kG, kKappa, b.times[i])), 0.0, 1e-8);
}

TEST(MeasurementRate, Lorentzian) {
  const double g = kG.rad_per_us(), k = kKappa.rad_per_us(), d = FrequencyParam::khz(300).rad_per_us();
  EXPECT_NEAR(measurement_rate(kG, kKappa, FrequencyParam::khz(300)), g * g * k / (k * k / 4 + d * d), 1e-12);
}

TEST(Zeno, CaseAFormula) {
  const auto p = zeno_effective_rate(ZenoCase::A, FrequencyParam::khz(0), FrequencyParam::khz(0), kG, kKappa);
  EXPECT_NEAR(p.kappa_q, 4 * std::pow(kG.rad_per_us(), 2) / kKappa.rad_per_us(), 1e-12);
  EXPECT_EQ(p.steady_state_sigma_x, 0.0);
}

TEST(Zeno, CaseAProtectionAtLargeGap) {
  const auto p = zeno_effective_rate(ZenoCase::A, FrequencyParam::mhz(1e3), FrequencyParam::khz(0), kG, kKappa);
  EXPECT_LT(p.kappa_q, 1e-6);
}

TEST(Zeno, CaseBSteadyState) {
  const auto p = zeno_effective_rate(ZenoCase::B, FrequencyParam::khz(500), FrequencyParam::khz(250),
                                     FrequencyParam::khz(20), FrequencyParam::khz(320));
  EXPECT_EQ(p.steady_state_sigma_x, -1.0);
  EXPECT_GT(p.kappa_q, 0.0);
}

TEST(Oracles, RejectInvalidInput) {
  EXPECT_THROW(positive_p_ode(kG, FrequencyParam::khz(0), FrequencyParam::khz(0), {0.0, 1.0}), InvalidArgument);
}
