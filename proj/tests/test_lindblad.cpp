#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cisim/error.hpp"
#include "cisim/hamiltonians.hpp"
#include "cisim/lindblad.hpp"
#include "cisim/oracles.hpp"
#include "cisim/phase_space.hpp"

using namespace cisim;

namespace {

OperatorMatrix zero_op(const SubsystemLayout& l) { return OperatorMatrix(l, Mat::Zero(l.total(), l.total())); }

LindbladSpec damped_oscillator(double alpha, double kappa_khz, int dim, double t_end = 5.0) {
  SubsystemLayout l({dim});
  LindbladSpec s;
  s.layout = l;
  s.hamiltonian = zero_op(l);
  s.collapse = {{annihilation(dim), FrequencyParam::khz(kappa_khz), "kappa"}};
  s.initial = coherent_state(alpha, dim);
  s.t_grid = linspace(0.0, t_end, 51);
  s.observables = {{"n", number(dim)}};
  return s;
}

LindbladSpec lvc_problem(int na, int nb, bool time_dependent) {
  LVCParams p;
  p.delta_a = FrequencyParam::khz(125.8);
  p.delta_b = FrequencyParam::khz(300.0);
  p.g_x = FrequencyParam::khz(158.0);
  p.g_y = FrequencyParam::khz(115.0);
  p.layout = SubsystemLayout({2, na, nb});
  LindbladSpec s;
  s.layout = p.layout;
  OperatorMatrix h = build_lvc(p);
  if (time_dependent) {
    TimeDependentHamiltonian td;
    td.h0 = h;
    td.terms.push_back({embed(pauli(Axis::Y), 0, p.layout), [](double t) { return 0.4 * std::sin(1.3 * t); }});
    s.hamiltonian = td;
  } else {
    s.hamiltonian = h;
  }
  s.collapse = {{embed(annihilation(nb), 2, p.layout), FrequencyParam::khz(320.0), "kappa_b"},
                {embed(pauli(Axis::Y), 0, p.layout), FrequencyParam::rad_per_us(1.0 / 100.0), "gamma_y"}};
  s.initial = tensor({qubit_minus(), coherent_state(0.6, na), basis_state(nb, 0)});
  s.t_grid = linspace(0.0, 3.0, 31);
  s.observables = {{"sx", embed(pauli(Axis::X), 0, p.layout)},
                   {"sy", embed(pauli(Axis::Y), 0, p.layout)},
                   {"n_a", embed(number(na), 1, p.layout)},
                   {"n_b", embed(number(nb), 2, p.layout)}};
  return s;
}

}  // namespace

TEST(Evolve, DampedOscillatorExact) {
  const double a = 1.3, k = 320.0;
  auto s = damped_oscillator(a, k, min_coherent_dim(a));
  auto r = evolve(s);
  const double kr = FrequencyParam::khz(k).rad_per_us();
  const auto& n = find_series(r.series, "n");
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double want = a * a * std::exp(-kr * n.times[i]);
    EXPECT_NEAR(n.values[i].real(), want, 1e-7 * want + 1e-12) << n.times[i];
  }
  EXPECT_TRUE(r.invariants.within());
}

TEST(Evolve, SigmaXConservedUnderTuningHamiltonian) {
  const int na = 20;
  SubsystemLayout l({2, na});
  LindbladSpec s;
  s.layout = l;
  s.hamiltonian = build_conditional_displacement(Mode::A, Axis::X, FrequencyParam::khz(457),
                                                 FrequencyParam::khz(450), l);
  s.initial = tensor(qubit_minus(), basis_state(na, 0));
  s.t_grid = linspace(0.0, 4.0, 41);
  s.observables = {{"sx", embed(pauli(Axis::X), 0, l)}};
  auto r = evolve(s);
  for (const auto& v : r.series[0].values) EXPECT_NEAR(v.real(), -1.0, 1e-9);
}

TEST(Evolve, PureDephasingMatchesOracle) {
  const int nb = 12;
  SubsystemLayout l({2, nb});
  const auto g = FrequencyParam::khz(117), k = FrequencyParam::khz(320);
  LindbladSpec s;
  s.layout = l;
  s.hamiltonian = build_conditional_displacement(Mode::B, Axis::Y, FrequencyParam::khz(0), g, l);
  s.collapse = {{embed(annihilation(nb), 1, l), k, "kappa_b"}};
  s.initial = tensor(qubit_minus(), basis_state(nb, 0));
  s.t_grid = linspace(0.0, 10.0, 101);
  s.observables = {{"sx", embed(pauli(Axis::X), 0, l)}};
  auto r = evolve(s);
  for (std::size_t i = 0; i < s.t_grid.size(); ++i) {
    // |-> start: <sigma_x> = -2 Re C
    const double oracle = -2.0 * oracles::pure_dephasing_coherence(g, k, s.t_grid[i]).real();
    EXPECT_NEAR(r.series[0].values[i].real(), oracle, 1e-5) << s.t_grid[i];
  }
}

TEST(Evolve, RotatingFrameMatchesLabFrame) {
  for (bool td : {false, true}) {
    auto s = lvc_problem(14, 8, td);
    EvolveOptions lab;
    lab.rotating_frame = false;
    EvolveOptions rot;
    rot.rotating_frame = true;
    auto a = evolve(s, lab), b = evolve(s, rot);
    for (std::size_t k = 0; k < a.series.size(); ++k)
      for (std::size_t i = 0; i < a.series[k].size(); ++i)
        EXPECT_NEAR(std::abs(a.series[k].values[i] - b.series[k].values[i]), 0.0, 1e-8)
            << a.series[k].label << " t=" << a.series[k].times[i] << " td=" << td;
    EXPECT_LT((a.final_density - b.final_density).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Evolve, PiecewiseMatchesSequentialRuns) {
  const int n = 6;
  SubsystemLayout l({2, n});
  OperatorMatrix h1 = build_sideband({FrequencyParam::khz(150), FrequencyParam::khz(0), Sideband::Blue, l});
  OperatorMatrix h2 = build_sideband({FrequencyParam::khz(90), FrequencyParam::khz(200), Sideband::Red, l});
  LindbladSpec s;
  s.layout = l;
  s.hamiltonian = PiecewiseHamiltonian{{{1.0, h1}, {3.0, h2}}};
  s.collapse = {{embed(annihilation(n), 1, l), FrequencyParam::khz(100), "k"}};
  s.initial = tensor(qubit_minus(), basis_state(n, 0));
  s.t_grid = linspace(0.0, 2.5, 26);
  s.observables = {{"pm", embed(projector_minus(), 0, l)}};
  auto whole = evolve(s);

  LindbladSpec a = s;
  a.hamiltonian = h1;
  a.t_grid = linspace(0.0, 1.0, 11);
  auto ra = evolve(a);
  LindbladSpec b = s;
  b.hamiltonian = h2;
  b.initial = ra.final_state(l);
  b.t_grid = linspace(0.0, 1.5, 16);
  auto rb = evolve(b);
  EXPECT_LT((whole.final_density - rb.final_density).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Evolve, PurityConservedWithoutDissipation) {
  auto s = lvc_problem(14, 8, true);
  s.collapse.clear();
  auto r = evolve(s);
  const double p = (r.final_density * r.final_density).trace().real();
  EXPECT_NEAR(p, 1.0, 1e-8);
}

TEST(Evolve, SnapshotsMustBeOnGrid) {
  auto s = damped_oscillator(0.5, 100, 8);
  EvolveOptions o;
  o.snapshot_times = {s.t_grid[10]};
  auto r = evolve(s, o);
  ASSERT_EQ(r.snapshots.size(), 1u);
  o.snapshot_times = {0.123456};
  EXPECT_THROW(evolve(s, o), SpecError);
}

TEST(Evolve, RhsIsLinearAndTracePreserving) {
  auto s = lvc_problem(14, 8, false);
  const Eigen::Index d = s.layout.total();
  Mat x = Mat::Random(d, d), y = Mat::Random(d, d);
  Mat lx = lindblad_rhs(s, 0.0, x), ly = lindblad_rhs(s, 0.0, y);
  Mat lxy = lindblad_rhs(s, 0.0, x + cplx(0.3, -0.7) * y);
  EXPECT_LT((lxy - lx - cplx(0.3, -0.7) * ly).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(std::abs(lx.trace()), 0.0, 1e-10);
}

TEST(Evolve, LinearInInitialState) {
  auto s = lvc_problem(13, 8, true);
  s.t_grid = linspace(0.0, 1.0, 11);
  const QuantumState a = tensor({qubit_minus(), coherent_state(0.6, 13), basis_state(8, 0)});
  const QuantumState b = tensor({qubit_plus(), coherent_state(-0.4, 13), basis_state(8, 1)});
  s.initial = a;
  const auto ra = evolve(s);
  s.initial = b;
  const auto rb = evolve(s);
  s.initial = QuantumState::mixed(s.layout, 0.5 * (a.density() + b.density()));
  const auto rm = evolve(s);
  EXPECT_LT((rm.final_density - 0.5 * (ra.final_density + rb.final_density)).cwiseAbs().maxCoeff(), 1e-8);
  for (std::size_t k = 0; k < rm.series.size(); ++k)
    for (std::size_t i = 0; i < s.t_grid.size(); ++i)
      EXPECT_NEAR(std::abs(rm.series[k].values[i] - 0.5 * (ra.series[k].values[i] + rb.series[k].values[i])), 0.0,
                  1e-8);
}

TEST(Evolve, TwoLevelMatchesBlochSolution) {
  // H = (w/2) sx, D[sx] at rate g, D[|-><+|] at rate G, from (|+> + |->)/sqrt2:
  // <sx> = e^{-G t} - 1, <sy> = 2 Re c, <sz> = -2 Im c with c = rho_{+-} = e^{-i w t - (2g + G/2) t} / 2.
  const double w = 2.3, g = 0.17, G = 0.41;
  SubsystemLayout l({2});
  Mat lower = Mat::Zero(2, 2);
  lower(1, 0) = 1.0;
  LindbladSpec s;
  s.layout = l;
  s.hamiltonian = 0.5 * w * pauli(Axis::X);
  s.collapse = {{pauli(Axis::X), FrequencyParam::rad_per_us(g), "dephase"},
                {OperatorMatrix(l, lower), FrequencyParam::rad_per_us(G), "decay"}};
  Vec psi(2);
  psi << 1.0, 1.0;
  s.initial = QuantumState::pure(l, psi / std::sqrt(2.0));
  s.t_grid = linspace(0.0, 6.0, 61);
  s.observables = {{"sx", pauli(Axis::X)}, {"sy", pauli(Axis::Y)}, {"sz", pauli(Axis::Z)}};
  const auto r = evolve(s);
  for (std::size_t i = 0; i < s.t_grid.size(); ++i) {
    const double t = s.t_grid[i];
    const cplx c = 0.5 * std::exp(cplx(-(2 * g + 0.5 * G) * t, -w * t));
    EXPECT_NEAR(r.series[0].values[i].real(), std::exp(-G * t) - 1.0, 1e-8) << t;
    EXPECT_NEAR(r.series[1].values[i].real(), 2.0 * c.real(), 1e-8) << t;
    EXPECT_NEAR(r.series[2].values[i].real(), -2.0 * c.imag(), 1e-8) << t;
  }
}

TEST(Evolve, OneStepPropagatorIsCompletelyPositive) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  auto random_mat = [&](int d) {
    Mat m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = cplx(n01(rng), n01(rng));
    return m;
  };
  for (int trial = 0; trial < 3; ++trial) {
    SubsystemLayout l({2, 4});
    const int d = 8;
    const Mat h = random_mat(d);
    LindbladSpec s;
    s.layout = l;
    s.hamiltonian = OperatorMatrix(l, 0.5 * (h + h.adjoint()), true);
    s.collapse = {{OperatorMatrix(l, random_mat(d)), FrequencyParam::rad_per_us(0.3), "c1"},
                  {OperatorMatrix(l, random_mat(d)), FrequencyParam::rad_per_us(0.1), "c2"}};
    s.t_grid = {0.0, 0.05};
    auto image = [&](const Vec& v) {
      s.initial = QuantumState::pure(l, v.normalized());
      return Mat(evolve(s).final_density);
    };
    // |i><j| = P_x + i P_y - (1 + i)/2 (P_i + P_j), x = (e_i + e_j)/sqrt2, y = (e_i + i e_j)/sqrt2
    std::vector<Mat> diag(d);
    for (int i = 0; i < d; ++i) diag[std::size_t(i)] = image(Vec::Unit(d, i));
    Mat choi = Mat::Zero(d * d, d * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        Mat phi = diag[std::size_t(i)];
        if (i != j) {
          const Vec x = Vec::Unit(d, i) + Vec::Unit(d, j), y = Vec::Unit(d, i) + cplx(0, 1) * Vec::Unit(d, j);
          phi = image(x) + cplx(0, 1) * image(y) - cplx(0.5, 0.5) * (diag[std::size_t(i)] + diag[std::size_t(j)]);
        }
        choi.block(i * d, j * d, d, d) = phi;
      }
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (choi + choi.adjoint()));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8) << trial;
    EXPECT_NEAR(choi.trace().real(), double(d), 1e-8);
  }
}

TEST(Validate, RejectsBadSpecs) {
  auto s = damped_oscillator(0.5, 100, 8);
  auto bad = s;
  bad.t_grid = {0.0, 1.0, 0.5};
  EXPECT_THROW(validate(bad), SpecError);
  bad = s;
  bad.t_grid = {};
  EXPECT_THROW(validate(bad), SpecError);
  bad = s;
  bad.initial = basis_state(9, 0);
  EXPECT_THROW(validate(bad), Error);
  bad = s;
  bad.collapse[0].rate = FrequencyParam::khz(-1);
  EXPECT_THROW(validate(bad), Error);
}

namespace {

ModelProblem damped_problem(int dim) {
  ModelProblem p;
  p.params = {{"kappa_khz", 320.0}, {"alpha", 1.26}, {"t_end", 5.0}};
  p.dims = {dim};
  p.fock_slots = {0};
  p.build = [](const ParameterSet& ps, const SubsystemLayout& l) {
    LindbladSpec s = damped_oscillator(ps.at("alpha"), ps.at("kappa_khz"), l.dim(0), ps.at("t_end"));
    return s;
  };
  return p;
}

}  // namespace

TEST(Sweep, IndependentRowsInOrder) {
  auto base = damped_problem(14);
  std::vector<double> kappas{100.0, 200.0, 400.0};
  auto rows = evolve_sweep(base, "kappa_khz", kappas, {}, 2);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    const double kr = FrequencyParam::khz(kappas[k]).rad_per_us();
    EXPECT_NEAR(rows[k].series[0].values.back().real(), 1.26 * 1.26 * std::exp(-kr * 5.0), 1e-7);
  }
}

TEST(Sweep, RevivalCurves) {
  ModelProblem base;
  base.params = {{"delta_a_khz", 457.0}};
  base.dims = {2, 42};
  base.build = [](const ParameterSet& ps, const SubsystemLayout& l) {
    LindbladSpec s;
    s.layout = l;
    s.hamiltonian = build_conditional_displacement(Mode::A, Axis::X, FrequencyParam::khz(ps.at("delta_a_khz")),
                                                   FrequencyParam::khz(450.0), l);
    s.initial = tensor(qubit_minus(), basis_state(l.dim(1), 0));
    s.t_grid = linspace(0.0, 1e3 / ps.at("delta_a_khz"), 21);
    s.observables = {{"p0", embed(OperatorMatrix(SubsystemLayout({l.dim(1)}), basis_state(l.dim(1), 0).density()),
                                  1, l)}};
    return s;
  };
  const std::vector<double> deltas{457.0, 355.0, 246.0};
  auto rows = evolve_sweep(base, "delta_a_khz", deltas);
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    const auto& ts = rows[k].series[0];
    for (std::size_t i = 0; i < ts.size(); ++i)
      EXPECT_NEAR(ts.values[i].real(),
                  oracles::revival_probability(FrequencyParam::khz(450.0), FrequencyParam::khz(deltas[k]),
                                               ts.times[i]),
                  1e-6);
    EXPECT_GT(ts.values.back().real(), 1 - 1e-6);
  }
}

TEST(Sweep, EmptyValueListGivesEmptyTable) {
  EXPECT_TRUE(evolve_sweep(damped_problem(14), "kappa_khz", {}).empty());
  EXPECT_THROW(evolve_sweep(damped_problem(14), "nope", {1.0}), UnknownParameter);
}

TEST(Convergence, DampedOscillatorPasses) {
  auto rep = convergence_check(damped_problem(14));
  EXPECT_TRUE(rep.pass);
  EXPECT_LT(rep.max_deviation, 1e-9);
}

TEST(Convergence, StarvedTruncationFails) {
  // dim 4 for alpha_g = 1.26 with the truncation rule bypassed via the Fock basis.
  ModelProblem p;
  p.params = {};
  p.dims = {2, 4};
  p.fock_slots = {1};
  p.build = [](const ParameterSet&, const SubsystemLayout& l) {
    LindbladSpec s;
    s.layout = l;
    // assembled by hand: the builders refuse truncations below the coherent-state rule
    const int n = l.dim(1);
    s.hamiltonian = FrequencyParam::khz(125.8).rad_per_us() * embed(number(n), 1, l) +
                    FrequencyParam::khz(158.0).rad_per_us() * embed(pauli(Axis::X), 0, l) *
                        embed(annihilation(n) + creation(n), 1, l);
    s.initial = tensor(qubit_minus(), basis_state(l.dim(1), 0));
    s.t_grid = linspace(0.0, 4.0, 9);
    s.observables = {{"p0_a", embed(OperatorMatrix(SubsystemLayout({l.dim(1)}),
                                                   basis_state(l.dim(1), 0).density()),
                                    1, l)}};
    return s;
  };
  auto rep = convergence_check(p);
  EXPECT_FALSE(rep.pass);
  EXPECT_GT(rep.truncation_deviation, 1e-5);
}

TEST(Convergence, ZeroDurationPasses) {
  auto p = damped_problem(14);
  p.build = [](const ParameterSet& ps, const SubsystemLayout& l) {
    LindbladSpec s = damped_oscillator(ps.at("alpha"), ps.at("kappa_khz"), l.dim(0));
    s.t_grid = {0.0};
    return s;
  };
  EXPECT_TRUE(convergence_check(p).pass);
}
