#pragma once

#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "cisim/ode.hpp"
#include "cisim/quantum_core.hpp"
#include "cisim/time_series.hpp"
#include "cisim/units.hpp"

namespace cisim {

struct CollapseTerm {
  OperatorMatrix op;
  FrequencyParam rate;  // multiplies D[op]; rad/us after conversion
  std::string label;
};

struct Observable {
  std::string label;
  OperatorMatrix op;
};

// H(t) = h0 + sum_k coeff_k(t) op_k
struct TimeDependentTerm {
  OperatorMatrix op;
  std::function<double(double)> coeff;
};
struct TimeDependentHamiltonian {
  OperatorMatrix h0;
  std::vector<TimeDependentTerm> terms;
};

// Segment k holds on [end_{k-1}, end_k); the integrator restarts at each boundary.
struct PiecewiseSegment {
  double t_end;
  OperatorMatrix h;
};
struct PiecewiseHamiltonian {
  std::vector<PiecewiseSegment> segments;
};

using HamiltonianSpec = std::variant<OperatorMatrix, TimeDependentHamiltonian, PiecewiseHamiltonian>;

struct LindbladSpec {
  SubsystemLayout layout;
  HamiltonianSpec hamiltonian;
  std::vector<CollapseTerm> collapse;
  QuantumState initial;
  std::vector<double> t_grid;  // us, strictly increasing, starts at 0
  std::vector<Observable> observables;
  OdeOptions integrator;
};

struct InvariantBounds {
  double trace = 1e-8;
  double hermiticity = 1e-8;
  double min_eigenvalue = -1e-6;
};

struct InvariantReport {
  double max_trace_drift = 0.0;
  double max_hermiticity_drift = 0.0;
  bool positivity_ok = true;          // Cholesky witness at every recorded time
  double final_min_eigenvalue = 0.0;  // exact, final time
  bool within(const InvariantBounds& b = {}) const;
};

struct EvolveOptions {
  bool check_invariants = true;
  InvariantBounds bounds;
  // Integrate in the frame rotating with the diagonal of the static Hamiltonian.
  // Exact; removes the fast free phases from the step-size control.
  bool rotating_frame = true;
  // Full densities are kept at these times; each must be a member of the time grid.
  std::vector<double> snapshot_times;
};

struct EvolveResult {
  std::vector<TimeSeries> series;  // one per observable, in spec order
  Mat final_density;
  InvariantReport invariants;
  OdeStats stats;
  std::vector<Mat> snapshots;  // follows EvolveOptions::snapshot_times

  QuantumState final_state(const SubsystemLayout& layout) const;
};

void validate(const LindbladSpec& spec);
EvolveResult evolve(const LindbladSpec& spec, const EvolveOptions& opt = {});

// Superoperator action on an arbitrary (not necessarily Hermitian) matrix for a
// static generator; exposes the linear map for propagator checks.
Mat lindblad_rhs(const LindbladSpec& spec, double t, const Mat& rho);

// A parameterized problem that can be rebuilt at different truncations.
using ParameterSet = std::map<std::string, double>;
struct ModelProblem {
  ParameterSet params;
  std::vector<int> dims;
  std::vector<int> fock_slots;  // slots enlarged by the convergence check
  std::function<LindbladSpec(const ParameterSet&, const SubsystemLayout&)> build;
};

// One independent trajectory per value of `axis`; rows run concurrently.
std::vector<EvolveResult> evolve_sweep(const ModelProblem& base, const std::string& axis,
                                       const std::vector<double>& values,
                                       const EvolveOptions& opt = {}, unsigned threads = 0);

struct ConvergenceReport {
  bool pass = true;
  double tolerance_deviation = 0.0;   // halved rtol/atol
  double truncation_deviation = 0.0;  // Fock dims x 1.5
  double max_deviation = 0.0;
  std::string worst_observable;
  std::map<std::string, double> deviations;  // per observable, max over both reruns
  std::vector<int> enlarged_dims;
  double threshold = 1e-5;
};

ConvergenceReport convergence_check(const ModelProblem& problem, double threshold = 1e-5);
// Variant that reuses an already computed baseline run.
ConvergenceReport convergence_check(const ModelProblem& problem, const EvolveResult& baseline,
                                    double threshold = 1e-5);

}  // namespace cisim
