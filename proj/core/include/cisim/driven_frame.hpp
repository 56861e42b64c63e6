#pragma once

#include <string>
#include <vector>

#include "cisim/linalg.hpp"
#include "cisim/units.hpp"

namespace cisim::driven {

// H_q = -Delta_R n - (alpha_q/2) q^dag q^dag q q + eps_R (q + q^dag), rotating frame.
struct TransmonDriveParams {
  FrequencyParam alpha_q;
  FrequencyParam epsilon_r;
  FrequencyParam delta_r;
  int levels = 8;
};

// Labeled driven eigenbasis. Index 0 = "+", 1 = "-", 2 = "f~", the rest in
// descending energy. "+" and "-" are the pair adiabatically connected to the
// undriven {|0>, |1>}, with "+" the higher; "f~" connects to |2>.
struct DrivenBasis {
  std::vector<double> energies;  // rad/us, labeled order
  Mat transform;                 // columns: driven eigenvectors in the Fock basis
  Mat dressing;                  // u_jk = (V^dag n V)_jk, labeled order
  FrequencyParam omega_r;        // eps_+ - eps_-
  FrequencyParam alpha_tilde;    // eps_- - eps_f - Omega_R
  double min_label_overlap = 1.0;  // along the eps ramp
  double top_population = 0.0;     // top two Fock levels, max over +, -, f~

  double u_pp() const { return dressing(0, 0).real(); }
  double u_mm() const { return dressing(1, 1).real(); }
  cplx u_pm() const { return dressing(0, 1); }
};

DrivenBasis diagonalize_driven_transmon(const TransmonDriveParams& p, int ramp_steps = 200);

// chi (u_++ - u_--)
FrequencyParam residual_cross_kerr(const DrivenBasis& basis, FrequencyParam chi);

struct NullResult {
  FrequencyParam delta_r;
  FrequencyParam epsilon_r;
  double residual_over_chi = 0.0;
  DrivenBasis basis;
};

// eps_R solving Omega_R(eps_R, Delta_R) = target.
FrequencyParam solve_drive_for_rabi(FrequencyParam alpha_q, FrequencyParam delta_r,
                                    FrequencyParam omega_target, int levels = 8);

// Delta_R zeroing u_++ - u_-- at fixed Omega_R; the root nearest Delta_R = 0.
NullResult null_cross_kerr(FrequencyParam alpha_q, FrequencyParam omega_target, int levels = 8);

struct EngineeringParams {
  FrequencyParam chi;
  double xi0 = 1.0;
  double phi_delta = 0.0;
  double phi_sigma = 0.0;
  double u_pm = 0.5;  // |u_+-|; 1/2 in the two-level resonant limit

  double g() const { return chi.rad_per_us() * xi0 * u_pm; }  // rad/us
};

struct RwaReport {
  double g = 0.0;  // rad/us
  double displacement_ratio = 0.0;  // Delta_c |xi0 <x>| / Omega_R
  double photon_ratio = 0.0;        // (g / xi0) <n> / Omega_R
  double drive_ratio = 0.0;         // g xi0 / Omega_R
  double threshold = 0.05;
  bool displacement_ok = true, photon_ok = true, drive_ok = true;
  double chi_over_g = 0.0;   // 2 at xi0 = 1 in the two-level limit
  double optimal_xi0 = 0.0;  // minimizes the largest ratio at fixed g
  bool all_ok() const { return displacement_ok && photon_ok && drive_ok; }
};

RwaReport rwa_conditions(const EngineeringParams& eng, FrequencyParam delta_c, FrequencyParam omega_r,
                         double photon_scale, double x_expect, double threshold = 0.05);

// xi0 = g / (chi u_+-)
double implied_xi0(FrequencyParam g, FrequencyParam chi, double u_pm = 0.5);
// sqrt(g <n> / max(Delta_c |<x>|, g))
double optimal_xi0(FrequencyParam g, FrequencyParam delta_c, double photon_scale, double x_expect);

struct EffectiveCheck {
  EngineeringParams eng;
  FrequencyParam delta_c;
  FrequencyParam omega_r;
  double u_pp = 0.5, u_mm = 0.5;
  double horizon_us = 0.0;   // 0 selects 1/g
  bool stroboscopic = true;  // round the horizon to whole Rabi periods
  int cavity_dim = 14;
};

struct EffectiveCheckResult {
  double infidelity = 0.0;
  double horizon_us = 0.0;
};

// Integrates the post-displacement time-dependent Hamiltonian in qubit (x) cavity
// and compares the final state with evolution under the time-averaged
// conditional-displacement Hamiltonian, from |+> (x) |0>.
EffectiveCheckResult verify_effective_hamiltonian(const EffectiveCheck& c);

// Time-averaged Hamiltonian used by verify_effective_hamiltonian.
Mat effective_hamiltonian(const EffectiveCheck& c);

}  // namespace cisim::driven
