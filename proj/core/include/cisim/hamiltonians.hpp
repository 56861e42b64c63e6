#pragma once

#include "cisim/quantum_core.hpp"
#include "cisim/units.hpp"

namespace cisim {

struct LVCParams {
  FrequencyParam delta_a, delta_b, g_x, g_y;
  SubsystemLayout layout;  // (qubit, a, b)
};

struct ZenoParams {
  FrequencyParam energy_gap;  // E(x)
  FrequencyParam delta_b;
  FrequencyParam g;
  FrequencyParam kappa_b;  // carried for the caller's dissipator; not part of H
  SubsystemLayout layout;  // (qubit, b)
};

enum class Sideband { Red, Blue };

struct SidebandParams {
  FrequencyParam g;
  FrequencyParam delta;
  Sideband kind = Sideband::Blue;
  SubsystemLayout layout;  // (qubit, c)
};

enum class Mode { A, B };

// Slot holding `mode`: with three slots a -> 1, b -> 2; with two slots the mode is slot 1.
int mode_slot(Mode mode, const SubsystemLayout& layout);

// Delta a^dagger a + g sigma_axis (a + a^dagger), all in rad/us.
OperatorMatrix build_conditional_displacement(Mode mode, Axis axis, FrequencyParam delta,
                                              FrequencyParam g, const SubsystemLayout& layout);

// Delta_a n_a + Delta_b n_b + g_x sigma_x x_a + g_y sigma_y x_b.
OperatorMatrix build_lvc(const LVCParams& p);

// Both couplings on sigma_x.
OperatorMatrix build_aligned(const LVCParams& p);

double alpha_g(FrequencyParam g_x, FrequencyParam delta_a);

// E sigma_x + Delta_b n_b + g sigma_y (b + b^dagger).
OperatorMatrix build_zeno(const ZenoParams& p);

// Red: g(c s- + c^dagger s+) + delta n; blue: g(c s+ + c^dagger s-) + delta n,
// with s+ = |-><+| and s- = |+><-|.
OperatorMatrix build_sideband(const SidebandParams& p);

// Diabatic potential matrix of the 2-D LVC model at mass-weighted (x, y).
Eigen::Matrix2d build_vibronic_W(double omega_x, double omega_y, double g_x, double g_y,
                                 double x, double y);

}  // namespace cisim
