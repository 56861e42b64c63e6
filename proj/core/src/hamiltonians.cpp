#include "cisim/hamiltonians.hpp"

#include <cmath>
#include <string>

#include "cisim/error.hpp"

namespace cisim {

int mode_slot(Mode mode, const SubsystemLayout& layout) {
  if (layout.slots() == 2) return 1;
  if (layout.slots() == 3) return mode == Mode::A ? 1 : 2;
  throw LayoutError("expected a (qubit, mode) or (qubit, a, b) layout");
}

namespace {

void check_qubit(const SubsystemLayout& layout) {
  if (layout.dim(0) != 2) throw LayoutError("slot 0 must be the qubit (dim 2)");
}

void check_truncation(FrequencyParam g, FrequencyParam delta, int dim) {
  const double d = delta.rad_per_us();
  if (d == 0.0) return;
  const double ag = std::abs(g.rad_per_us() / d);
  if (ag * ag + 5.0 * ag + 5.0 > double(dim))
    throw TruncationError("mode dim " + std::to_string(dim) + " too small for alpha = " +
                          std::to_string(ag) + " (need " + std::to_string(min_coherent_dim(ag)) + ")");
}

}  // namespace

OperatorMatrix build_conditional_displacement(Mode mode, Axis axis, FrequencyParam delta,
                                              FrequencyParam g, const SubsystemLayout& layout) {
  check_qubit(layout);
  const int slot = mode_slot(mode, layout);
  const int dim = layout.dim(slot);
  check_truncation(g, delta, dim);
  const OperatorMatrix a = annihilation(dim);
  const OperatorMatrix x = embed(a + a.adjoint(), slot, layout);
  const OperatorMatrix n = embed(number(dim), slot, layout);
  const OperatorMatrix s = embed(pauli(axis), 0, layout);
  OperatorMatrix h = delta.rad_per_us() * n + g.rad_per_us() * (s * x);
  return {layout, h.matrix(), true};
}

OperatorMatrix build_lvc(const LVCParams& p) {
  if (p.layout.slots() != 3) throw LayoutError("build_lvc needs a (qubit, a, b) layout");
  OperatorMatrix h = build_conditional_displacement(Mode::A, Axis::X, p.delta_a, p.g_x, p.layout) +
                     build_conditional_displacement(Mode::B, Axis::Y, p.delta_b, p.g_y, p.layout);
  return {p.layout, h.matrix(), true};
}

OperatorMatrix build_aligned(const LVCParams& p) {
  if (p.layout.slots() != 3) throw LayoutError("build_aligned needs a (qubit, a, b) layout");
  OperatorMatrix h = build_conditional_displacement(Mode::A, Axis::X, p.delta_a, p.g_x, p.layout) +
                     build_conditional_displacement(Mode::B, Axis::X, p.delta_b, p.g_y, p.layout);
  return {p.layout, h.matrix(), true};
}

double alpha_g(FrequencyParam g_x, FrequencyParam delta_a) {
  return g_x.rad_per_us() / delta_a.rad_per_us();
}

OperatorMatrix build_zeno(const ZenoParams& p) {
  if (p.layout.slots() != 2) throw LayoutError("build_zeno needs a (qubit, b) layout");
  if (p.kappa_b.rad_per_us() < 0.0) throw SpecError("kappa_b must be >= 0");
  OperatorMatrix h = build_conditional_displacement(Mode::B, Axis::Y, p.delta_b, p.g, p.layout) +
                     p.energy_gap.rad_per_us() * embed(pauli(Axis::X), 0, p.layout);
  return {p.layout, h.matrix(), true};
}

OperatorMatrix build_sideband(const SidebandParams& p) {
  if (p.layout.slots() != 2) throw LayoutError("build_sideband needs a (qubit, mode) layout");
  check_qubit(p.layout);
  const int dim = p.layout.dim(1);
  const OperatorMatrix c = embed(annihilation(dim), 1, p.layout);
  const OperatorMatrix cd = c.adjoint();
  Mat sp = Mat::Zero(2, 2), sm = Mat::Zero(2, 2);
  sp(1, 0) = 1.0;  // |-><+|
  sm(0, 1) = 1.0;  // |+><-|
  const OperatorMatrix splus = embed({SubsystemLayout({2}), sp}, 0, p.layout);
  const OperatorMatrix sminus = embed({SubsystemLayout({2}), sm}, 0, p.layout);
  const double g = p.g.rad_per_us();
  OperatorMatrix coupling = p.kind == Sideband::Red ? (c * sminus) + (cd * splus)
                                                    : (c * splus) + (cd * sminus);
  OperatorMatrix h = g * coupling + p.delta.rad_per_us() * embed(number(dim), 1, p.layout);
  return {p.layout, h.matrix(), true};
}

Eigen::Matrix2d build_vibronic_W(double omega_x, double omega_y, double g_x, double g_y,
                                 double x, double y) {
  if (!(omega_x > 0.0) || !(omega_y > 0.0)) throw InvalidArgument("omega_x and omega_y must be > 0");
  const double harm = 0.5 * omega_x * omega_x * x * x + 0.5 * omega_y * omega_y * y * y;
  Eigen::Matrix2d w;
  w << harm + g_x * x, g_y * y, g_y * y, harm - g_x * x;
  return w;
}

}  // namespace cisim
