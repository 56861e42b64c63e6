#pragma once

#include <vector>

#include "cisim/quantum_core.hpp"

namespace cisim {

// W(alpha) = (2/pi) Tr[D(alpha) Pi D^dagger(alpha) rho], normalized to unit integral.
// Displacement matrix elements use the exact (untruncated) operator restricted
// to the kept Fock levels. Single-mode states only.
std::vector<double> wigner(const QuantumState& state, const std::vector<cplx>& points);

struct WignerGrid {
  std::vector<double> re_axis;
  std::vector<double> im_axis;
  Eigen::MatrixXd values;  // rows follow re_axis, columns follow im_axis
};

WignerGrid wigner_grid(const QuantumState& state, const std::vector<double>& re_axis,
                       const std::vector<double>& im_axis);

// Integral of W over the grid by the trapezoidal rule.
double wigner_integral(const WignerGrid& grid);

std::vector<double> linspace(double lo, double hi, int n);

}  // namespace cisim
