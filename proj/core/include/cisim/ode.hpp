#pragma once

#include <functional>
#include <vector>

#include "cisim/linalg.hpp"

namespace cisim {

enum class OdeMethod { DormandPrince45, RK4 };

struct OdeOptions {
  OdeMethod method = OdeMethod::DormandPrince45;
  double rtol = 1e-9;
  double atol = 1e-12;
  double fixed_step = 1e-3;  // us, RK4 only
  double min_step = 1e-13;   // us
  long max_steps = 20'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
};

using OdeRhs = std::function<void(double t, const Mat& y, Mat& dydt)>;
using OdeObserver = std::function<void(std::size_t index, double t, const Mat& y)>;

// Integrates y' = f(t, y) from grid[0], landing exactly on every grid time and
// calling `observe` there (including grid[0]). Grid must be nondecreasing.
OdeStats integrate(const OdeRhs& f, Mat y, const std::vector<double>& grid,
                   const OdeOptions& opt, const OdeObserver& observe);

}  // namespace cisim
