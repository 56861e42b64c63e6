#pragma once

#include <string>
#include <vector>

#include "cisim/linalg.hpp"
#include "cisim/time_series.hpp"
#include "cisim/units.hpp"

namespace cisim::oracles {

// P0 = exp(2 beta^2 (cos(Delta_a t) - 1)).
double revival_probability(double beta, FrequencyParam delta_a, double t_us);
// beta defaults to alpha_g = g_x / Delta_a.
double revival_probability(FrequencyParam g_x, FrequencyParam delta_a, double t_us);

// d(t) = (d0/W) e^{-k t/4} (W cosh(W t/4) + k sinh(W t/4)), k = kappa + 2i delta,
// W = sqrt(k^2 - 16 g^2). Evaluated through entire functions of W^2, with a
// Taylor branch for |W t/4| < 1e-4.
cplx chevron_field(FrequencyParam g, FrequencyParam kappa, FrequencyParam delta, double t_us,
                   cplx d0 = 1.0);

enum class SidebandKind { Red, Blue };
// Blue: |d|^2 with d0 = 1; red: 1 - blue.
double chevron_population(FrequencyParam g, FrequencyParam kappa, FrequencyParam delta, double t_us,
                          SidebandKind kind = SidebandKind::Blue);

// (1/2) exp[-8 g^2 t / k + 16 g^2/k^2 (1 - e^{-k t/2})] for Delta = 0.
cplx pure_dephasing_coherence(FrequencyParam g, FrequencyParam kappa_b, double t_us);

// Gaussian positive-P ansatz in the eps -> 0 limit. With b = d*beta, c = d*gamma:
//   beta' = (i D - k/2) beta - i g,  gamma' = (-i D - k/2) gamma - i g,
//   (ln C)' = -2 i g (beta + gamma),  C(0) = 1/2.
TimeSeries positive_p_ode(FrequencyParam g, FrequencyParam kappa_b, FrequencyParam delta_y,
                          const std::vector<double>& t_grid);

// Conditional mean field of the |g> branch, Delta = 0: 2 i g (1 - e^{-k t/2}) / k.
cplx conditional_mean_field(FrequencyParam g, FrequencyParam kappa_b, double t_us);

// g^2 k / ((k/2)^2 + Delta^2), rad/us.
double measurement_rate(FrequencyParam g, FrequencyParam kappa_b, FrequencyParam delta_b);

enum class ZenoCase { A, B };

struct ZenoPrediction {
  double kappa_q = 0.0;                // rad/us
  double steady_state_sigma_x = 0.0;   // 0 for case (a), -1 for case (b)
  double sigma_x_relaxation_rate = 0.0;
  std::vector<std::string> warnings;   // regime guards
};

ZenoPrediction zeno_effective_rate(ZenoCase which, FrequencyParam energy_gap, FrequencyParam delta_y,
                                   FrequencyParam g, FrequencyParam kappa_b);

}  // namespace cisim::oracles
