#pragma once

#include <vector>

#include "lab/grid.hpp"

namespace lab {

// Degree-1 radial cell problem on the unit disc: minimize
//   I(t) = pi * INT (f'^2 + f^2/r^2) r dr + pi/(2 t^2) * INT (1 - f^2)^2 r dr
// over profiles with f(0) = 0, f(1) = 1.  The minimizer solves
//   f'' + f'/r - f/r^2 + f (1 - f^2) / t^2 = 0,
// discretized with the same flux-form radial operator the field solver uses,
// so the discrete energy below is exactly the functional whose critical
// point the Newton iteration finds.
struct CoreProfile {
  std::vector<double> f;   // profile values on grid.r
  double energy = 0.0;     // discrete I(t)
  long newton_steps = 0;
  double residual = 0.0;   // final Newton residual (V-weighted L2)
};

CoreProfile vortex_core_profile(double t, const PolarGrid& grid);

// Core-energy constant: gamma = lim_{t->0} [I(t) + pi log t].  The sample
// I(t_i) + pi log t_i must be non-decreasing in t (decreasing along the
// given list, which must be strictly decreasing); a violation signals an
// under-resolved grid and raises SolverFailure.  The limit is Richardson-
// extrapolated from the last pair assuming an O(t^2) tail.
double estimate_gamma(const std::vector<double>& epsilon_list,
                      const PolarGrid& grid);

}  // namespace lab
