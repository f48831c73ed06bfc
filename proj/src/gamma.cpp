#include "lab/gamma.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "lab/glops.hpp"

namespace lab {

namespace {

// Centrifugal coefficient of the mode-1 flux operator (matches
// apply_mode_laplacian, including the regularity cell at the origin).
double cfg1(const PolarGrid& g, int i) {
  if (i == 0) return 2.0 / (g.r[0] * g.face[1]);
  return 1.0 / (g.r[i] * g.r[i]);
}

double profile_energy(const PolarGrid& g, const std::vector<double>& f,
                      double t) {
  const int Nr = g.Nr;
  double kin = 0.0, pot = 0.0;
  for (int i = 1; i < Nr; ++i) kin += g.kappa[i] * sqr(f[i] - f[i - 1]);
  for (int i = 0; i < Nr; ++i) {
    const double V = cell_volume(g, i);
    kin += V * cfg1(g, i) * sqr(f[i]);
    pot += V * sqr(1.0 - sqr(f[i]));
  }
  return PI * kin + PI * pot / (2.0 * t * t);
}

// Flux-form residual of the profile equation on the interior (Dirichlet
// row excluded): R_i = Lap(f)_i + f_i (1 - f_i^2) / t^2.
void profile_residual(const PolarGrid& g, const std::vector<double>& f,
                      double t, std::vector<double>* R) {
  const int Nr = g.Nr;
  R->assign(Nr, 0.0);
  const double inv_t2 = 1.0 / (t * t);
  for (int i = 0; i < Nr - 1; ++i) {
    const double V = cell_volume(g, i);
    const double lo = (i > 0) ? g.kappa[i] / V : 0.0;
    const double hi = g.kappa[i + 1] / V;
    const double left = (i > 0) ? f[i - 1] : 0.0;
    const double lap =
        lo * (left - f[i]) + hi * (f[i + 1] - f[i]) - cfg1(g, i) * f[i];
    (*R)[i] = lap + f[i] * (1.0 - sqr(f[i])) * inv_t2;
  }
}

double weighted_norm(const PolarGrid& g, const std::vector<double>& R) {
  double s = 0.0;
  for (int i = 0; i < g.Nr - 1; ++i) s += cell_volume(g, i) * sqr(R[i]);
  return std::sqrt(2.0 * PI * s);
}

}  // namespace

CoreProfile vortex_core_profile(double t, const PolarGrid& grid) {
  grid.validate();
  if (!(t > 0.0) || t >= 1.0)
    throw PreconditionError(
        fmt::format("core profile: thickness {} outside (0, 1)", t));
  const int Nr = grid.Nr;
  CoreProfile out;
  out.f.resize(Nr);
  for (int i = 0; i < Nr; ++i) {
    const double r = grid.r[i];
    out.f[i] = r / std::sqrt(r * r + 2.0 * t * t);
  }
  out.f[Nr - 1] = 1.0;

  std::vector<double> R, dl(Nr), dd(Nr), du(Nr), rhs(Nr), trial(Nr);
  profile_residual(grid, out.f, t, &R);
  double rnorm = weighted_norm(grid, R);
  const double tol = 1e-11 * (1.0 + 1.0 / (t * t));

  for (int iter = 0; iter < 60 && rnorm > tol; ++iter) {
    // Tridiagonal Newton system J * delta = -R, Dirichlet row pinned.
    for (int i = 0; i < Nr; ++i) {
      if (i == Nr - 1) {
        dl[i] = 0.0;
        dd[i] = 1.0;
        du[i] = 0.0;
        rhs[i] = 0.0;
        continue;
      }
      const double V = cell_volume(grid, i);
      const double lo = (i > 0) ? grid.kappa[i] / V : 0.0;
      const double hi = grid.kappa[i + 1] / V;
      dl[i] = lo;
      du[i] = hi;
      dd[i] = -(lo + hi) - cfg1(grid, i) +
              (1.0 - 3.0 * sqr(out.f[i])) / (t * t);
      rhs[i] = -R[i];
    }
    // Thomas elimination.
    for (int i = 1; i < Nr; ++i) {
      const double w = dl[i] / dd[i - 1];
      dd[i] -= w * du[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    rhs[Nr - 1] /= dd[Nr - 1];
    for (int i = Nr - 2; i >= 0; --i)
      rhs[i] = (rhs[i] - du[i] * rhs[i + 1]) / dd[i];

    // Damped acceptance on the residual norm.
    double lambda = 1.0;
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      for (int i = 0; i < Nr; ++i) trial[i] = out.f[i] + lambda * rhs[i];
      trial[Nr - 1] = 1.0;
      profile_residual(grid, trial, t, &R);
      const double rn = weighted_norm(grid, R);
      if (rn < (1.0 - 0.25 * lambda) * rnorm) {
        out.f.swap(trial);
        rnorm = rn;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    ++out.newton_steps;
    if (!accepted)
      throw SolverFailure(fmt::format(
          "core profile: Newton stalled at residual {:.3e} (t = {})", rnorm,
          t));
  }
  if (rnorm > tol)
    throw SolverFailure(fmt::format(
        "core profile: no convergence, residual {:.3e} (t = {})", rnorm, t));
  out.residual = rnorm;
  out.energy = profile_energy(grid, out.f, t);
  return out;
}

double estimate_gamma(const std::vector<double>& epsilon_list,
                      const PolarGrid& grid) {
  if (epsilon_list.size() < 2)
    throw PreconditionError(
        "gamma estimate: need at least two thickness values");
  for (size_t i = 1; i < epsilon_list.size(); ++i)
    if (!(epsilon_list[i] < epsilon_list[i - 1]))
      throw PreconditionError(
          "gamma estimate: thickness list must be strictly decreasing");

  std::vector<double> g(epsilon_list.size());
  for (size_t i = 0; i < epsilon_list.size(); ++i) {
    const double t = epsilon_list[i];
    g[i] = vortex_core_profile(t, grid).energy + PI * std::log(t);
  }
  // I(t) + pi log t is non-decreasing in t; along the decreasing list the
  // values must therefore not increase.  Growth signals an unresolved core.
  for (size_t i = 1; i < g.size(); ++i)
    if (g[i] > g[i - 1] + 1e-10)
      throw SolverFailure(fmt::format(
          "gamma estimate: renormalized energy rose from {:.9f} to {:.9f} "
          "between t = {} and t = {}; grid cannot resolve the core",
          g[i - 1], g[i], epsilon_list[i - 1], epsilon_list[i]));

  const size_t n = g.size();
  const double ratio = sqr(epsilon_list[n - 2] / epsilon_list[n - 1]);
  return g[n - 1] + (g[n - 1] - g[n - 2]) / (ratio - 1.0);
}

}  // namespace lab
