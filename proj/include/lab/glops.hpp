// Energies, momenta, residuals, and field constructions for the rotating
// Ginzburg-Landau problem on the unit disc.
//
// Fields are critical-point candidates of the action
//   action(v) = E(v) - omega * J(v),
//   E(v) = int |grad v|^2 / 2 + (1 - |v|^2)^2 / (4 eps^2),
//   J(v) = int -(k/2)|v|^2 + (1/(2m)) Im(conj(v) d_theta v),
// and stationary fields solve
//   Lap v + v(1 - |v|^2)/eps^2 = omega (k v + (i/m) d_theta v),
// whose mode-j reduction is
//   c_j'' + c_j'/r - j^2 c_j / r^2 + [v(1-|v|^2)/eps^2]_j - omega (k - j/m) c_j = 0.
//
// A field built here rotates rigidly in time: mode j advances with phase
// e^{i (j/m - k) omega t}, so the modulus pattern turns at angular speed
// omega / m and the state is T = 2 pi m / omega periodic.
#pragma once

#include "lab/field.hpp"
#include "lab/vortex.hpp"

namespace lab {

/// Rotating-frame solver parameters shared by residual evaluation,
/// relaxation, and time reconstruction.  When k > 0 the boundary winding of
/// the field must equal k*m.
struct SolverParams {
  double omega = 0.0;       // rotation rate (omega_0 of the catalog entries)
  int k = 0;                // vortices per ring in the symmetric ansatz
  int m = 1;                // subperiod index, m != 0
  double dt = 0.0;          // step size; <= 0 selects 0.3 * eps^2
  double residual_tol = 1e-6;
  long max_steps = 200000;
};

/// Ginzburg-Landau energy E (spectral kinetic term, collocation quartic
/// term).  A field with epsilon = inf has no potential term.
double energy_E(const PolarField& f);

/// Rotation momentum J via the mode-diagonal reduction
///   J = -pi sum_j (k - j/m) int |c_j|^2 r dr.
double momentum_J(const PolarField& f, int k, int m);

/// Same momentum evaluated as a direct 2-D quadrature of
///   -(k/2)|v|^2 + (1/(2m)) Im(conj(v) d_theta v)
/// on the collocation circles; independent route used to cross-check
/// momentum_J.
double momentum_J_quadrature(const PolarField& f, int k, int m);

/// action = E - omega * J.
double action_value(const PolarField& f, const SolverParams& p);

/// Largest |v| over the collocation nodes.
double max_modulus(const PolarField& f);

/// Finite-volume radial Laplacian of a single mode:
///   out_i = [kappa_{i+1}(c_{i+1}-c_i) - kappa_i(c_i-c_{i-1})]/V_i - j^2 c_i / r_i^2
/// on interior nodes (V_i the annular cell volume); out[Nr-1] = 0 (the
/// boundary node is held by the Dirichlet condition).
void apply_mode_laplacian(const PolarGrid& g, int j,
                          const std::vector<cplx>& c, std::vector<cplx>* out);

/// Annular cell volume of node i: int r dr between the bounding faces.
double cell_volume(const PolarGrid& g, int i);

/// Discrete L^2 norm (quadrature-weighted, over interior nodes) of the
/// stationarity residual  Lap v + v(1-|v|^2)/eps^2 - omega(k v + (i/m) v_theta).
double elliptic_residual(const PolarField& f, const SolverParams& p);

/// Throws PreconditionError when m = 0 or when k > 0 and the field's
/// boundary winding differs from k*m.
void check_ansatz_consistency(const PolarField& f, const SolverParams& p);

/// Near-optimal initial data for a vortex configuration: unit-modulus phase
/// field with the prescribed zeros and windings (boundary trace exactly
/// e^{i n theta}, n the total degree), damped to zero on 2*eps cores:
///   v(z) = prod_i exp(i d_i arg[(z - b_i)(1 - conj(b_i) z)]) * prod_i eta(|z - b_i|),
///   eta(rho) = sin(pi rho / (4 eps)) for rho <= 2 eps, else 1.
/// Preconditions: pairwise vortex separations and boundary gaps exceed
/// 4*eps; the grid spacing near every vortex radius is at most eps/4; for
/// k_sym > 1 the configuration must be invariant under rotation by
/// 2 pi / k_sym with matching degrees.
PolarField bbh_initial_data(const VortexConfig& config, double epsilon,
                            const PolarGrid& grid, int k_sym = 1);

/// The time-t state of the rigidly rotating solution seeded by f:
/// c_j ↦ e^{i (j/m - k) omega t} c_j.  omega = 0 returns f unchanged.
PolarField reconstruct_time_periodic(const PolarField& f,
                                     const SolverParams& p, double t);

}  // namespace lab
