// Semi-implicit gradient flow of the rotating Ginzburg-Landau action.
//
// The mode system
//   d c_j / dt = c_j'' + c_j'/r - j^2 c_j/r^2 + c_j/eps^2
//                - [v|v|^2]_j / eps^2 - omega (k - j/m) c_j
// is advanced with the linear radial operator implicit (one real
// tridiagonal solve per mode and step) and the cubic term explicit on
// padded collocation circles, so the step cost is O(Nr Ntheta log Ntheta).
// The boundary row is the exact Dirichlet condition c_j(1) = delta_{j,n}.
//
// The scheme is the descent flow of a discrete action assembled from the
// same flux coefficients (discrete_action below); an adaptive guard halves
// dt whenever a step would raise that action beyond roundoff and slowly
// restores it after a run of good steps.
#pragma once

#include <memory>
#include <vector>

#include "lab/glops.hpp"

namespace lab {

struct RelaxResult {
  long steps = 0;
  double residual = 0.0;      // elliptic_residual at exit
  bool converged = false;
  double dt_final = 0.0;
  long halvings = 0;
  double max_step_increase = 0.0;      // worst accepted action increment
  std::vector<double> action_trace;    // discrete action after each step
};

struct ConstrainedResult {
  long steps = 0;
  double residual = 0.0;      // elliptic_residual with omega = omega_eps
  double omega_eps = 0.0;     // running Lagrange multiplier estimate
  bool converged = false;
  double dt_final = 0.0;
  long halvings = 0;
  double max_momentum_drift = 0.0;     // worst |J - J(initial)| observed
  std::vector<double> energy_trace;    // discrete energy after each step
};

/// Reusable per-shape state: collocation transform, scratch buffers, and
/// cached tridiagonal factorizations (rebuilt when dt/omega/eps change).
/// `parallel` toggles the OpenMP kernels; results are bitwise identical
/// either way (no floating-point reductions run in parallel).
class StepWorkspace {
 public:
  explicit StepWorkspace(const PolarField& shape);

  bool parallel = true;

 private:
  friend void gradient_flow_step(PolarField&, const SolverParams&,
                                 StepWorkspace&);
  friend double flow_gradient_norm(const PolarField&, const SolverParams&,
                                   StepWorkspace&);
  friend RelaxResult relax_to_critical(PolarField&, const SolverParams&);
  friend ConstrainedResult constrained_relax(PolarField&, double,
                                             const SolverParams&);
  void require_shape(const PolarField& f) const;
  void refactor(const PolarField& f, const SolverParams& p, double dt);
  // Explicit cubic term in mode space (zero when eps = inf).
  void cubic_term(const PolarField& f, std::vector<std::vector<cplx>>* nl);

  int Nr_, n_modes_;
  std::vector<int> modes_;
  double cached_dt_ = -1.0, cached_omega_ = 0.0, cached_eps_ = -1.0;
  int cached_k_ = 0, cached_m_ = 1;
  std::unique_ptr<ThetaTransform> tf_;
  PolarField shell_;                            // mode-space scratch target
  std::vector<cplx> phys_;                      // Nr x Ntheta values
  std::vector<std::vector<cplx>> nl_;           // cubic term per mode
  // Thomas factorization of (I - dt A_j) per mode: subdiagonal, modified
  // superdiagonal, and pivot reciprocals (real matrices, complex rhs).
  std::vector<std::vector<double>> low_, cp_, inv_;
};

/// One semi-implicit step of the rotating-frame flow (in place).
void gradient_flow_step(PolarField& f, const SolverParams& p,
                        StepWorkspace& ws);

/// Convenience overload building a throwaway workspace.
void gradient_flow_step(PolarField& f, const SolverParams& p);

/// The discrete action the stepper dissipates: flux-form kinetic term,
/// collocation quartic term on cell volumes, and -omega * momentum on cell
/// volumes.  Monotone (up to the guard tolerance) along accepted steps.
double discrete_action(const PolarField& f, const SolverParams& p);

/// Cell-volume L^2 norm of the current descent direction over interior
/// nodes; the action drops by ~ dt * norm^2 per small step.
double flow_gradient_norm(const PolarField& f, const SolverParams& p,
                          StepWorkspace& ws);

/// Runs the flow until elliptic_residual <= p.residual_tol or p.max_steps.
/// p.dt <= 0 selects 0.3 eps^2.  Throws SolverFailure if the adaptive step
/// collapses (action cannot be decreased).
RelaxResult relax_to_critical(PolarField& f, const SolverParams& p);

/// Momentum-constrained descent: each omega-free step is followed by an
/// exact projection back onto {J = J(initial)} (J is quadratic, so the
/// projection solves a scalar quadratic); the multiplier estimate
/// omega_eps = -<F, grad J> / |grad J|^2 converges to the rotation rate.
/// p_target documents the intended momentum and must match J of the
/// initial field within 0.5 (1 + |p_target|).
ConstrainedResult constrained_relax(PolarField& f, double p_target,
                                    const SolverParams& p);

}  // namespace lab
