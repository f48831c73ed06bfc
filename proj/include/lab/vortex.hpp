// Point-vortex configurations in the unit disc.
//
// A configuration is a list of distinct points b_j in the open disc with
// degrees d_j = +-1.  The interaction energy W accounts for the boundary
// through image charges:
//
//   W(b,d) =  pi * sum_{j != k} d_j d_k log|b_j - b_k|
//           - pi * sum_{j,k}    d_j d_k log|1 - conj(b_j) b_k|
//
// The induced motion is the Hamiltonian flow of W: each vortex moves with
//
//   b_l' = 2i * conj(A_l + B_l),
//   A_l = sum_{k != l} d_k / (b_l - b_k),
//   B_l = sum_k d_k conj(b_k) / (1 - conj(b_k) b_l),
//
// which satisfies d_j * i * v_j = -(1/pi) * grad_{b_j} W exactly.
#pragma once

#include <string>
#include <vector>

#include "lab/util.hpp"

namespace lab {

struct VortexConfig {
  std::vector<cplx> positions;  // b_j, inside the open unit disc, distinct
  std::vector<int> degrees;     // d_j in {+1, -1}

  int size() const { return static_cast<int>(positions.size()); }
  int total_degree() const;  // n = sum d_j

  /// Throws PreconditionError if sizes mismatch, a degree is not +-1,
  /// a point is outside the open disc, or two points coincide.
  void validate() const;
};

/// Renormalized interaction energy W (exactly invariant under permutation
/// of the (b_j, d_j) pairs).
double renormalized_energy(const VortexConfig& c);

/// Euclidean gradient of W: component j is dW/dx_j + i dW/dy_j.
std::vector<cplx> grad_W(const VortexConfig& c);

/// Central finite-difference gradient of W (test reference).
std::vector<cplx> grad_W_fd(const VortexConfig& c, double h = 1e-6);

/// Angular impulse J0 = -(1/2) sum_j d_j |b_j|^2 (permutation-exact).
double momentum_J0(const VortexConfig& c);

/// The combined pair + image induction sum A_l + B_l felt by vortex l.
cplx induction_at(const VortexConfig& c, int l);

/// Velocities of all vortices under the disc point-vortex flow.
std::vector<cplx> pvf_rhs(const VortexConfig& c);

struct ConservedSample {
  double t;
  double W;
  double J0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<cplx>> positions;  // one entry per sample
  std::vector<ConservedSample> conserved;
  double max_rel_drift_W = 0.0;
  double max_rel_drift_J0 = 0.0;
  bool aborted = false;          // near-collision or boundary approach
  std::string abort_reason;
};

struct IntegrateOptions {
  double min_separation = 1e-6;   // abort below this pairwise distance
  double min_boundary_gap = 1e-6; // abort when 1-|b| falls below this
  int sample_stride = 1;          // record every k-th step (>=1)
};

/// Classical RK4 time integration of the point-vortex flow with conserved
/// quantities (W, J0) sampled along the way.  dt is fixed; the run aborts
/// (with the partial trajectory returned and `aborted` set) if vortices
/// nearly collide or approach the boundary.
Trajectory integrate_pvf(const VortexConfig& c, double t_end, double dt,
                         const IntegrateOptions& opt = {});

/// CSV rows "t,re_b1,im_b1,...,W,J0".
void write_trajectory_csv(const Trajectory& tr, const std::string& path);

}  // namespace lab
