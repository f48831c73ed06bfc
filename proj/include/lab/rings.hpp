// Ring-symmetric relative equilibria of the disc point-vortex flow.
//
// A family is a set of concentric rings, each carrying k equally spaced
// vortices of a common degree.  Configurations rotate rigidly at angular
// speed omega0 / m_a, where (k_a, m_a) are the rotation-ansatz integers:
// k_a = k and m_a = n/k when the total degree n is nonzero, and
// (k_a, m_a) = (0, k) for degree-balanced (n = 0) families.
//
// The reduced equilibrium condition per ring r, with zeta_r the ring's
// generating vortex and q_r = zeta_r * (A + B)(zeta_r), reads
//
//   d_r * (2 Re q_r + (omega0/m_a) * rho_r^2) = 0,
//
// together with the reality condition Im q_r = 0 (automatic when all ring
// phases are aligned or half-staggered).
#pragma once

#include <vector>

#include "lab/util.hpp"
#include "lab/vortex.hpp"

namespace lab {

struct Ring {
  double rho;   // radius in (0,1)
  double phi;   // phase of the generating vortex
  int degree;   // +1 or -1 (shared by all k vortices of the ring)
};

struct RingFamily {
  int k = 1;                // symmetry order (vortices per ring)
  std::vector<Ring> rings;  // ordered by non-decreasing radius

  int n() const;         // total degree k * sum_r d_r
  int m() const;         // n / k (0 for balanced families)
  int ansatz_k() const;  // k, or 0 when n == 0
  int ansatz_m() const;  // n/k, or k when n == 0

  /// All k * #rings vortices, ring by ring, each ring's vortices at phases
  /// phi + 2*pi*beta/k for beta = 0..k-1.
  VortexConfig expand() const;

  /// Throws PreconditionError on invalid k, radii outside (0,1), radii not
  /// strictly increasing, or total degree not divisible by k.
  void validate() const;
};

struct RelativeEquilibrium {
  RingFamily family;
  double omega0 = 0.0;  // rotation parameter in the ansatz convention

  /// Time period 2*pi*m_a/omega0 of the rotating solution (signed;
  /// +infinity for steady omega0 == 0 configurations).
  double period() const;
};

/// Rotation parameter of a single ring of n >= 1 positive vortices at
/// radius rho:  omega0 = -(2/rho^2) * ((n-1)/2 + n rho^{2n}/(1-rho^{2n})).
double single_ring_omega(int n, double rho);

/// Radius of the single-ring family with impulse J0 = p (p in (-n/2, 0)).
double single_ring_radius_from_momentum(int n, double p);

/// Critical radius r0(k) at which the equal-radius two-ring staggered
/// (+1,-1) family is steady:  r0 = (sqrt(4k^2+1) - 2k)^{1/(2k)}.
double staggered_critical_radius(int k);

/// Per-ring equilibrium residuals at the given omega0.  If the ring phases
/// are neither aligned nor half-staggered, the (generally nonzero)
/// imaginary parts 2*Im q_r are appended as extra components.
std::vector<double> ring_residual(const RingFamily& f, double omega0);

enum class EquilibriumMode {
  single_ring_from_momentum,  // target = J0; single ring of +1s, closed form
  aligned_multiring,          // target = J0; all phases equal, Newton
  staggered_pair,             // target = geometric mean radius; two rings,
                              // opposite degrees, phases offset by pi/k
};

/// Solve for a relative equilibrium of the requested shape.  `tmpl` fixes
/// k and the number of rings; radii/phases/degrees are overwritten by the
/// solve.  Throws SolverFailure if Newton does not converge.
RelativeEquilibrium solve_equilibrium(const RingFamily& tmpl,
                                      EquilibriumMode mode, double target);

/// Rotating-frame energy H = W/pi - (omega0/m) J0.
double modified_energy_H(const VortexConfig& c, double omega0, int m);

/// Euclidean gradient of H per vortex.
std::vector<cplx> grad_H(const VortexConfig& c, double omega0, int m);

struct HessianReport {
  std::vector<double> eigenvalues;  // ascending, one pair per ring
  int null_count = 0;               // |lambda| <= 1e-6 * max|lambda|
  int S = 0;                        // null + strictly negative count
  double tangent_alignment = 0.0;   // overlap of null space with rotation
};

/// Classify a k-symmetric critical point of H by the spectrum of the
/// Hessian restricted to symmetry-preserving (generating) coordinates.
/// Preconditions: |grad H| <= 1e-6 and exact k-fold symmetry of c.
HessianReport hessian_classify(const VortexConfig& c, double omega0, int m,
                               int k);

struct CatalogEntry {
  std::string name;
  RelativeEquilibrium eq;
  HessianReport hessian;
};

/// The standard set of solved families used by the harness: single rings
/// n = 1..4 at rho = 1/2, aligned two-ring configurations, the steady
/// equal-radius staggered pairs k = 1..4, and rotating staggered pairs.
std::vector<CatalogEntry> standard_catalog();

}  // namespace lab
