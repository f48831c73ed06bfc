#pragma once

#include <functional>
#include <vector>

#include "lab/glops.hpp"
#include "lab/rings.hpp"

namespace lab {

/// One detected zero of the order parameter carrying circulation.
struct VortexObservation {
  cplx position;                  // inside the open disc
  int degree = 0;                 // phase winding on the surrounding circle
  double localization_radius = 0; // radius of the winding circle
  double modulus_min = 0;         // smallest |u| seen in the component
};

/// Outcome of matching detected vortex paths against a rigidly rotating
/// reference configuration.
struct TrackReport {
  double theta_star = 0.0;          // global phase aligning t = 0
  std::vector<double> deviations;   // per-snapshot worst matched distance
  double max_deviation = 0.0;
  double angular_speed = 0.0;       // measured -d(arg)/dt of tracked vortices
};

/// Distributional pairing <Ju, phi> evaluated as the quadrature of
/// phi * det(grad u) with the angular derivative taken spectrally and the
/// radial derivative by differences.  phi takes a disc point.
double jacobian_pairing(const PolarField& field,
                        const std::function<double(cplx)>& testfn);

/// Connected components of {|u| <= 1/2} away from the boundary band, each
/// reduced to a refined zero with its winding number.  Components whose
/// winding vanishes are discarded.
std::vector<VortexObservation> detect_vortices(const PolarField& field);

/// Integral identity satisfied by critical points of the rotating-frame
/// action; the residual measures how far a field is from honoring it.
///
///   (1/2) INT_{boundary} |dv/dn|^2  -  pi n^2  +  INT (1-|v|^2)^2/(2 eps^2)
///     =  omega k (pi - INT |v|^2)  -  (omega/m) INT |y|^2 Jv.
struct PohozaevReport {
  double boundary_flux = 0.0;   // (1/2) INT |dv/dn|^2
  double core_constant = 0.0;   // pi n^2
  double potential = 0.0;       // INT (1-|v|^2)^2 / (2 eps^2)
  double rotation_mass = 0.0;   // omega k (pi - INT |v|^2)
  double moment_pairing = 0.0;  // (omega/m) INT |y|^2 Jv
  double residual = 0.0;        // |LHS - RHS|
};

PohozaevReport pohozaev_residual(const PolarField& field,
                                 const SolverParams& params);

/// Defect of the limiting force balance grad_W(b)_j = -d_j pi (omega0/m) b_j
/// for an explicit configuration.
std::vector<double> vanishing_gradient_defects(const VortexConfig& config,
                                               double omega0, int m);

/// Same defect evaluated on the vortices detected in a field, with omega0
/// and m taken from the solver parameters.
std::vector<double> vanishing_gradient_check(const PolarField& field,
                                             const SolverParams& params);

/// Match detected vortex paths across snapshots against the rigid rotation
/// of a reference equilibrium.  times[i] is the physical time of
/// fields_over_time[i]; the reference rotates as b(t) = e^{-i omega0 t / m}
/// b(0) after the global alignment theta_star fitted at the first snapshot.
TrackReport compare_to_pvf(const std::vector<PolarField>& fields_over_time,
                           const std::vector<double>& times,
                           const RelativeEquilibrium& equilibrium);

}  // namespace lab
