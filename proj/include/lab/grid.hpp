// Radial grids on the unit disc for mode-decomposed fields.
//
// Nodes 0 < r_1 < ... < r_Nr = 1 come from a smooth density (optionally
// clustered near prescribed radii and the boundary).  Each grid carries
//   - face radii s_0 = 0 < s_1 < ... (midpoints between nodes) and the flux
//     factors kappa_i = s_i / (r_i - r_{i-1}) used by the radial Laplacian;
//   - quadrature weights w_i > 0 for integrals  int_0^1 f(r) r dr  that are
//     exact for f in {1, r, r^2} (composite local-quadratic rule), so the
//     discrete energy is differentiated exactly by the discrete operator.
#pragma once

#include <vector>

#include "lab/util.hpp"

namespace lab {

struct PolarGrid {
  int Nr = 0;
  std::vector<double> r;      // nodes, strictly increasing, r.back() == 1
  std::vector<double> w;      // quadrature weights for int f r dr, all > 0
  std::vector<double> face;   // size Nr: face[0] = 0, face[i] between nodes
  std::vector<double> kappa;  // size Nr: kappa[0] = 0, else face[i]/h_i
  std::vector<int> mode_set;  // angular wave numbers j carried by fields

  double integrate(const std::vector<double>& f) const;  // sum w_i f_i
  void validate() const;
};

/// Uniformly spaced nodes r_i = i/Nr, i = 1..Nr.
PolarGrid make_uniform_grid(int Nr, const std::vector<int>& mode_set);

/// Nodes drawn from the density 1 + sum_c A exp(-(r-c)^2 / (2 sigma^2))
/// over the cluster centers (plus always the boundary r=1), normalized so
/// that the finest local spacing is approximately h_min.
PolarGrid make_clustered_grid(int Nr, const std::vector<int>& mode_set,
                              const std::vector<double>& cluster_centers,
                              double sigma, double h_min);

/// Rebuild a grid (weights, faces, fluxes) from explicit nodes; used when
/// restoring snapshots.  Nodes must be strictly increasing with last == 1.
PolarGrid make_grid_from_nodes(const std::vector<double>& nodes,
                               const std::vector<int>& mode_set);

/// Symmetric mode set {-J..J} (stride 1) or all multiples of k_sym in
/// [-J, J] when k_sym > 1.
std::vector<int> symmetric_modes(int J, int k_sym = 1);

}  // namespace lab
