// Complex fields on the unit disc stored as angular Fourier modes on a
// radial grid: u(r_i, theta) = sum_j c_j(r_i) e^{i j theta}, with j running
// over grid.mode_set.  A field optionally declares a rotational symmetry
// order k_sym (all carried modes are multiples of k_sym, and the physical
// collocation circle reduces to one symmetry sector) and a boundary winding
// n_bc (the trace on |z| = 1 is pinned to e^{i n_bc theta}).
#pragma once

#include <string>
#include <vector>

#include <fftw3.h>

#include "lab/grid.hpp"
#include "lab/util.hpp"

namespace lab {

struct PolarField {
  PolarGrid grid;
  std::vector<std::vector<cplx>> c;  // c[mode_index][radial_index]
  double epsilon = 0.0;
  int k_sym = 1;  // symmetry stride of the stored mode set (>= 1)
  int n_bc = 0;   // boundary winding; must be a carried mode

  int n_modes() const { return static_cast<int>(grid.mode_set.size()); }
  int mode_index(int j) const;  // -1 when j is not carried
  void validate() const;

  /// Overwrites the last radial node with the exact boundary trace
  /// c_j(1) = delta_{j, n_bc}.
  void enforce_boundary();

  /// Value u(z) by direct mode summation with radial cubic interpolation.
  cplx eval(cplx z) const;
};

/// Zero field with the given shape (boundary trace installed).
PolarField make_field(const PolarGrid& grid, double epsilon, int k_sym,
                      int n_bc);

/// Collocation transform between mode space and physical values on one
/// symmetry sector: Ntheta angles theta_q = 2 pi q / (Ntheta * k_sym).
/// Ntheta is the smallest multiple of 12 with Ntheta >= 4 (J' + 1), where
/// J' is the largest reduced wavenumber |j| / k_sym -- enough padding that
/// cubic products of carried modes project back without aliasing error.
class ThetaTransform {
 public:
  ThetaTransform(const PolarGrid& grid, int k_sym);
  ~ThetaTransform();
  ThetaTransform(const ThetaTransform&) = delete;
  ThetaTransform& operator=(const ThetaTransform&) = delete;

  int Ntheta() const { return Ntheta_; }
  int Nr() const { return Nr_; }

  /// Physical values out[i * Ntheta + q] = u(r_i, theta_q).
  void synthesize(const PolarField& f, cplx* out) const;

  /// Projects physical values back onto the carried modes of f.
  void analyze(const cplx* in, PolarField* f) const;

 private:
  int Nr_, Ntheta_, stride_;
  std::vector<int> modes_;
  std::vector<int> bin_;  // FFT bin per carried mode
  mutable std::vector<cplx> buf_;
  fftw_plan fwd_ = nullptr, bwd_ = nullptr;
};

/// Binary snapshot: one JSON header line (shape, epsilon, symmetry, nodes)
/// followed by little-endian re/im doubles, mode-major.
void save_snapshot(const PolarField& f, const std::string& path);
PolarField load_snapshot(const std::string& path);

/// |u| and arg(u) on a uniform polar raster, one CSV row per (r, theta).
void write_field_csv(const PolarField& f, const std::string& path,
                     int Ntheta_out = 256);

}  // namespace lab
