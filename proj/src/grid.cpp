#include "lab/grid.hpp"

#include <cmath>

#include <fmt/format.h>

namespace lab {

double PolarGrid::integrate(const std::vector<double>& f) const {
  if (static_cast<int>(f.size()) != Nr)
    throw PreconditionError("PolarGrid::integrate: size mismatch");
  double s = 0.0;
  for (int i = 0; i < Nr; ++i) s += w[i] * f[i];
  return s;
}

void PolarGrid::validate() const {
  if (Nr < 8) throw PreconditionError("grid: need at least 8 radial nodes");
  if (static_cast<int>(r.size()) != Nr ||
      static_cast<int>(w.size()) != Nr ||
      static_cast<int>(face.size()) != Nr ||
      static_cast<int>(kappa.size()) != Nr)
    throw PreconditionError("grid: inconsistent array sizes");
  if (!(r.front() > 0.0))
    throw PreconditionError("grid: first node must be positive");
  if (r.back() != 1.0)
    throw PreconditionError("grid: last node must be exactly 1");
  for (int i = 1; i < Nr; ++i)
    if (!(r[i] > r[i - 1]))
      throw PreconditionError("grid: nodes must increase strictly");
  for (int i = 0; i < Nr; ++i)
    if (!(w[i] > 0.0))
      throw PreconditionError(
          fmt::format("grid: nonpositive quadrature weight at node {}", i));
  if (face[0] != 0.0 || kappa[0] != 0.0)
    throw PreconditionError("grid: center face must carry zero flux");
  for (size_t a = 0; a + 1 < mode_set.size(); ++a)
    if (mode_set[a] >= mode_set[a + 1])
      throw PreconditionError("grid: mode set must be strictly increasing");
}

namespace {

/// Adds the exact integrals of the three quadratic Lagrange basis functions
/// (nodes x0,x1,x2) times r over [a,b] into w at the given indices.  The
/// integrand is cubic; expanding around the interval midpoint kills the odd
/// powers and avoids the cancellation of antiderivative differences on
/// tightly clustered grids.
void accumulate_interval(double a, double b, const double x[3],
                         const int idx[3], std::vector<double>* w) {
  const double m = 0.5 * (a + b), h = b - a;
  for (int t = 0; t < 3; ++t) {
    const double xu = x[(t + 1) % 3], xv = x[(t + 2) % 3];
    const double D = (x[t] - xu) * (x[t] - xv);
    const double c0 = m * (m - xu) * (m - xv);          // value at midpoint
    const double c2 = 3.0 * m - (xu + xv);              // half the curvature
    (*w)[idx[t]] += h * (c0 + c2 * h * h / 12.0) / D;
  }
}

void build_weights_faces(PolarGrid* g) {
  const int Nr = g->Nr;
  const std::vector<double>& r = g->r;
  g->w.assign(Nr, 0.0);

  // Interval [0, r_0] and [r_0, r_1] share the first three nodes.
  {
    const double x[3] = {r[0], r[1], r[2]};
    const int idx[3] = {0, 1, 2};
    accumulate_interval(0.0, r[0], x, idx, &g->w);
    accumulate_interval(r[0], r[1], x, idx, &g->w);
  }
  // Remaining intervals use their endpoints plus whichever neighbor is
  // closer to the midpoint, which keeps the extrapolatory weight small on
  // grids whose spacing changes quickly.
  for (int i = 1; i + 1 < Nr; ++i) {
    const double mid = 0.5 * (r[i] + r[i + 1]);
    int third = i - 1;
    if (i + 2 < Nr &&
        std::abs(r[i + 2] - mid) < std::abs(r[i - 1] - mid))
      third = i + 2;
    const double x[3] = {r[i], r[i + 1], r[third]};
    const int idx[3] = {i, i + 1, third};
    accumulate_interval(r[i], r[i + 1], x, idx, &g->w);
  }

  g->face.assign(Nr, 0.0);
  g->kappa.assign(Nr, 0.0);
  for (int i = 1; i < Nr; ++i) {
    g->face[i] = 0.5 * (r[i - 1] + r[i]);
    g->kappa[i] = g->face[i] / (r[i] - r[i - 1]);
  }
}

}  // namespace

PolarGrid make_uniform_grid(int Nr, const std::vector<int>& mode_set) {
  PolarGrid g;
  g.Nr = Nr;
  g.mode_set = mode_set;
  g.r.resize(Nr);
  for (int i = 0; i < Nr; ++i) g.r[i] = static_cast<double>(i + 1) / Nr;
  g.r[Nr - 1] = 1.0;
  build_weights_faces(&g);
  g.validate();
  return g;
}

PolarGrid make_clustered_grid(int Nr, const std::vector<int>& mode_set,
                              const std::vector<double>& cluster_centers,
                              double sigma, double h_min) {
  if (sigma <= 0.0 || h_min <= 0.0)
    throw PreconditionError("clustered grid: sigma and h_min must be positive");
  std::vector<double> centers = cluster_centers;
  centers.push_back(1.0);  // always resolve the boundary layer

  // Bump amplitude so that the smallest spacing is about h_min; the total
  // density mass depends on the amplitude, so iterate the closure.
  double A = 0.0;
  for (int pass = 0; pass < 4; ++pass) {
    double mass = 1.0;
    for (double c : centers) {
      // in-domain fraction of each Gaussian bump
      const double lo = std::erf((0.0 - c) / (sigma * std::sqrt(2.0)));
      const double hi = std::erf((1.0 - c) / (sigma * std::sqrt(2.0)));
      mass += A * sigma * std::sqrt(PI / 2.0) * (hi - lo);
    }
    A = std::max(0.0, mass / (Nr * h_min) - 1.0);
  }

  auto density = [&](double x) {
    double d = 1.0;
    for (double c : centers) d += A * std::exp(-sqr(x - c) / (2.0 * sqr(sigma)));
    return d;
  };

  const int Q = std::max(8192, 16 * Nr);
  std::vector<double> cum(Q + 1, 0.0);
  for (int q = 1; q <= Q; ++q) {
    const double x0 = static_cast<double>(q - 1) / Q;
    const double x1 = static_cast<double>(q) / Q;
    cum[q] = cum[q - 1] + 0.5 * (density(x0) + density(x1)) * (x1 - x0);
  }

  PolarGrid g;
  g.Nr = Nr;
  g.mode_set = mode_set;
  g.r.resize(Nr);
  int q = 1;
  for (int i = 0; i < Nr; ++i) {
    const double target = cum[Q] * (i + 1.0) / Nr;
    while (q < Q && cum[q] < target) ++q;
    const double frac = (target - cum[q - 1]) / (cum[q] - cum[q - 1]);
    g.r[i] = (q - 1 + frac) / Q;
  }
  g.r[Nr - 1] = 1.0;

  // If the node budget cannot resolve the requested clustering, adjacent
  // spacings change so fast that local-quadratic quadrature degrades (and
  // weights may lose positivity).  Refuse instead of silently producing a
  // bad grid.
  for (int i = 1; i < Nr; ++i) {
    const double h0 = (i == 1) ? g.r[0] : g.r[i - 1] - g.r[i - 2];
    const double h1 = g.r[i] - g.r[i - 1];
    const double ratio = std::max(h0 / h1, h1 / h0);
    if (ratio > 2.2)
      throw PreconditionError(fmt::format(
          "clustered grid: spacing jumps by {:.2f}x near r={:.3f}; "
          "increase Nr or relax h_min/sigma",
          ratio, g.r[i - 1]));
  }

  build_weights_faces(&g);
  g.validate();
  return g;
}

PolarGrid make_grid_from_nodes(const std::vector<double>& nodes,
                               const std::vector<int>& mode_set) {
  PolarGrid g;
  g.Nr = static_cast<int>(nodes.size());
  g.r = nodes;
  g.mode_set = mode_set;
  build_weights_faces(&g);
  g.validate();
  return g;
}

std::vector<int> symmetric_modes(int J, int k_sym) {
  if (J < 0 || k_sym < 1)
    throw PreconditionError("symmetric_modes: need J >= 0 and k_sym >= 1");
  std::vector<int> m;
  for (int j = -J; j <= J; ++j)
    if (j % k_sym == 0) m.push_back(j);
  return m;
}

}  // namespace lab
