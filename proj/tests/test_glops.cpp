#include <cmath>
#include <functional>
#include <limits>

#include "doctest/doctest.h"
#include "lab/glops.hpp"

using namespace lab;

namespace {

PolarField mode_field(const PolarGrid& g, double eps, int n_bc,
                      int j, const std::function<double(double)>& profile) {
  PolarField f = make_field(g, eps, 1, n_bc);
  const int a = f.mode_index(j);
  REQUIRE(a >= 0);
  for (int i = 0; i < g.Nr; ++i) f.c[a][i] = profile(g.r[i]);
  return f;
}

}  // namespace

TEST_CASE("cell volumes tile the disc radius exactly") {
  const PolarGrid g = make_clustered_grid(160, symmetric_modes(2), {0.5},
                                          0.08, 2e-3);
  double total = 0.0;
  for (int i = 0; i < g.Nr; ++i) total += cell_volume(g, i);
  CHECK(total == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("energy of the degree-one seed profile matches the closed form") {
  const PolarGrid g = make_uniform_grid(512, symmetric_modes(2));
  auto lin = [](double r) { return r; };
  const PolarField f1 = mode_field(g, 0.1, 1, 1, lin);
  CHECK(energy_E(f1) == doctest::Approx(29.321531433504737).epsilon(1e-5));
  const PolarField f2 = mode_field(g, 0.05, 1, 1, lin);
  CHECK(energy_E(f2) == doctest::Approx(107.86134777324957).epsilon(1e-5));
}

TEST_CASE("vortex-free initial data is the constant field with zero energy") {
  const PolarGrid g = make_uniform_grid(64, symmetric_modes(2));
  const PolarField f = bbh_initial_data(VortexConfig{}, 0.05, g);
  CHECK(std::abs(f.eval(cplx(0.3, 0.2)) - 1.0) < 1e-12);
  CHECK(energy_E(f) < 1e-12);
  CHECK(max_modulus(f) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("momentum weight vanishes exactly on the boundary mode") {
  const PolarGrid g = make_uniform_grid(128, symmetric_modes(3));
  const PolarField f =
      mode_field(g, 0.1, 2, 2, [](double r) { return r * r; });
  CHECK(momentum_J(f, 2, 1) == 0.0);  // j = k m carries weight k - j/m = 0
}

TEST_CASE("momentum of a linear mode profile matches the exact integral") {
  const PolarGrid g = make_uniform_grid(128, symmetric_modes(2));
  const PolarField f = mode_field(g, 0.1, 1, 1, [](double r) { return r; });
  // J = -pi (k - j/m) int r^2 r dr = -pi (2 - 1) / 4, quadrature-exact.
  CHECK(momentum_J(f, 2, 1) == doctest::Approx(-PI / 4).epsilon(1e-14));
}

TEST_CASE("spectral and 2-D quadrature momenta agree to 1e-10") {
  const PolarGrid g = make_uniform_grid(96, symmetric_modes(3));
  PolarField f = make_field(g, 0.1, 1, 2);
  for (int a = 0; a < f.n_modes(); ++a) {
    const int j = g.mode_set[a];
    for (int i = 0; i < g.Nr; ++i) {
      const double r = g.r[i];
      f.c[a][i] = cplx(std::sin(1.0 + a + r), std::cos(0.5 * a - 2.0 * r)) *
                  std::pow(r, std::abs(j)) * (1.0 - r);
    }
  }
  f.enforce_boundary();
  const double js = momentum_J(f, 2, 3);
  const double jq = momentum_J_quadrature(f, 2, 3);
  CHECK(std::abs(js - jq) <= 1e-10 * std::max(1.0, std::abs(js)));

  // Same agreement on a sector-stored symmetric field.
  const PolarGrid g2 = make_uniform_grid(96, symmetric_modes(6, 2));
  PolarField f2 = make_field(g2, 0.1, 2, 4);
  for (int a = 0; a < f2.n_modes(); ++a)
    for (int i = 0; i < g2.Nr; ++i)
      f2.c[a][i] = cplx(0.1 * a - 0.3, 0.2 + 0.05 * a) * g2.r[i] *
                   (1.0 - g2.r[i] * g2.r[i]);
  f2.enforce_boundary();
  const double js2 = momentum_J(f2, 2, 2);
  const double jq2 = momentum_J_quadrature(f2, 2, 2);
  CHECK(std::abs(js2 - jq2) <= 1e-10 * std::max(1.0, std::abs(js2)));
}

TEST_CASE("residual vanishes identically on the constant solution") {
  const PolarGrid g = make_uniform_grid(64, symmetric_modes(2));
  PolarField f = make_field(g, 0.08, 1, 0);
  const int a0 = f.mode_index(0);
  for (int i = 0; i < g.Nr; ++i) f.c[a0][i] = 1.0;
  SolverParams p;
  p.omega = 1.3;
  p.k = 0;
  p.m = 2;
  CHECK(elliptic_residual(f, p) < 1e-13);
}

TEST_CASE("residual matches the analytic forcing on quadratic profiles") {
  // c_0 = r^2 with eps = 1: the flux-form Laplacian differentiates radial
  // quadratics exactly, and the cubic term is axisymmetric, so the discrete
  // residual of  Lap v + v(1 - v^2)  equals the analytic
  //   F(r) = 4 + r^2 (1 - r^4)
  // at every interior node.
  const PolarGrid g = make_uniform_grid(200, symmetric_modes(2));
  PolarField f = make_field(g, 1.0, 1, 0);
  const int a0 = f.mode_index(0);
  for (int i = 0; i < g.Nr; ++i) f.c[a0][i] = sqr(g.r[i]);
  SolverParams p;  // omega = 0
  double expect = 0.0;
  for (int i = 0; i < g.Nr - 1; ++i) {
    const double r2 = sqr(g.r[i]);
    expect += g.w[i] * sqr(4.0 + r2 * (1.0 - r2 * r2));
  }
  expect = std::sqrt(2.0 * PI * expect);
  CHECK(elliptic_residual(f, p) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("rotation term enters the residual with the mode weight k - j/m") {
  // eps = inf turns the cubic term off; modes then decouple and
  //   F_0 = Lap_0 c_0 (exact for r^2),   F_1 = Lap_1 c_1 + 0.35 c_1
  // for omega = 0.7, k = 0, m = 2 (weight -(0 - 1/2) omega = +0.35).
  const double inf = std::numeric_limits<double>::infinity();
  auto residual_at = [&](int Nr) {
    const PolarGrid g = make_uniform_grid(Nr, symmetric_modes(1));
    PolarField f = make_field(g, inf, 1, 0);
    const int a0 = f.mode_index(0), a1 = f.mode_index(1);
    for (int i = 0; i < g.Nr; ++i) {
      const double r = g.r[i];
      f.c[a0][i] = r * r;
      f.c[a1][i] = r - r * r * r;
    }
    f.enforce_boundary();
    SolverParams p;
    p.omega = 0.7;
    p.k = 0;
    p.m = 2;
    double expect = 0.0;
    for (int i = 0; i < g.Nr - 1; ++i) {
      const double r = g.r[i];
      expect += g.w[i] * (sqr(4.0) + sqr(-8.0 * r + 0.35 * (r - r * r * r)));
    }
    expect = std::sqrt(2.0 * PI * expect);
    return std::abs(elliptic_residual(f, p) - expect) / expect;
  };
  CHECK(residual_at(256) < 5e-3);
  CHECK(residual_at(512) < 1.5e-3);  // second-order operator error
}

TEST_CASE("radial quadratics are differentiated exactly by the flux form") {
  const PolarGrid g = make_clustered_grid(150, symmetric_modes(2), {0.6},
                                          0.1, 3e-3);
  PolarField f = make_field(g, std::numeric_limits<double>::infinity(), 1, 2);
  const int a = f.mode_index(2);
  for (int i = 0; i < g.Nr; ++i) f.c[a][i] = sqr(g.r[i]);  // z^2, harmonic
  SolverParams p;
  p.k = 2;
  p.m = 1;
  CHECK(elliptic_residual(f, p) < 1e-10);
}

TEST_CASE("discrete Laplacian error on a harmonic mode decays at 2nd order") {
  auto residual_at = [](int Nr) {
    const PolarGrid g = make_uniform_grid(Nr, symmetric_modes(3));
    PolarField f = make_field(g, std::numeric_limits<double>::infinity(), 1,
                              3);
    const int a = f.mode_index(3);
    for (int i = 0; i < g.Nr; ++i)
      f.c[a][i] = g.r[i] * sqr(g.r[i]);  // z^3, harmonic
    SolverParams p;
    p.k = 3;
    p.m = 1;
    return elliptic_residual(f, p);
  };
  const double r1 = residual_at(128);
  const double r2 = residual_at(256);
  CHECK(r1 / r2 > 3.3);
  CHECK(r1 / r2 < 4.8);
}

TEST_CASE("two-vortex initial data has exact boundary trace and parity") {
  const PolarGrid g = make_clustered_grid(220, symmetric_modes(24), {0.5},
                                          0.1, 8e-3);
  VortexConfig cfg{{cplx(0.5, 0.0), cplx(-0.5, 0.0)}, {1, 1}};
  const PolarField f = bbh_initial_data(cfg, 0.05, g);
  CHECK(f.n_bc == 2);
  for (int a = 0; a < f.n_modes(); ++a) {
    const cplx trace = f.c[a][g.Nr - 1];
    if (g.mode_set[a] == 2)
      CHECK(std::abs(trace - 1.0) == 0.0);
    else
      CHECK(std::abs(trace) == 0.0);
  }
  // The configuration is invariant under rotation by pi, so odd modes are
  // absent from the construction.
  double odd = 0.0;
  for (int a = 0; a < f.n_modes(); ++a) {
    if (g.mode_set[a] % 2 == 0) continue;
    for (int i = 0; i < g.Nr; ++i) odd = std::max(odd, std::abs(f.c[a][i]));
  }
  CHECK(odd < 1e-12);
}

TEST_CASE("single-vortex initial data carries the right zero and winding") {
  const PolarGrid g = make_clustered_grid(220, symmetric_modes(24), {0.5},
                                          0.1, 8e-3);
  VortexConfig cfg{{cplx(0.5, 0.0)}, {1}};
  const double eps = 0.05;
  const PolarField f = bbh_initial_data(cfg, eps, g);
  CHECK(std::abs(f.eval(cplx(0.5, 0.0))) < 0.05);
  // Winding number on a circle of radius 3 eps around the vortex.
  const int S = 256;
  double wind = 0.0;
  cplx prev = f.eval(cplx(0.5 + 3 * eps, 0.0));
  for (int s = 1; s <= S; ++s) {
    const cplx z = cplx(0.5, 0.0) + 3 * eps * rot(2 * PI * s / S);
    const cplx cur = f.eval(z);
    wind += std::arg(cur / prev);
    prev = cur;
  }
  CHECK(wind / (2 * PI) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(max_modulus(f) < 1.05);
}

TEST_CASE("initial data preconditions are enforced") {
  const PolarGrid fine = make_clustered_grid(220, symmetric_modes(8), {0.5},
                                             0.1, 8e-3);
  // Vortices closer than 4 eps.
  CHECK_THROWS_AS(bbh_initial_data(
                      VortexConfig{{cplx(0.5, 0.0), cplx(0.55, 0.0)}, {1, 1}},
                      0.05, fine),
                  PreconditionError);
  // Vortex within 4 eps of the boundary.
  CHECK_THROWS_AS(
      bbh_initial_data(VortexConfig{{cplx(0.9, 0.0)}, {1}}, 0.05, fine),
      PreconditionError);
  // Grid too coarse near the vortex radius for this eps.
  const PolarGrid coarse = make_uniform_grid(64, symmetric_modes(8));
  CHECK_THROWS_AS(
      bbh_initial_data(VortexConfig{{cplx(0.5, 0.0)}, {1}}, 0.02, coarse),
      PreconditionError);
  // Configuration not invariant under the requested symmetry order.
  const PolarGrid g2 = make_clustered_grid(220, symmetric_modes(8, 2), {0.5},
                                           0.1, 8e-3);
  CHECK_THROWS_AS(
      bbh_initial_data(VortexConfig{{cplx(0.5, 0.0)}, {1}}, 0.05, g2, 2),
      PreconditionError);
}

TEST_CASE("time reconstruction is periodic and fixes the boundary mode") {
  const PolarGrid g = make_uniform_grid(48, symmetric_modes(4));
  PolarField f = make_field(g, 0.1, 1, 2);
  for (int a = 0; a < f.n_modes(); ++a)
    for (int i = 0; i < g.Nr; ++i)
      f.c[a][i] = cplx(std::sin(a + 0.1 * i), std::cos(a - 0.2 * i));
  f.enforce_boundary();
  SolverParams p;
  p.omega = -8.0 / 3.0;
  p.k = 2;
  p.m = 1;
  const double T = 2 * PI * p.m / p.omega;

  const PolarField half = reconstruct_time_periodic(f, p, T / 2);
  for (int a = 0; a < f.n_modes(); ++a) {
    const int j = g.mode_set[a];
    const double sign = (std::abs(j - p.k * p.m) % 2 == 0) ? 1.0 : -1.0;
    for (int i = 0; i < g.Nr; ++i)
      CHECK(std::abs(half.c[a][i] - sign * f.c[a][i]) < 1e-13);
  }

  const PolarField full = reconstruct_time_periodic(f, p, T);
  double diff = 0.0;
  for (int a = 0; a < f.n_modes(); ++a)
    for (int i = 0; i < g.Nr; ++i)
      diff = std::max(diff, std::abs(full.c[a][i] - f.c[a][i]));
  CHECK(diff < 1e-13);

  // The boundary mode j = k m is exactly stationary at any t.
  const PolarField some = reconstruct_time_periodic(f, p, 0.3717);
  const int ab = f.mode_index(p.k * p.m);
  for (int i = 0; i < g.Nr; ++i)
    CHECK(some.c[ab][i] == f.c[ab][i]);
}

TEST_CASE("solver parameter consistency is checked") {
  const PolarGrid g = make_uniform_grid(48, symmetric_modes(3));
  const PolarField f = make_field(g, 0.1, 1, 1);
  SolverParams p;
  p.k = 2;
  p.m = 1;  // k m = 2 but n_bc = 1
  CHECK_THROWS_AS(elliptic_residual(f, p), PreconditionError);
  p.m = 0;
  CHECK_THROWS_AS(elliptic_residual(f, p), PreconditionError);
  CHECK_THROWS_AS(momentum_J(f, 1, 0), PreconditionError);
}
