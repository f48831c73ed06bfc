#include <doctest/doctest.h>

#include <cmath>
#include <limits>

#include <omp.h>

#include "lab/flow.hpp"
#include "lab/rings.hpp"

using namespace lab;

namespace {

// Decay rate of the slowest mode-1 transient of the implicit heat step on a
// uniform grid, recovered from the norm ratio of successive steps.
double heat_lambda(int Nr) {
  const double inf = std::numeric_limits<double>::infinity();
  PolarGrid g = make_uniform_grid(Nr, symmetric_modes(1));
  PolarField f = make_field(g, inf, 1, 0);
  const int a0 = f.mode_index(0), a1 = f.mode_index(1);
  for (int i = 0; i < Nr; ++i) {
    f.c[a0][i] = 1.0;
    f.c[a1][i] = g.r[i] * (1.0 - g.r[i]);
  }
  SolverParams p;
  p.dt = 1e-3;
  p.k = 0;
  p.m = 1;
  StepWorkspace ws(f);
  for (int s = 0; s < 800; ++s) gradient_flow_step(f, p, ws);
  auto nrm = [&]() {
    double s = 0.0;
    for (const cplx& z : f.c[a1]) s += std::norm(z);
    return std::sqrt(s);
  };
  const double n0 = nrm();
  gradient_flow_step(f, p, ws);
  const double rho = nrm() / n0;
  return (1.0 / rho - 1.0) / p.dt;
}

PolarGrid vortex_grid() {
  return make_clustered_grid(160, symmetric_modes(16), {0.5}, 0.2, 0.1 / 6.0);
}

PolarField single_vortex_state(const PolarGrid& g) {
  VortexConfig cfg{{cplx(0.5, 0.0)}, {1}};
  return bbh_initial_data(cfg, 0.1, g);
}

double modulus_dip_radius(const PolarField& f) {
  double best_r = 0.0, best_v = 1e9;
  for (int s = 0; s <= 400; ++s) {
    const double r = 0.2 + 0.6 * s / 400.0;
    const double v = std::abs(f.eval(cplx(r, 0.0)));
    if (v < best_v) {
      best_v = v;
      best_r = r;
    }
  }
  return best_r;
}

}  // namespace

TEST_CASE("implicit heat flow reproduces the fundamental disc eigenvalue") {
  // The slowest mode-1 decay rate must converge to the squared first zero of
  // the first-order Bessel function, 14.681970642123893, at second order.
  const double target = 14.681970642123893;
  const double l1 = heat_lambda(128);
  const double l2 = heat_lambda(256);
  const double l3 = heat_lambda(512);
  CHECK(std::abs(l3 - target) < std::abs(l2 - target));
  CHECK(std::abs(l2 - target) < std::abs(l1 - target));

  // Three-point fit lambda(h) = L + b h^2 + c h^3; observed |L - target| is
  // 5.9e-9 on this grid family.
  const double h1 = 1.0 / 128, h2 = 1.0 / 256, h3 = 1.0 / 512;
  double M[3][4] = {{1, h1 * h1, h1 * h1 * h1, l1},
                    {1, h2 * h2, h2 * h2 * h2, l2},
                    {1, h3 * h3, h3 * h3 * h3, l3}};
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(M[r][c]) > std::abs(M[piv][c])) piv = r;
    for (int k = 0; k < 4; ++k) std::swap(M[c][k], M[piv][k]);
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double fac = M[r][c] / M[c][c];
      for (int k = 0; k < 4; ++k) M[r][k] -= fac * M[c][k];
    }
  }
  const double L = M[0][3] / M[0][0];
  CHECK(std::abs(L - target) < 1e-6);
}

TEST_CASE("boundary trace persists bitwise through stepping") {
  PolarGrid g = vortex_grid();
  PolarField f = single_vortex_state(g);
  SolverParams p;
  p.omega = -8.0 / 3.0;
  p.k = 1;
  p.m = 1;
  StepWorkspace ws(f);
  for (int s = 0; s < 200; ++s) gradient_flow_step(f, p, ws);
  const int last = g.Nr - 1;
  for (int a = 0; a < f.n_modes(); ++a) {
    const double want = (g.mode_set[a] == f.n_bc) ? 1.0 : 0.0;
    REQUIRE(f.c[a][last].real() == want);
    REQUIRE(f.c[a][last].imag() == 0.0);
  }
}

TEST_CASE("one step removes action at the gradient-norm rate") {
  PolarGrid g = vortex_grid();
  PolarField f = single_vortex_state(g);
  SolverParams p;
  p.omega = -8.0 / 3.0;
  p.k = 1;
  p.m = 1;
  p.dt = 1e-6;
  StepWorkspace ws(f);
  // Smooth the state first so the measurement is not dominated by the seeded
  // profile's kinks.
  SolverParams pre = p;
  pre.dt = 0.0;
  pre.max_steps = 200;
  pre.residual_tol = 1e-30;
  relax_to_critical(f, pre);

  const double a0 = discrete_action(f, p);
  const double gn = flow_gradient_norm(f, p, ws);
  PolarField f2 = f;
  gradient_flow_step(f2, p, ws);
  const double a1 = discrete_action(f2, p);
  const double ratio = (a0 - a1) / (p.dt * gn * gn);
  CHECK(std::abs(ratio - 1.0) < 1e-3);
}

TEST_CASE("parallel and serial stepping produce identical bits") {
  omp_set_num_threads(2);
  PolarGrid g = vortex_grid();
  PolarField fa = single_vortex_state(g);
  PolarField fb = fa;
  SolverParams p;
  p.omega = -8.0 / 3.0;
  p.k = 1;
  p.m = 1;
  StepWorkspace wa(fa), wb(fb);
  wa.parallel = true;
  wb.parallel = false;
  for (int s = 0; s < 100; ++s) {
    gradient_flow_step(fa, p, wa);
    gradient_flow_step(fb, p, wb);
  }
  int mismatches = 0;
  for (int a = 0; a < fa.n_modes(); ++a)
    for (int i = 0; i < g.Nr; ++i)
      if (fa.c[a][i] != fb.c[a][i]) ++mismatches;
  REQUIRE(mismatches == 0);
}

TEST_CASE("gradient flow settles a single vortex onto its orbit radius") {
  PolarGrid g = vortex_grid();
  PolarField f = single_vortex_state(g);
  SolverParams p;
  p.omega = -8.0 / 3.0;
  p.k = 1;
  p.m = 1;
  p.residual_tol = 1e-6;
  p.max_steps = 30000;
  RelaxResult rr = relax_to_critical(f, p);

  REQUIRE(rr.converged);
  CHECK(rr.steps <= 4000);
  CHECK(rr.residual <= 1e-6);
  CHECK(rr.halvings == 0);
  CHECK(rr.max_step_increase <= 3e-11);
  CHECK(long(rr.action_trace.size()) == rr.steps);
  CHECK(rr.action_trace.front() > rr.action_trace.back());

  // At eps = 0.1 the modulus may only overshoot 1 by O(eps^2).
  CHECK(max_modulus(f) <= 1.0 + 10 * 0.01);
  // The zero must sit near the radius where a single vortex co-rotates
  // steadily (0.5 by construction of omega).
  CHECK(std::abs(modulus_dip_radius(f) - 0.5) <= 0.05);
}

TEST_CASE("momentum-constrained descent finds the rotating critical point") {
  PolarGrid g = vortex_grid();
  PolarField f = single_vortex_state(g);
  SolverParams p;
  p.k = 1;
  p.m = 1;
  p.residual_tol = 1e-6;
  p.max_steps = 30000;
  const double jt = momentum_J(f, 1, 1);
  ConstrainedResult cr = constrained_relax(f, jt, p);

  REQUIRE(cr.converged);
  CHECK(cr.steps <= 1000);
  CHECK(cr.residual <= 1e-6);
  CHECK(cr.halvings == 0);
  CHECK(cr.max_momentum_drift <= 1e-8);
  // The recovered rotation rate sits near the point-vortex value -8/3, with
  // a finite-thickness shift (measured -2.801 at eps = 0.1).
  CHECK(std::abs(cr.omega_eps + 8.0 / 3.0) <= 0.3);
  for (size_t i = 1; i < cr.energy_trace.size(); ++i) {
    const double prev = cr.energy_trace[i - 1];
    REQUIRE(cr.energy_trace[i] <= prev + 1e-12 * (1.0 + std::abs(prev)));
  }
}

TEST_CASE("constrained descent lands exactly on the requested momentum") {
  PolarGrid g = vortex_grid();
  PolarField f = single_vortex_state(g);
  SolverParams p;
  p.k = 1;
  p.m = 1;
  p.residual_tol = 1e-6;
  p.max_steps = 30000;
  ConstrainedResult cr = constrained_relax(f, -PI / 8.0, p);
  REQUIRE(cr.converged);
  CHECK(std::abs(momentum_J(f, 1, 1) + PI / 8.0) <= 1e-12);
  CHECK(cr.max_momentum_drift <= 1e-8);
  CHECK(cr.omega_eps > -3.2);
  CHECK(cr.omega_eps < -2.4);

  PolarField f2 = single_vortex_state(g);
  CHECK_THROWS_AS(constrained_relax(f2, 5.0, p), PreconditionError);
}

TEST_CASE("reflection-symmetric data keeps odd modes silent") {
  PolarGrid g = vortex_grid();
  VortexConfig pair{{cplx(0.5, 0.0), cplx(-0.5, 0.0)}, {1, 1}};
  PolarField f = bbh_initial_data(pair, 0.1, g);
  REQUIRE(f.n_bc == 2);
  SolverParams p;
  p.omega = single_ring_omega(2, 0.5);
  p.k = 1;
  p.m = 2;
  StepWorkspace ws(f);
  for (int s = 0; s < 500; ++s) gradient_flow_step(f, p, ws);
  double odd = 0.0;
  for (int a = 0; a < f.n_modes(); ++a) {
    if (((g.mode_set[a] % 2) + 2) % 2 != 1) continue;
    for (const cplx& z : f.c[a]) odd = std::max(odd, std::abs(z));
  }
  CHECK(odd <= 1e-12);
}

TEST_CASE("action guard rejects oversized steps and halves them") {
  PolarGrid g = make_uniform_grid(96, symmetric_modes(4));
  PolarField f = make_field(g, 0.1, 1, 0);
  for (int i = 0; i < g.Nr; ++i) f.c[f.mode_index(0)][i] = 2.0;
  SolverParams p;
  p.k = 0;
  p.m = 1;
  p.dt = 0.02;
  p.max_steps = 5;
  p.residual_tol = 1e-30;
  RelaxResult rr = relax_to_critical(f, p);
  CHECK(rr.halvings >= 1);
  CHECK(rr.dt_final <= 4.5e-3);
}

TEST_CASE("flow rejects inconsistent inputs") {
  PolarGrid g = vortex_grid();
  PolarField f = single_vortex_state(g);

  SUBCASE("workspace shape must match the field") {
    PolarGrid g2 = make_uniform_grid(64, symmetric_modes(4));
    PolarField f2 = make_field(g2, 0.1, 1, 0);
    StepWorkspace ws(f2);
    SolverParams p;
    p.k = 1;
    p.m = 1;
    CHECK_THROWS_AS(gradient_flow_step(f, p, ws), PreconditionError);
  }

  SUBCASE("an explicit dt is required when the interaction is switched off") {
    const double inf = std::numeric_limits<double>::infinity();
    PolarGrid g2 = make_uniform_grid(64, symmetric_modes(2));
    PolarField f2 = make_field(g2, inf, 1, 0);
    SolverParams p;
    p.k = 0;
    p.m = 1;
    CHECK_THROWS_AS(gradient_flow_step(f2, p), PreconditionError);
  }
}
