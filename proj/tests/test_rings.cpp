// Ring families and relative equilibria.  Frozen numbers come from the
// independent high-precision solver in tools/oracles.py.
#include <cmath>

#include "doctest/doctest.h"
#include "lab/rings.hpp"

using namespace lab;

TEST_CASE("single-ring rotation rates match closed-form references") {
  CHECK(single_ring_omega(1, 0.5) ==
        doctest::Approx(-8.0 / 3.0).epsilon(1e-14));
  CHECK(single_ring_omega(2, 0.5) ==
        doctest::Approx(-76.0 / 15.0).epsilon(1e-14));
  CHECK(single_ring_omega(4, 0.5) ==
        doctest::Approx(-12.125490196078431).epsilon(1e-14));
  // Central limit: a single vortex near the origin rotates at rate -2.
  CHECK(single_ring_omega(1, 1e-8) == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("critical staggered radii match the closed form") {
  CHECK(staggered_critical_radius(1) ==
        doctest::Approx(0.48586827175664568).epsilon(1e-14));
  CHECK(staggered_critical_radius(2) ==
        doctest::Approx(0.59233783667142830).epsilon(1e-14));
  CHECK(staggered_critical_radius(3) ==
        doctest::Approx(0.66014442502341440).epsilon(1e-14));
  CHECK(staggered_critical_radius(4) ==
        doctest::Approx(0.70676360317288903).epsilon(1e-14));
}

TEST_CASE("equal-radius staggered pair is steady: gradient vanishes") {
  for (int k = 1; k <= 4; ++k) {
    const double r0 = staggered_critical_radius(k);
    RingFamily f;
    f.k = k;
    f.rings = {{r0, 0.0, +1}, {r0, PI / k, -1}};
    const auto g = grad_W(f.expand());
    double norm = 0.0;
    for (const auto& z : g) norm += std::norm(z);
    CHECK(std::sqrt(norm) < 1e-10);
  }
}

TEST_CASE("off-critical equal-radius staggered pairs are not steady") {
  for (int k = 1; k <= 4; ++k) {
    for (double shift : {+0.05, -0.05}) {
      const double r = staggered_critical_radius(k) + shift;
      RingFamily f;
      f.k = k;
      f.rings = {{r, 0.0, +1}, {r, PI / k, -1}};
      const auto g = grad_W(f.expand());
      double norm = 0.0;
      for (const auto& z : g) norm += std::norm(z);
      CHECK(std::sqrt(norm) > 1e-3);
    }
  }
}

TEST_CASE("ring residual at a single ring vanishes at its own rate") {
  RingFamily f;
  f.k = 3;
  f.rings = {{0.5, 0.0, +1}};
  const double omega0 = f.ansatz_m() * single_ring_omega(3, 0.5);
  const auto res = ring_residual(f, omega0);
  REQUIRE(res.size() == 1);
  CHECK(std::abs(res[0]) < 1e-12);
}

TEST_CASE("ring residual appends reality components for generic phases") {
  RingFamily f;
  f.k = 2;
  f.rings = {{0.35, 0.0, +1}, {0.62, PI / 2.0 / 1.7, -1}};
  const auto res = ring_residual(f, 0.0);
  REQUIRE(res.size() == 4);  // two radial + two reality components
  // Imaginary part of the reduced induction, computed independently through
  // the phase-sum identity (tools/oracles.py).  Both rings share the same
  // value, so the degree-weighted sum cancels.
  CHECK(res[2] == doctest::Approx(2.0 * -0.392320352472).epsilon(1e-9));
  CHECK(res[3] == doctest::Approx(2.0 * -0.392320352472).epsilon(1e-9));

  // Half-staggered phases need no reality components.
  f.rings[1].phi = PI / 2.0;
  CHECK(ring_residual(f, 0.0).size() == 2);
}

TEST_CASE("single ring solved from impulse recovers the closed form") {
  RingFamily tmpl;
  tmpl.k = 1;
  tmpl.rings.resize(1);
  const auto eq = solve_equilibrium(
      tmpl, EquilibriumMode::single_ring_from_momentum, -0.125);
  CHECK(eq.family.rings[0].rho == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(eq.omega0 == doctest::Approx(-8.0 / 3.0).epsilon(1e-14));
  CHECK(eq.period() == doctest::Approx(2.0 * PI / (-8.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("staggered pair solves match the independent solver") {
  RingFamily tmpl;
  tmpl.rings.resize(2);

  SUBCASE("k=1, r=0.30") {
    tmpl.k = 1;
    const auto eq =
        solve_equilibrium(tmpl, EquilibriumMode::staggered_pair, 0.30);
    CHECK(eq.family.rings[0].rho ==
          doctest::Approx(0.10946556058534892).epsilon(1e-10));
    CHECK(eq.family.rings[1].rho ==
          doctest::Approx(0.82217639519443317).epsilon(1e-10));
    CHECK(eq.omega0 ==  // ansatz m = k = 1
          doctest::Approx(3.8055858678412752).epsilon(1e-9));
    CHECK(eq.family.rings[0].degree == +1);
    CHECK(eq.family.rings[1].degree == -1);
  }

  SUBCASE("k=2, r=0.30") {
    tmpl.k = 2;
    const auto eq =
        solve_equilibrium(tmpl, EquilibriumMode::staggered_pair, 0.30);
    CHECK(eq.family.rings[0].rho ==
          doctest::Approx(0.19755100552364563).epsilon(1e-10));
    CHECK(eq.family.rings[1].rho ==
          doctest::Approx(0.45557854672234285).epsilon(1e-10));
    CHECK(eq.omega0 ==  // ansatz m = k = 2
          doctest::Approx(2.0 * -10.381527408822065).epsilon(1e-9));
  }

  SUBCASE("k=2, r=0.45") {
    tmpl.k = 2;
    const auto eq =
        solve_equilibrium(tmpl, EquilibriumMode::staggered_pair, 0.45);
    CHECK(eq.family.rings[0].rho ==
          doctest::Approx(0.32497781446167186).epsilon(1e-10));
    CHECK(eq.family.rings[1].rho ==
          doctest::Approx(0.62311945920198503).epsilon(1e-10));
    CHECK(eq.omega0 == doctest::Approx(2.0 * -3.2888934141445537).epsilon(1e-9));
  }

  SUBCASE("k=2, r=0.62: beyond the critical radius, degrees flip") {
    tmpl.k = 2;
    const auto eq =
        solve_equilibrium(tmpl, EquilibriumMode::staggered_pair, 0.62);
    CHECK(eq.family.rings[0].degree == -1);
    CHECK(eq.family.rings[1].degree == +1);
    CHECK(eq.family.rings[0].rho < 0.62);
    CHECK(eq.family.rings[1].rho > 0.62);
    CHECK(eq.omega0 > 0.0);  // mirror of the negative-omega inner-positive case
    for (double res : ring_residual(eq.family, eq.omega0))
      CHECK(std::abs(res) < 1e-10);
    double gn = 0.0;
    for (const auto& z :
         grad_H(eq.family.expand(), eq.omega0, eq.family.ansatz_m()))
      gn += std::norm(z);
    CHECK(std::sqrt(gn) < 1e-8);
  }

  SUBCASE("separators no equilibrium can straddle are reported") {
    tmpl.k = 2;
    CHECK_THROWS_AS(
        solve_equilibrium(tmpl, EquilibriumMode::staggered_pair, 0.90),
        SolverFailure);
  }

  SUBCASE("k=3, r=0.35") {
    tmpl.k = 3;
    const auto eq =
        solve_equilibrium(tmpl, EquilibriumMode::staggered_pair, 0.35);
    CHECK(eq.family.rings[0].rho ==
          doctest::Approx(0.26801587918475266).epsilon(1e-10));
    CHECK(eq.family.rings[1].rho ==
          doctest::Approx(0.45706247097231314).epsilon(1e-10));
    CHECK(eq.omega0 == doctest::Approx(3.0 * -14.011094819451558).epsilon(1e-9));
  }
}

TEST_CASE("degree-balanced staggered pair: omega0 convention and period") {
  RingFamily tmpl;
  tmpl.rings.resize(2);
  tmpl.k = 2;
  const auto eq =
      solve_equilibrium(tmpl, EquilibriumMode::staggered_pair, 0.30);
  CHECK(eq.family.n() == 0);
  CHECK(eq.family.ansatz_k() == 0);
  CHECK(eq.family.ansatz_m() == 2);
  CHECK(eq.period() ==
        doctest::Approx(2.0 * PI * 2.0 / eq.omega0).epsilon(1e-14));

  // Steady equal-radius case has infinite period.
  const auto steady = solve_equilibrium(tmpl, EquilibriumMode::staggered_pair,
                                        staggered_critical_radius(2));
  CHECK(steady.omega0 == 0.0);
  CHECK(std::isinf(steady.period()));
}

TEST_CASE("aligned two-ring solve matches the independent solver") {
  RingFamily tmpl;
  tmpl.k = 2;
  tmpl.rings.resize(2);
  const auto eq =
      solve_equilibrium(tmpl, EquilibriumMode::aligned_multiring, -0.5);
  CHECK(eq.family.rings[0].rho ==
        doctest::Approx(0.21241915895354632).epsilon(1e-9));
  CHECK(eq.family.rings[1].rho ==
        doctest::Approx(0.67444651449130347).epsilon(1e-9));
  CHECK(eq.omega0 ==  // ansatz m = n/k = 2
        doctest::Approx(2.0 * -14.438781709730098).epsilon(1e-9));
  // The prescribed impulse is hit exactly.
  CHECK(momentum_J0(eq.family.expand()) == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("modified energy H is critical exactly at equilibria") {
  RingFamily f;
  f.k = 2;
  f.rings = {{0.5, 0.0, +1}};
  const double omega0 = f.ansatz_m() * single_ring_omega(2, 0.5);
  const auto g = grad_H(f.expand(), omega0, f.ansatz_m());
  for (const auto& z : g) CHECK(std::abs(z) < 1e-12);

  // Perturbed radius: no longer critical.
  f.rings[0].rho = 0.55;
  const auto g2 = grad_H(f.expand(), omega0, f.ansatz_m());
  CHECK(std::abs(g2[0]) > 1e-3);
}

TEST_CASE("Hessian classification matches independent eigenvalues") {
  SUBCASE("single vortex: degenerate local minimum") {
    RingFamily f;
    f.k = 1;
    f.rings = {{0.5, 0.0, +1}};
    const double om = single_ring_omega(1, 0.5);
    const auto rep = hessian_classify(f.expand(), om, 1, 1);
    REQUIRE(rep.eigenvalues.size() == 2);
    CHECK(rep.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(rep.eigenvalues[1] ==
          doctest::Approx(1.7777777777777778).epsilon(1e-5));
    CHECK(rep.null_count == 1);
    CHECK(rep.S == 1);
    CHECK(rep.tangent_alignment > 0.999);
  }

  SUBCASE("rings n=2..4: rotation-degenerate saddles") {
    const double expected_neg[3] = {-11.16444444, -43.31972789, -92.97248750};
    for (int n = 2; n <= 4; ++n) {
      RingFamily f;
      f.k = n;
      f.rings = {{0.5, 0.0, +1}};
      const double om = single_ring_omega(n, 0.5);
      const auto rep = hessian_classify(f.expand(), om, 1, n);
      REQUIRE(rep.eigenvalues.size() == 2);
      CHECK(rep.eigenvalues[0] ==
            doctest::Approx(expected_neg[n - 2]).epsilon(1e-5));
      CHECK(rep.null_count == 1);
      CHECK(rep.S == 2);  // null + one negative direction
      CHECK(rep.tangent_alignment > 0.999);
    }
  }

  SUBCASE("steady staggered pair k=1 is a degenerate local minimum") {
    RingFamily f;
    f.k = 1;
    const double r0 = staggered_critical_radius(1);
    f.rings = {{r0, 0.0, +1}, {r0, PI, -1}};
    const auto rep = hessian_classify(f.expand(), 0.0, f.ansatz_m(), 1);
    REQUIRE(rep.eigenvalues.size() == 4);
    CHECK(rep.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(rep.eigenvalues[1] == doctest::Approx(1.6180340).epsilon(1e-5));
    CHECK(rep.eigenvalues[2] == doctest::Approx(2.6180340).epsilon(1e-5));
    CHECK(rep.eigenvalues[3] == doctest::Approx(9.4721360).epsilon(1e-5));
    CHECK(rep.null_count == 1);
    CHECK(rep.S == 1);
  }

  SUBCASE("steady staggered pair k=2 is a saddle") {
    RingFamily f;
    f.k = 2;
    const double r0 = staggered_critical_radius(2);
    f.rings = {{r0, 0.0, +1}, {r0, PI / 2.0, -1}};
    const auto rep = hessian_classify(f.expand(), 0.0, f.ansatz_m(), 2);
    REQUIRE(rep.eigenvalues.size() == 4);
    CHECK(rep.eigenvalues[0] == doctest::Approx(-8.1994546).epsilon(1e-5));
    CHECK(rep.eigenvalues[3] == doctest::Approx(23.502578).epsilon(1e-5));
    CHECK(rep.null_count == 1);
    CHECK(rep.S == 2);
  }

  SUBCASE("aligned two-ring configuration is a saddle") {
    RingFamily tmpl;
    tmpl.k = 2;
    tmpl.rings.resize(2);
    const auto eq =
        solve_equilibrium(tmpl, EquilibriumMode::aligned_multiring, -0.5);
    const auto rep = hessian_classify(eq.family.expand(), eq.omega0,
                                      eq.family.ansatz_m(), 2);
    REQUIRE(rep.eigenvalues.size() == 4);
    CHECK(rep.eigenvalues[0] == doctest::Approx(-96.479149).epsilon(1e-5));
    CHECK(rep.eigenvalues[1] == doctest::Approx(-33.747686).epsilon(1e-5));
    CHECK(rep.eigenvalues[3] == doctest::Approx(39.308574).epsilon(1e-5));
    CHECK(rep.null_count == 1);
    CHECK(rep.S == 3);
  }
}

TEST_CASE("classification rejects non-critical input") {
  RingFamily f;
  f.k = 2;
  f.rings = {{0.55, 0.0, +1}};
  const double om = 2.0 * single_ring_omega(2, 0.5);  // wrong radius for om
  CHECK_THROWS_AS(hessian_classify(f.expand(), om, 1, 2), PreconditionError);
}

TEST_CASE("standard catalog entries are genuine equilibria") {
  const auto cat = standard_catalog();
  CHECK(cat.size() >= 13);
  for (const auto& e : cat) {
    for (double r : ring_residual(e.eq.family, e.eq.omega0))
      CHECK(std::abs(r) < 1e-10);
    double gn = 0.0;
    for (const auto& z : grad_H(e.eq.family.expand(), e.eq.omega0,
                                e.eq.family.ansatz_m()))
      gn += std::norm(z);
    CHECK(std::sqrt(gn) < 1e-8);
    CHECK(e.hessian.null_count >= 1);
    CHECK(e.hessian.S >= 1);
    CHECK(e.hessian.S <= static_cast<int>(e.hessian.eigenvalues.size()));
  }
}
