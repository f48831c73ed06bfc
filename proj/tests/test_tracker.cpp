#include <doctest/doctest.h>

#include <cmath>
#include <limits>

#include "lab/flow.hpp"
#include "lab/tracker.hpp"

using namespace lab;

namespace {

double bump(cplx z, cplx z0, double R) {
  const double t = std::norm(z - z0) / (R * R);
  if (t >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - t));
}

PolarField sharp_pair(int sign_second, int k_sym) {
  PolarGrid g = make_clustered_grid(
      512, symmetric_modes(96, k_sym), {0.5}, 0.04, 0.02 / 6.0);
  VortexConfig cfg{{cplx(0.5, 0.0), cplx(-0.5, 0.0)}, {1, sign_second}};
  return bbh_initial_data(cfg, 0.02, g, k_sym);
}

PolarField relaxed_vortex(SolverParams* params) {
  PolarGrid g = make_clustered_grid(160, symmetric_modes(16), {0.5}, 0.2,
                                    0.1 / 6.0);
  VortexConfig cfg{{cplx(0.5, 0.0)}, {1}};
  PolarField f = bbh_initial_data(cfg, 0.1, g);
  params->omega = -8.0 / 3.0;
  params->k = 1;
  params->m = 1;
  params->residual_tol = 1e-6;
  params->max_steps = 30000;
  RelaxResult rr = relax_to_critical(f, *params);
  REQUIRE(rr.converged);
  return f;
}

}  // namespace

TEST_CASE("pairing of a smooth unit-modulus field vanishes") {
  PolarGrid g = make_uniform_grid(256, symmetric_modes(24));
  PolarField f = make_field(g, std::numeric_limits<double>::infinity(), 1, 0);
  ThetaTransform tf(g, 1);
  std::vector<cplx> samples(size_t(g.Nr) * tf.Ntheta());
  for (int i = 0; i < g.Nr; ++i)
    for (int q = 0; q < tf.Ntheta(); ++q) {
      const double th = 2.0 * PI * q / tf.Ntheta();
      samples[size_t(i) * tf.Ntheta() + q] =
          std::polar(1.0, 2.0 * g.r[i] * std::cos(th));
    }
  tf.analyze(samples.data(), &f);
  const double v =
      jacobian_pairing(f, [](cplx z) { return bump(z, cplx(0, 0), 0.9); });
  CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("pairing concentrates on vortex cores") {
  PolarField f = sharp_pair(+1, 2);
  struct Probe {
    cplx z0;
    double R, target;
  };
  const Probe probes[3] = {{cplx(0.5, 0), 0.35, PI},
                           {cplx(-0.5, 0), 0.35, PI},
                           {cplx(0, 0), 0.8, 3.30967972664}};
  for (const Probe& pr : probes) {
    const double v =
        jacobian_pairing(f, [&](cplx z) { return bump(z, pr.z0, pr.R); });
    CHECK(std::abs(v - pr.target) / pr.target <= 0.01);
  }

  // The pairing is a linear functional of the test function.
  auto b1 = [](cplx z) { return bump(z, cplx(0.5, 0), 0.3); };
  auto b2 = [](cplx z) { return bump(z, cplx(0, 0), 0.7); };
  const double va = jacobian_pairing(f, b1);
  const double vb = jacobian_pairing(f, b2);
  const double vc =
      jacobian_pairing(f, [&](cplx z) { return 2.0 * b1(z) - 0.5 * b2(z); });
  CHECK(std::abs(vc - (2.0 * va - 0.5 * vb)) <= 1e-12);
}

TEST_CASE("detector round-trips prescribed vortices") {
  PolarField f = sharp_pair(+1, 2);
  std::vector<VortexObservation> obs = detect_vortices(f);
  REQUIRE(obs.size() == 2);
  for (const VortexObservation& o : obs) {
    CHECK(o.degree == 1);
    CHECK(std::abs(std::abs(o.position) - 0.5) <= 2e-3);
    CHECK(std::abs(o.position.imag()) <= 2e-3);
    CHECK(o.modulus_min <= 0.01);
    CHECK(o.localization_radius == 4.0 * 0.02);
  }

  PolarField fpm = sharp_pair(-1, 1);
  obs = detect_vortices(fpm);
  REQUIRE(obs.size() == 2);
  int plus = 0, minus = 0;
  for (const VortexObservation& o : obs) {
    if (o.degree == 1) {
      ++plus;
      CHECK(std::abs(o.position - cplx(0.5, 0.0)) <= 2e-3);
    } else if (o.degree == -1) {
      ++minus;
      CHECK(std::abs(o.position - cplx(-0.5, 0.0)) <= 2e-3);
    }
  }
  CHECK(plus == 1);
  CHECK(minus == 1);
}

TEST_CASE("detector ignores a vortex-free field") {
  PolarGrid g = make_uniform_grid(128, symmetric_modes(4));
  VortexConfig none{{}, {}};
  PolarField f = bbh_initial_data(none, 0.1, g);
  CHECK(detect_vortices(f).empty());
}

TEST_CASE("detector refuses unresolved cores") {
  PolarGrid g = make_uniform_grid(64, symmetric_modes(4));
  PolarField f = make_field(g, 0.01, 1, 0);
  CHECK_THROWS_AS(detect_vortices(f), PreconditionError);
}

TEST_CASE("rotating the field rotates the detections") {
  PolarField f = sharp_pair(-1, 1);
  const std::vector<VortexObservation> before = detect_vortices(f);
  const double alpha = 0.3;
  for (int a = 0; a < f.n_modes(); ++a) {
    const cplx ph = std::polar(1.0, -alpha * f.grid.mode_set[a]);
    for (cplx& z : f.c[a]) z *= ph;
  }
  const std::vector<VortexObservation> after = detect_vortices(f);
  REQUIRE(after.size() == before.size());
  const cplx rot = std::polar(1.0, alpha);
  for (const VortexObservation& o : after) {
    double best = 1e9;
    for (const VortexObservation& b : before)
      best = std::min(best, std::abs(o.position - rot * b.position));
    CHECK(best <= 1e-6);
  }
}

TEST_CASE("force-balance defects vanish on exact equilibria") {
  VortexConfig ring{{cplx(0.5, 0.0)}, {1}};
  CHECK(vanishing_gradient_defects(ring, -8.0 / 3.0, 1)[0] <= 1e-12);

  const double r0 = 0.48586827175664568;  // steady +- pair radius
  VortexConfig stag{{cplx(r0, 0.0), cplx(-r0, 0.0)}, {1, -1}};
  const std::vector<double> d = vanishing_gradient_defects(stag, 0.0, 1);
  CHECK(d[0] <= 1e-12);
  CHECK(d[1] <= 1e-12);

  VortexConfig center{{cplx(0.0, 0.0)}, {1}};
  CHECK(vanishing_gradient_defects(center, 7.3, 2)[0] <= 1e-12);

  CHECK_THROWS_AS(vanishing_gradient_defects(ring, 1.0, 0),
                  PreconditionError);
}

TEST_CASE("relaxed vortex passes the solution diagnostics") {
  SolverParams p;
  PolarField f = relaxed_vortex(&p);

  // Detection: the zero sits slightly inside the reference circle at this
  // core size.
  std::vector<VortexObservation> obs = detect_vortices(f);
  REQUIRE(obs.size() == 1);
  CHECK(obs[0].degree == 1);
  CHECK(std::abs(obs[0].position.real() - 0.4801701) <= 1e-4);
  CHECK(std::abs(obs[0].position.imag()) <= 1e-6);

  // Integral identity for critical points.
  PohozaevReport rep = pohozaev_residual(f, p);
  CHECK(rep.residual <= 5e-3);
  CHECK(rep.core_constant == doctest::Approx(PI).epsilon(1e-12));
  CHECK(rep.boundary_flux > 1.5);
  CHECK(rep.boundary_flux < 2.2);
  CHECK(rep.potential > 2.5);
  CHECK(rep.potential < 3.5);

  // Limiting force balance, at this core size still coarse.
  const std::vector<double> defects = vanishing_gradient_check(f, p);
  REQUIRE(defects.size() == 1);
  CHECK(defects[0] <= 0.15);

  // Rigid-rotation tracking across one period of snapshots.
  RelativeEquilibrium eq;
  eq.family.k = 1;
  eq.family.rings = {{0.5, 0.0, 1}};
  eq.omega0 = -8.0 / 3.0;
  const double T = eq.period();
  std::vector<PolarField> snaps;
  std::vector<double> times;
  for (int s = 0; s < 8; ++s) {
    times.push_back(T * s / 8.0);
    snaps.push_back(reconstruct_time_periodic(f, p, times.back()));
  }
  TrackReport tr = compare_to_pvf(snaps, times, eq);
  CHECK(tr.max_deviation <= 0.05);
  CHECK(std::abs(tr.angular_speed - (-8.0 / 3.0)) <= 1e-6);
  CHECK(tr.theta_star == doctest::Approx(0.0).epsilon(1e-6));

  // Rotating the reference shifts the alignment angle and nothing else.
  RelativeEquilibrium eq2 = eq;
  eq2.family.rings[0].phi = 0.4;
  TrackReport tr2 = compare_to_pvf(snaps, times, eq2);
  CHECK(std::abs(tr2.theta_star - (2.0 * PI - 0.4)) <= 1e-6);
  REQUIRE(tr2.deviations.size() == tr.deviations.size());
  for (size_t s = 0; s < tr.deviations.size(); ++s)
    CHECK(std::abs(tr2.deviations[s] - tr.deviations[s]) <= 1e-12);

  // Mismatched expectations are refused loudly.
  RelativeEquilibrium wrong;
  wrong.family.k = 2;
  wrong.family.rings = {{0.5, 0.0, 1}};
  wrong.omega0 = -76.0 / 15.0;
  CHECK_THROWS_AS(compare_to_pvf(snaps, times, wrong), SolverFailure);
  std::vector<double> bad_times(times.begin(), times.end() - 1);
  CHECK_THROWS_AS(compare_to_pvf(snaps, bad_times, eq), PreconditionError);
}
