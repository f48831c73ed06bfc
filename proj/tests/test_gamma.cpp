#include <doctest/doctest.h>

#include <cmath>

#include "lab/gamma.hpp"
#include "lab/util.hpp"

using namespace lab;

namespace {

// Radial grid with enough points inside the smallest core (t = 0.0125) to
// keep the renormalized energy monotone along the thickness sweep.
PolarGrid core_grid(int Nr, double h_min) {
  return make_clustered_grid(Nr, {0}, {0.0}, 0.04, h_min);
}

const std::vector<double> kThicknesses = {0.1, 0.05, 0.025, 0.0125};

}  // namespace

TEST_CASE("core profile solves its equation and stays monotone") {
  PolarGrid g = core_grid(640, 0.00104);
  CoreProfile cp = vortex_core_profile(0.05, g);
  CHECK(cp.newton_steps <= 10);
  CHECK(cp.residual <= 1e-11 * (1.0 + 1.0 / (0.05 * 0.05)));
  REQUIRE(cp.f.back() == 1.0);
  double lo = 2.0, hi = -1.0;
  bool monotone = true;
  for (size_t i = 0; i < cp.f.size(); ++i) {
    lo = std::min(lo, cp.f[i]);
    hi = std::max(hi, cp.f[i]);
    if (i > 0 && cp.f[i] < cp.f[i - 1] - 1e-12) monotone = false;
  }
  CHECK(monotone);
  CHECK(lo >= 0.0);
  CHECK(hi <= 1.0 + 1e-12);
}

TEST_CASE("renormalized core energy decreases toward its limit") {
  PolarGrid g = core_grid(640, 0.00104);
  std::vector<double> vals;
  for (double t : kThicknesses)
    vals.push_back(vortex_core_profile(t, g).energy + PI * std::log(t));
  for (size_t i = 1; i < vals.size(); ++i) REQUIRE(vals[i] <= vals[i - 1]);
  // Reference values from an independent fine-grid shooting solve of the
  // same cell problem.
  CHECK(std::abs(vals.front() - 1.205804993076) < 2e-4);
  CHECK(std::abs(vals.back() - 1.196700696519) < 2e-3);
}

TEST_CASE("gamma estimate sits in the established window and is grid-stable") {
  PolarGrid g1 = core_grid(640, 0.00104);
  PolarGrid g2 = core_grid(960, 0.00065);
  const double gamma1 = estimate_gamma(kThicknesses, g1);
  const double gamma2 = estimate_gamma(kThicknesses, g2);
  CHECK(gamma1 > 1.19);
  CHECK(gamma1 < 1.21);
  CHECK(std::abs(gamma1 - 1.196572660892) < 2e-3);
  CHECK(std::abs(gamma1 - gamma2) < 1e-3);
}

TEST_CASE("under-resolved core is reported rather than silently accepted") {
  PolarGrid coarse = make_clustered_grid(320, {0}, {0.0}, 0.05, 0.0015625);
  CHECK_THROWS_AS(estimate_gamma(kThicknesses, coarse), SolverFailure);
}

TEST_CASE("gamma estimate validates its inputs") {
  PolarGrid g = core_grid(640, 0.00104);
  CHECK_THROWS_AS(vortex_core_profile(1.5, g), PreconditionError);
  CHECK_THROWS_AS(vortex_core_profile(-0.1, g), PreconditionError);
  CHECK_THROWS_AS(estimate_gamma({0.1}, g), PreconditionError);
  CHECK_THROWS_AS(estimate_gamma({0.05, 0.1}, g), PreconditionError);
  CHECK_THROWS_AS(estimate_gamma({0.1, 0.1}, g), PreconditionError);
}
