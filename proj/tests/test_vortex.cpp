// Point-vortex core: energies, gradients, velocities, conservation.
// Expected numbers were computed with an independent high-precision
// implementation (tools/oracles.py) and are frozen here as literals.
#include <algorithm>
#include <complex>
#include <fstream>

#include "doctest/doctest.h"
#include "lab/rings.hpp"
#include "lab/vortex.hpp"

using namespace lab;

namespace {

VortexConfig frozen_three() {
  return {{{0.31, 0.2}, {-0.4, 0.12}, {0.05, -0.55}}, {+1, -1, +1}};
}

}  // namespace

TEST_CASE("energy of one and two vortices matches the reference values") {
  CHECK(renormalized_energy({{{0.5, 0.0}}, {+1}}) ==
        doctest::Approx(0.90377988538400160).epsilon(1e-14));
  CHECK(renormalized_energy({{{0.5, 0.0}, {-0.5, 0.0}}, {+1, +1}}) ==
        doctest::Approx(0.40550748775868636).epsilon(1e-14));
}

TEST_CASE("energy, impulse and gradient at a frozen mixed-degree config") {
  const VortexConfig c = frozen_three();
  CHECK(renormalized_energy(c) ==
        doctest::Approx(4.8332857816708769).epsilon(1e-13));
  CHECK(momentum_J0(c) == doctest::Approx(-0.13335).epsilon(1e-14));

  const auto g = grad_W(c);
  const cplx expected[3] = {{-1.787438566092, 4.391865136906},
                            {7.281718279489, -2.499462324461},
                            {-2.836957527379, -5.692360036936}};
  for (int j = 0; j < 3; ++j) {
    CHECK(g[j].real() == doctest::Approx(expected[j].real()).epsilon(1e-10));
    CHECK(g[j].imag() == doctest::Approx(expected[j].imag()).epsilon(1e-10));
  }
}

TEST_CASE("analytic gradient agrees with central differences") {
  const VortexConfig c = frozen_three();
  const auto g = grad_W(c);
  const auto gfd = grad_W_fd(c, 1e-6);
  for (int j = 0; j < 3; ++j)
    CHECK(std::abs(g[j] - gfd[j]) < 1e-7);
}

TEST_CASE("velocities at the frozen config match the reference values") {
  const auto v = pvf_rhs(frozen_three());
  const cplx expected[3] = {{-1.39797409186311, -0.568959366533174},
                            {-0.795603568019976, -2.31784291676652},
                            {1.81193447547429, -0.903031627648171}};
  for (int j = 0; j < 3; ++j) CHECK(std::abs(v[j] - expected[j]) < 1e-12);
}

TEST_CASE("single vortex at 0.5 drifts tangentially with speed 4/3") {
  const auto v = pvf_rhs({{{0.5, 0.0}}, {+1}});
  CHECK(std::abs(v[0] - cplx(0.0, 4.0 / 3.0)) < 1e-14);
}

TEST_CASE("polygon velocity equals rigid rotation at the ring rate") {
  RingFamily f;
  f.k = 3;
  f.rings = {{0.5, 0.0, +1}};
  const VortexConfig c = f.expand();
  const auto v = pvf_rhs(c);
  const double omega = single_ring_omega(3, 0.5);
  CHECK(omega == doctest::Approx(-8.3809523809523810).epsilon(1e-14));
  // Rotation parameter convention: the configuration moves as
  // b(t) = exp(-i*omega*t) * b(0), so velocities are -i*omega*b.
  for (int j = 0; j < 3; ++j) {
    const cplx expect = -cplx(0.0, 1.0) * omega * c.positions[j];
    CHECK(std::abs(v[j] - expect) < 1e-12);
  }
}

TEST_CASE("flow is Hamiltonian: d_j * i * v_j = -(1/pi) grad W") {
  const VortexConfig c = frozen_three();
  const auto v = pvf_rhs(c);
  const auto g = grad_W(c);
  for (int j = 0; j < 3; ++j) {
    const cplx lhs =
        static_cast<double>(c.degrees[j]) * cplx(0.0, 1.0) * v[j];
    const cplx rhs = -g[j] / PI;
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("energy and impulse are exactly permutation invariant") {
  VortexConfig c = frozen_three();
  const double W = renormalized_energy(c);
  const double J = momentum_J0(c);
  std::vector<int> perm = {2, 0, 1};
  VortexConfig p;
  for (int idx : perm) {
    p.positions.push_back(c.positions[idx]);
    p.degrees.push_back(c.degrees[idx]);
  }
  CHECK(renormalized_energy(p) == W);  // bitwise
  CHECK(momentum_J0(p) == J);          // bitwise
}

TEST_CASE("energy is invariant under global rotation") {
  VortexConfig c = frozen_three();
  const double W = renormalized_energy(c);
  VortexConfig r = c;
  for (auto& b : r.positions) b *= rot(0.7345);
  CHECK(renormalized_energy(r) == doctest::Approx(W).epsilon(1e-13));
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(renormalized_energy({{{1.2, 0.0}}, {+1}}),
                  PreconditionError);
  CHECK_THROWS_AS(renormalized_energy({{{0.3, 0.0}, {0.3, 0.0}}, {+1, +1}}),
                  PreconditionError);
  CHECK_THROWS_AS(renormalized_energy({{{0.3, 0.0}}, {+2}}), PreconditionError);
  CHECK_THROWS_AS(renormalized_energy({{{0.3, 0.0}, {0.1, 0.1}}, {+1}}),
                  PreconditionError);
}

TEST_CASE("RK4 integration conserves W and J0 to 1e-8 on a long run") {
  // Mildly asymmetric three-vortex configuration; quasi-periodic motion.
  VortexConfig c{{{0.42, 0.0}, {-0.2, 0.33}, {-0.15, -0.38}}, {+1, +1, +1}};
  const Trajectory tr = integrate_pvf(c, 2.0, 5e-4, {1e-6, 1e-6, 50});
  REQUIRE(!tr.aborted);
  CHECK(tr.max_rel_drift_W < 1e-8);
  CHECK(tr.max_rel_drift_J0 < 1e-8);
}

TEST_CASE("integration aborts gracefully on near-collision") {
  // Opposite-degree pair set up to translate towards mutual approach to the
  // boundary; use a crude dipole that self-propels.
  VortexConfig c{{{0.0, 0.01}, {0.0, -0.01}}, {+1, -1}};
  const Trajectory tr = integrate_pvf(c, 5.0, 1e-4, {1e-2, 5e-2, 100});
  CHECK(tr.aborted);
  CHECK(!tr.abort_reason.empty());
}

TEST_CASE("trajectory CSV has the documented header and width") {
  VortexConfig c{{{0.42, 0.0}, {-0.2, 0.33}}, {+1, +1}};
  const Trajectory tr = integrate_pvf(c, 0.01, 1e-3);
  const std::string path = "test_traj.csv";
  write_trajectory_csv(tr, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,re_b1,im_b1,re_b2,im_b2,W,J0");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == static_cast<int>(tr.times.size()));
}
