#include "lab/rings.hpp"

#include <functional>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace lab {

int RingFamily::n() const {
  int s = 0;
  for (const Ring& r : rings) s += r.degree;
  return k * s;
}

int RingFamily::m() const { return n() / k; }

int RingFamily::ansatz_k() const { return n() == 0 ? 0 : k; }

int RingFamily::ansatz_m() const { return n() == 0 ? k : n() / k; }

void RingFamily::validate() const {
  if (k < 1) throw PreconditionError("ring family: k must be >= 1");
  if (rings.empty()) throw PreconditionError("ring family: no rings");
  for (size_t r = 0; r < rings.size(); ++r) {
    if (!(rings[r].rho > 0.0 && rings[r].rho < 1.0))
      throw PreconditionError(
          fmt::format("ring family: radius {} outside (0,1)", rings[r].rho));
    if (rings[r].degree != 1 && rings[r].degree != -1)
      throw PreconditionError("ring family: ring degree must be +-1");
    if (r > 0 && rings[r].rho < rings[r - 1].rho)
      throw PreconditionError("ring family: radii must be non-decreasing");
  }
}

VortexConfig RingFamily::expand() const {
  validate();
  VortexConfig c;
  for (const Ring& ring : rings) {
    for (int beta = 0; beta < k; ++beta) {
      c.positions.push_back(ring.rho *
                            rot(ring.phi + 2.0 * PI * beta / k));
      c.degrees.push_back(ring.degree);
    }
  }
  return c;
}

double RelativeEquilibrium::period() const {
  if (omega0 == 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * PI * family.ansatz_m() / omega0;
}

double single_ring_omega(int n, double rho) {
  if (n < 1) throw PreconditionError("single_ring_omega: n must be >= 1");
  if (!(rho > 0.0 && rho < 1.0))
    throw PreconditionError("single_ring_omega: rho must lie in (0,1)");
  const double r2n = std::pow(rho, 2 * n);
  return -(2.0 / (rho * rho)) *
         (0.5 * (n - 1) + n * r2n / (1.0 - r2n));
}

double single_ring_radius_from_momentum(int n, double p) {
  if (n < 1) throw PreconditionError("single ring: n must be >= 1");
  if (!(p > -0.5 * n && p < 0.0))
    throw PreconditionError(
        fmt::format("single ring: impulse {} not attainable (needs (-n/2, 0))",
                    p));
  return std::sqrt(-2.0 * p / n);
}

double staggered_critical_radius(int k) {
  if (k < 1) throw PreconditionError("staggered radius: k must be >= 1");
  const double kk = static_cast<double>(k);
  return std::pow(std::sqrt(4.0 * kk * kk + 1.0) - 2.0 * kk, 1.0 / (2.0 * kk));
}

namespace {

/// expand() without the ordering check; used inside Newton iterations where
/// ring radii may transiently swap order.
VortexConfig expand_unchecked(const RingFamily& f) {
  VortexConfig c;
  for (const Ring& ring : f.rings) {
    for (int beta = 0; beta < f.k; ++beta) {
      c.positions.push_back(ring.rho * rot(ring.phi + 2.0 * PI * beta / f.k));
      c.degrees.push_back(ring.degree);
    }
  }
  return c;
}

/// q_r = zeta_r * (A+B)(zeta_r) for each ring's generating vortex.
std::vector<cplx> ring_q(const RingFamily& f) {
  const VortexConfig c = expand_unchecked(f);
  std::vector<cplx> q(f.rings.size());
  for (size_t r = 0; r < f.rings.size(); ++r) {
    const int gen = static_cast<int>(r) * f.k;
    q[r] = c.positions[gen] * induction_at(c, gen);
  }
  return q;
}

/// Residuals with the rotation speed given directly (omega_tilde =
/// omega0 / ansatz_m).
std::vector<double> reduced_residual(const RingFamily& f, double omega_tilde) {
  const std::vector<cplx> q = ring_q(f);
  std::vector<double> res(f.rings.size());
  for (size_t r = 0; r < f.rings.size(); ++r)
    res[r] = f.rings[r].degree *
             (2.0 * q[r].real() + omega_tilde * sqr(f.rings[r].rho));

  // Reality condition: automatic when every pair of rings is aligned or
  // half-staggered; otherwise report the imaginary parts too.
  bool aligned = true;
  for (size_t r = 0; r < f.rings.size() && aligned; ++r)
    for (size_t s = r + 1; s < f.rings.size() && aligned; ++s)
      if (std::abs(std::sin(f.k * (f.rings[s].phi - f.rings[r].phi))) > 1e-12)
        aligned = false;
  if (!aligned)
    for (size_t r = 0; r < f.rings.size(); ++r)
      res.push_back(2.0 * q[r].imag());
  return res;
}

using VecFn = std::function<std::vector<double>(const std::vector<double>&)>;
using ClampFn = std::function<void(std::vector<double>&)>;

double norm_inf(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

/// Damped Newton with central finite-difference Jacobian.
std::vector<double> newton_solve(const VecFn& F, std::vector<double> x,
                                 const ClampFn& clamp, double tol = 1e-12,
                                 int max_iter = 120) {
  const int n = static_cast<int>(x.size());
  clamp(x);
  std::vector<double> fx = F(x);
  if (static_cast<int>(fx.size()) != n)
    throw PreconditionError("newton_solve: residual/unknown size mismatch");
  for (int iter = 0; iter < max_iter; ++iter) {
    const double fnorm = norm_inf(fx);
    if (fnorm <= tol) return x;

    Eigen::MatrixXd J(n, n);
    const double h = 1e-7;
    for (int j = 0; j < n; ++j) {
      std::vector<double> xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const std::vector<double> fp = F(xp), fm = F(xm);
      for (int i = 0; i < n; ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * h);
    }
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) rhs(i) = -fx[i];
    const Eigen::VectorXd s = J.fullPivLu().solve(rhs);

    double alpha = 1.0;
    bool improved = false;
    while (alpha >= 1e-4) {
      std::vector<double> xt = x;
      for (int i = 0; i < n; ++i) xt[i] += alpha * s(i);
      clamp(xt);
      std::vector<double> ft = F(xt);
      if (norm_inf(ft) < fnorm * (1.0 - 1e-4 * alpha) || norm_inf(ft) <= tol) {
        x = std::move(xt);
        fx = std::move(ft);
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved)
      throw SolverFailure(
          fmt::format("newton_solve: stalled at |F|={:.3e}", fnorm));
  }
  throw SolverFailure(fmt::format(
      "newton_solve: no convergence after iterations (|F|={:.3e})",
      norm_inf(fx)));
}

}  // namespace

std::vector<double> ring_residual(const RingFamily& f, double omega0) {
  f.validate();
  return reduced_residual(f, omega0 / f.ansatz_m());
}

RelativeEquilibrium solve_equilibrium(const RingFamily& tmpl,
                                      EquilibriumMode mode, double target) {
  RingFamily fam = tmpl;
  const int k = fam.k;
  if (k < 1) throw PreconditionError("solve_equilibrium: k must be >= 1");

  switch (mode) {
    case EquilibriumMode::single_ring_from_momentum: {
      // One ring of k positive vortices; J0 = -(k/2) rho^2 = target.
      const double rho = single_ring_radius_from_momentum(k, target);
      fam.rings = {{rho, 0.0, +1}};
      const double omega_tilde = single_ring_omega(k, rho);
      return {fam, fam.ansatz_m() * omega_tilde};
    }

    case EquilibriumMode::aligned_multiring: {
      const int M = static_cast<int>(fam.rings.size());
      if (M < 1) throw PreconditionError("solve_equilibrium: no rings");
      for (Ring& r : fam.rings) {
        r.phi = 0.0;
        r.degree = +1;
      }
      if (!(target > -0.5 * k * M && target < 0.0))
        throw PreconditionError(
            fmt::format("solve_equilibrium: impulse {} not attainable", target));
      // Unknowns: M radii followed by omega_tilde.
      auto unpack = [&](const std::vector<double>& x) {
        RingFamily f = fam;
        for (int r = 0; r < M; ++r) f.rings[r].rho = x[r];
        return f;
      };
      VecFn F = [&](const std::vector<double>& x) {
        const RingFamily f = unpack(x);
        std::vector<double> res = reduced_residual(f, x[M]);
        double j0 = 0.0;
        for (int r = 0; r < M; ++r) j0 += sqr(x[r]);
        j0 *= -0.5 * k;
        res.push_back(j0 - target);
        return res;
      };
      ClampFn clamp = [&](std::vector<double>& x) {
        for (int r = 0; r < M; ++r) x[r] = std::clamp(x[r], 1e-3, 0.9995);
        std::sort(x.begin(), x.begin() + M);
        for (int r = 1; r < M; ++r)
          if (x[r] - x[r - 1] < 1e-4) x[r] = x[r - 1] + 1e-4;
      };
      std::vector<double> x(M + 1);
      for (int r = 0; r < M; ++r)
        x[r] = 0.2 + 0.6 * (r + 1.0) / (M + 1.0);
      double w0 = 0.0;
      for (int r = 0; r < M; ++r) w0 += single_ring_omega(k, x[r]);
      x[M] = w0 / M;
      x = newton_solve(F, x, clamp);
      fam = unpack(x);
      return {fam, fam.ansatz_m() * x[M]};
    }

    case EquilibriumMode::staggered_pair: {
      const double r = target;
      if (!(r > 0.0 && r < 1.0))
        throw PreconditionError("solve_equilibrium: staggered radius target "
                                "must lie in (0,1)");
      const double r0 = staggered_critical_radius(k);
      if (std::abs(r - r0) <= 1e-9) {
        // Equal radii: the steady configuration, known in closed form.
        fam.rings = {{r0, 0.0, +1}, {r0, PI / k, -1}};
        return {fam, 0.0};
      }
      // The (+1 inner, -1 outer) family is a single curve parameterized by
      // the geometric-mean radius sqrt(rho1*rho2) in (0, r0).  Reflecting
      // the disc (z -> conj z) maps it onto the (-1 inner, +1 outer) family
      // with omega negated, which is how separators r > r0 are reached:
      // solve the mirror problem pinned at r' = r0^2/r and flip.
      const bool mirrored = (r > r0);
      const double r_pin = mirrored ? r0 * r0 / r : r;
      fam.rings = {{std::clamp(r_pin - 0.15, 0.02, 0.98), 0.0, +1},
                   {std::clamp(r_pin + 0.15, 0.02, 0.98), PI / k, -1}};
      // Unknowns (rho_1, rho_2, omega_tilde); the map stays smooth even if
      // the radii swap order during iteration (the staggered phases keep
      // the vortices distinct), so no reordering inside the residual.
      auto unpack = [&](const std::vector<double>& x) {
        RingFamily f = fam;
        f.rings[0].rho = x[0];
        f.rings[1].rho = x[1];
        return f;
      };
      VecFn F = [&](const std::vector<double>& x) {
        const RingFamily f = unpack(x);
        std::vector<double> res = reduced_residual(f, x[2]);
        res.push_back(x[0] * x[1] - r_pin * r_pin);
        return res;
      };
      ClampFn clamp = [&](std::vector<double>& x) {
        x[0] = std::clamp(x[0], 1e-3, 0.9995);
        x[1] = std::clamp(x[1], 1e-3, 0.9995);
      };
      // Start omega_tilde at its least-squares value for the initial radii
      // so Newton begins with a consistent rotation rate.
      std::vector<double> x = {fam.rings[0].rho, fam.rings[1].rho, 0.0};
      {
        const std::vector<cplx> q = ring_q(unpack(x));
        double num = 0.0, den = 0.0;
        for (int rr = 0; rr < 2; ++rr) {
          num += 2.0 * q[rr].real() * sqr(x[rr]);
          den += sqr(sqr(x[rr]));
        }
        x[2] = -num / den;
      }
      x = newton_solve(F, x, clamp);
      fam = unpack(x);
      if (fam.rings[0].rho > fam.rings[1].rho)
        std::swap(fam.rings[0], fam.rings[1]);
      double omega_tilde = x[2];
      if (mirrored) {
        fam.rings[0].degree = -1;
        fam.rings[1].degree = +1;
        omega_tilde = -omega_tilde;
      }
      if (!(fam.rings[0].rho < r && r < fam.rings[1].rho))
        throw SolverFailure(fmt::format(
            "solve_equilibrium: no staggered pair separated by r={} (found "
            "radii {} and {})",
            r, fam.rings[0].rho, fam.rings[1].rho));
      return {fam, fam.ansatz_m() * omega_tilde};
    }
  }
  throw PreconditionError("solve_equilibrium: unknown mode");
}

double modified_energy_H(const VortexConfig& c, double omega0, int m) {
  if (m == 0) throw PreconditionError("modified_energy_H: m must be nonzero");
  return renormalized_energy(c) / PI - (omega0 / m) * momentum_J0(c);
}

std::vector<cplx> grad_H(const VortexConfig& c, double omega0, int m) {
  if (m == 0) throw PreconditionError("grad_H: m must be nonzero");
  std::vector<cplx> g = grad_W(c);
  for (int j = 0; j < c.size(); ++j)
    g[j] = g[j] / PI +
           (omega0 / m) * static_cast<double>(c.degrees[j]) * c.positions[j];
  return g;
}

namespace {

double grad_norm(const std::vector<cplx>& g) {
  double s = 0.0;
  for (const cplx& z : g) s += std::norm(z);
  return std::sqrt(s);
}

}  // namespace

HessianReport hessian_classify(const VortexConfig& c, double omega0, int m,
                               int k) {
  c.validate();
  if (k < 1) throw PreconditionError("hessian_classify: k must be >= 1");
  if (c.size() % k != 0)
    throw PreconditionError("hessian_classify: vortex count not divisible by k");
  {
    const double gn = grad_norm(grad_H(c, omega0, m));
    if (gn > 1e-6)
      throw PreconditionError(fmt::format(
          "hessian_classify: input is not a critical point (|grad H| = {:.3e})",
          gn));
  }

  // Identify one generating vortex per symmetry orbit.
  const int N = c.size();
  const int NR = N / k;
  std::vector<bool> visited(N, false);
  std::vector<int> reps;
  for (int j = 0; j < N; ++j) {
    if (visited[j]) continue;
    visited[j] = true;
    for (int beta = 1; beta < k; ++beta) {
      const cplx target = rot(2.0 * PI * beta / k) * c.positions[j];
      int found = -1;
      for (int l = 0; l < N; ++l)
        if (!visited[l] && c.degrees[l] == c.degrees[j] &&
            std::abs(c.positions[l] - target) <= 1e-9) {
          found = l;
          break;
        }
      if (found < 0)
        throw PreconditionError(
            "hessian_classify: configuration is not k-fold symmetric");
      visited[found] = true;
    }
    reps.push_back(j);
  }
  if (static_cast<int>(reps.size()) != NR)
    throw PreconditionError("hessian_classify: orbit decomposition failed");

  std::vector<int> rep_degree(NR);
  for (int r = 0; r < NR; ++r) rep_degree[r] = c.degrees[reps[r]];

  // H as a function of the generating coordinates only; its gradient uses
  // the chain rule through the k rotated copies.
  auto gen_grad = [&](const std::vector<double>& x) {
    VortexConfig full;
    full.positions.resize(static_cast<size_t>(NR) * k);
    full.degrees.resize(static_cast<size_t>(NR) * k);
    for (int r = 0; r < NR; ++r) {
      const cplx xr{x[2 * r], x[2 * r + 1]};
      for (int beta = 0; beta < k; ++beta) {
        full.positions[static_cast<size_t>(r) * k + beta] =
            rot(2.0 * PI * beta / k) * xr;
        full.degrees[static_cast<size_t>(r) * k + beta] = rep_degree[r];
      }
    }
    const std::vector<cplx> g = grad_H(full, omega0, m);
    std::vector<double> out(2 * NR);
    for (int r = 0; r < NR; ++r) {
      cplx G = 0.0;
      for (int beta = 0; beta < k; ++beta)
        G += rot(-2.0 * PI * beta / k) *
             g[static_cast<size_t>(r) * k + beta];
      out[2 * r] = G.real();
      out[2 * r + 1] = G.imag();
    }
    return out;
  };

  std::vector<double> x0(2 * NR);
  for (int r = 0; r < NR; ++r) {
    x0[2 * r] = c.positions[reps[r]].real();
    x0[2 * r + 1] = c.positions[reps[r]].imag();
  }

  const int dim = 2 * NR;
  const double h = 1e-5;
  Eigen::MatrixXd Hm(dim, dim);
  for (int j = 0; j < dim; ++j) {
    std::vector<double> xp = x0, xm = x0;
    xp[j] += h;
    xm[j] -= h;
    const std::vector<double> gp = gen_grad(xp), gm = gen_grad(xm);
    for (int i = 0; i < dim; ++i) Hm(i, j) = (gp[i] - gm[i]) / (2.0 * h);
  }
  const Eigen::MatrixXd Hs = 0.5 * (Hm + Hm.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs);
  HessianReport rep;
  rep.eigenvalues.assign(es.eigenvalues().data(),
                         es.eigenvalues().data() + dim);

  double maxabs = 0.0;
  for (double ev : rep.eigenvalues) maxabs = std::max(maxabs, std::abs(ev));
  const double thr = std::max(1e-6 * maxabs, 1e-12);
  int negatives = 0;
  for (double ev : rep.eigenvalues) {
    if (std::abs(ev) <= thr)
      ++rep.null_count;
    else if (ev < 0.0)
      ++negatives;
  }
  rep.S = rep.null_count + negatives;

  // Overlap of the numerical null space with the rigid-rotation direction.
  Eigen::VectorXd t(dim);
  for (int r = 0; r < NR; ++r) {
    const cplx tz = cplx(0.0, 1.0) * c.positions[reps[r]];
    t(2 * r) = tz.real();
    t(2 * r + 1) = tz.imag();
  }
  t.normalize();
  double proj2 = 0.0;
  for (int i = 0; i < dim; ++i)
    if (std::abs(rep.eigenvalues[i]) <= thr)
      proj2 += sqr(es.eigenvectors().col(i).dot(t));
  rep.tangent_alignment = std::sqrt(proj2);
  return rep;
}

std::vector<CatalogEntry> standard_catalog() {
  std::vector<CatalogEntry> cat;
  auto add = [&](std::string name, const RelativeEquilibrium& eq) {
    const VortexConfig c = eq.family.expand();
    HessianReport h =
        hessian_classify(c, eq.omega0, eq.family.ansatz_m(), eq.family.k);
    cat.push_back({std::move(name), eq, std::move(h)});
  };

  // Single rings of n positive vortices at radius 1/2.
  for (int n = 1; n <= 4; ++n) {
    RingFamily f;
    f.k = n;
    f.rings = {{0.5, 0.0, +1}};
    add(fmt::format("ring_n{}", n),
        {f, static_cast<double>(f.ansatz_m()) * single_ring_omega(n, 0.5)});
  }

  // Steady equal-radius staggered pairs at the critical radius.
  for (int k = 1; k <= 4; ++k) {
    const double r0 = staggered_critical_radius(k);
    RingFamily f;
    f.k = k;
    f.rings = {{r0, 0.0, +1}, {r0, PI / k, -1}};
    add(fmt::format("staggered_steady_k{}", k), {f, 0.0});
  }

  // Rotating staggered pairs (inner/outer radii pinned by geometric mean).
  {
    RingFamily tmpl;
    tmpl.rings.resize(2);
    tmpl.k = 1;
    add("staggered_k1_r030",
        solve_equilibrium(tmpl, EquilibriumMode::staggered_pair, 0.30));
    tmpl.k = 2;
    add("staggered_k2_r030",
        solve_equilibrium(tmpl, EquilibriumMode::staggered_pair, 0.30));
    add("staggered_k2_r045",
        solve_equilibrium(tmpl, EquilibriumMode::staggered_pair, 0.45));
    add("staggered_k2_r062_mirror",
        solve_equilibrium(tmpl, EquilibriumMode::staggered_pair, 0.62));
    tmpl.k = 3;
    add("staggered_k3_r035",
        solve_equilibrium(tmpl, EquilibriumMode::staggered_pair, 0.35));
  }

  // Aligned two-ring configuration at prescribed impulse.
  {
    RingFamily tmpl;
    tmpl.k = 2;
    tmpl.rings.resize(2);
    add("aligned_2ring_k2",
        solve_equilibrium(tmpl, EquilibriumMode::aligned_multiring, -0.5));
  }
  return cat;
}

}  // namespace lab
