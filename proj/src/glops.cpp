#include "lab/glops.hpp"

#include <cmath>

#include <fmt/format.h>

namespace lab {

namespace {

// Derivative of the quadratic through (x0,f0),(x1,f1),(x2,f2) at x.
struct Deriv3 {
  double a0, a1, a2;
  Deriv3(double x0, double x1, double x2, double x) {
    a0 = (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
    a1 = (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
    a2 = (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
  }
};

// d/dr of a mode profile on the (nonuniform) radial nodes, second order.
std::vector<cplx> radial_derivative(const PolarGrid& g,
                                    const std::vector<cplx>& c) {
  const int Nr = g.Nr;
  std::vector<cplx> d(Nr);
  for (int i = 0; i < Nr; ++i) {
    const int i0 = std::clamp(i - 1, 0, Nr - 3);
    const Deriv3 st(g.r[i0], g.r[i0 + 1], g.r[i0 + 2], g.r[i]);
    d[i] = st.a0 * c[i0] + st.a1 * c[i0 + 1] + st.a2 * c[i0 + 2];
  }
  return d;
}

}  // namespace

void check_ansatz_consistency(const PolarField& f, const SolverParams& p) {
  if (p.m == 0) throw PreconditionError("solver params: m must be nonzero");
  if (p.k > 0 && f.n_bc != p.k * p.m)
    throw PreconditionError(
        fmt::format("solver params: boundary winding {} != k*m = {}", f.n_bc,
                    p.k * p.m));
}

double cell_volume(const PolarGrid& g, int i) {
  const double lo = g.face[i];
  const double hi = (i + 1 < g.Nr) ? g.face[i + 1] : 1.0;
  return 0.5 * (hi * hi - lo * lo);
}

double energy_E(const PolarField& f) {
  f.validate();
  const PolarGrid& g = f.grid;
  double kin = 0.0;
  for (int a = 0; a < f.n_modes(); ++a) {
    const int j = g.mode_set[a];
    const std::vector<cplx> d = radial_derivative(g, f.c[a]);
    for (int i = 0; i < g.Nr; ++i)
      kin += g.w[i] *
             (std::norm(d[i]) +
              double(j) * j * std::norm(f.c[a][i]) / (g.r[i] * g.r[i]));
  }
  double pot = 0.0;
  if (std::isfinite(f.epsilon)) {
    const ThetaTransform tf(g, f.k_sym);
    std::vector<cplx> U(size_t(g.Nr) * tf.Ntheta());
    tf.synthesize(f, U.data());
    const double dtheta = 2.0 * PI / tf.Ntheta();
    const double eps2 = f.epsilon * f.epsilon;
    for (int i = 0; i < g.Nr; ++i) {
      double row = 0.0;
      for (int q = 0; q < tf.Ntheta(); ++q)
        row += sqr(1.0 - std::norm(U[size_t(i) * tf.Ntheta() + q]));
      pot += g.w[i] * dtheta * row / (4.0 * eps2);
    }
  }
  return PI * kin + pot;
}

double momentum_J(const PolarField& f, int k, int m) {
  f.validate();
  if (m == 0) throw PreconditionError("momentum: m must be nonzero");
  const PolarGrid& g = f.grid;
  double s = 0.0;
  for (int a = 0; a < f.n_modes(); ++a) {
    const int j = g.mode_set[a];
    const double weight = k - double(j) / m;
    double radial = 0.0;
    for (int i = 0; i < g.Nr; ++i) radial += g.w[i] * std::norm(f.c[a][i]);
    s += weight * radial;
  }
  return -PI * s;
}

double momentum_J_quadrature(const PolarField& f, int k, int m) {
  f.validate();
  if (m == 0) throw PreconditionError("momentum: m must be nonzero");
  const PolarGrid& g = f.grid;
  const ThetaTransform tf(g, f.k_sym);
  std::vector<cplx> U(size_t(g.Nr) * tf.Ntheta());
  std::vector<cplx> Ut(U.size());
  tf.synthesize(f, U.data());
  PolarField dth = f;  // mode-space theta derivative: c_j -> i j c_j
  for (int a = 0; a < f.n_modes(); ++a) {
    const cplx ij(0.0, double(g.mode_set[a]));
    for (int i = 0; i < g.Nr; ++i) dth.c[a][i] *= ij;
  }
  tf.synthesize(dth, Ut.data());
  const double dtheta = 2.0 * PI / tf.Ntheta();
  double s = 0.0;
  for (int i = 0; i < g.Nr; ++i) {
    double row = 0.0;
    for (int q = 0; q < tf.Ntheta(); ++q) {
      const size_t idx = size_t(i) * tf.Ntheta() + q;
      row += -0.5 * k * std::norm(U[idx]) +
             0.5 / m * std::imag(std::conj(U[idx]) * Ut[idx]);
    }
    s += g.w[i] * dtheta * row;
  }
  return s;
}

double action_value(const PolarField& f, const SolverParams& p) {
  return energy_E(f) - p.omega * momentum_J(f, p.k, p.m);
}

double max_modulus(const PolarField& f) {
  f.validate();
  const ThetaTransform tf(f.grid, f.k_sym);
  std::vector<cplx> U(size_t(f.grid.Nr) * tf.Ntheta());
  tf.synthesize(f, U.data());
  double best = 0.0;
  for (const cplx& u : U) best = std::max(best, std::abs(u));
  return best;
}

void apply_mode_laplacian(const PolarGrid& g, int j,
                          const std::vector<cplx>& c,
                          std::vector<cplx>* out) {
  const int Nr = g.Nr;
  if (int(c.size()) != Nr)
    throw PreconditionError("laplacian: profile size mismatch");
  out->assign(Nr, cplx(0.0, 0.0));
  for (int i = 0; i < Nr - 1; ++i) {
    cplx flux = g.kappa[i + 1] * (c[i + 1] - c[i]);
    if (i > 0) flux -= g.kappa[i] * (c[i] - c[i - 1]);
    // Centrifugal coefficient: pointwise j^2/r^2 away from the center.  On
    // the innermost cell the cell average of j^2 c / r^2 must reflect the
    // regular behaviour c ~ r^|j|; for |j| = 1 (c linear through the
    // origin) that average is 2 c_0 / (r_0 s_1) with s_1 the outer face,
    // while for |j| >= 2 the pointwise value is already the c ~ r^2 cell
    // average.  Without this the first node carries an O(1/h) error and
    // mode-1 residuals stop converging.
    double cfg = double(j) * j / (g.r[i] * g.r[i]);
    if (i == 0 && (j == 1 || j == -1)) cfg = 2.0 / (g.r[0] * g.face[1]);
    (*out)[i] = flux / cell_volume(g, i) - cfg * c[i];
  }
}

double elliptic_residual(const PolarField& f, const SolverParams& p) {
  f.validate();
  check_ansatz_consistency(f, p);
  const PolarGrid& g = f.grid;
  // Cubic term, mode-decomposed through the padded collocation circles.
  PolarField nl = f;
  if (std::isfinite(f.epsilon)) {
    const ThetaTransform tf(g, f.k_sym);
    std::vector<cplx> U(size_t(g.Nr) * tf.Ntheta());
    tf.synthesize(f, U.data());
    const double eps2 = f.epsilon * f.epsilon;
    for (cplx& u : U) u *= (1.0 - std::norm(u)) / eps2;
    tf.analyze(U.data(), &nl);
  } else {
    for (auto& mode : nl.c) mode.assign(g.Nr, cplx(0.0, 0.0));
  }
  double s = 0.0;
  std::vector<cplx> lap;
  for (int a = 0; a < f.n_modes(); ++a) {
    const int j = g.mode_set[a];
    apply_mode_laplacian(g, j, f.c[a], &lap);
    const double rotw = p.omega * (p.k - double(j) / p.m);
    for (int i = 0; i < g.Nr - 1; ++i) {
      const cplx F = lap[i] + nl.c[a][i] - rotw * f.c[a][i];
      s += g.w[i] * std::norm(F);
    }
  }
  return std::sqrt(2.0 * PI * s);
}

PolarField bbh_initial_data(const VortexConfig& config, double epsilon,
                            const PolarGrid& grid, int k_sym) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw PreconditionError("initial data: epsilon must be positive");
  const int N = config.size();
  if (N == 0) {  // vortex-free data: the constant modulus-one field
    PolarField f = make_field(grid, epsilon, k_sym, 0);
    const int a0 = f.mode_index(0);
    for (int i = 0; i < grid.Nr; ++i) f.c[a0][i] = cplx(1.0, 0.0);
    return f;
  }
  config.validate();
  for (int i = 0; i < N; ++i) {
    const double gap = 1.0 - std::abs(config.positions[i]);
    if (gap <= 4.0 * epsilon)
      throw PreconditionError(fmt::format(
          "initial data: vortex {} is {:.3f} from the boundary (< 4 eps)", i,
          gap));
    for (int l = i + 1; l < N; ++l) {
      const double sep =
          std::abs(config.positions[i] - config.positions[l]);
      if (sep <= 4.0 * epsilon)
        throw PreconditionError(fmt::format(
            "initial data: vortices {} and {} are {:.3f} apart (< 4 eps)", i,
            l, sep));
    }
  }
  // The grid must resolve the core scale near every vortex radius.
  for (int i = 0; i < N; ++i) {
    const double rho = std::abs(config.positions[i]);
    double local = 1.0;
    for (int l = 1; l < grid.Nr; ++l)
      if (grid.r[l - 1] <= rho && rho <= grid.r[l])
        local = grid.r[l] - grid.r[l - 1];
    if (local > epsilon / 4.0)
      throw PreconditionError(fmt::format(
          "initial data: grid spacing {:.4f} near radius {:.3f} exceeds "
          "eps/4 = {:.4f}",
          local, rho, epsilon / 4.0));
  }
  if (k_sym > 1) {
    const cplx turn = rot(2.0 * PI / k_sym);
    for (int i = 0; i < N; ++i) {
      const cplx target = config.positions[i] * turn;
      bool found = false;
      for (int l = 0; l < N; ++l)
        if (std::abs(config.positions[l] - target) < 1e-9 &&
            config.degrees[l] == config.degrees[i])
          found = true;
      if (!found)
        throw PreconditionError(
            "initial data: configuration lacks the requested rotational "
            "symmetry");
    }
  }

  PolarField f = make_field(grid, epsilon, k_sym, config.total_degree());
  const ThetaTransform tf(grid, k_sym);
  std::vector<cplx> U(size_t(grid.Nr) * tf.Ntheta());
  const double sector = 2.0 * PI / (double(tf.Ntheta()) * k_sym);
  for (int i = 0; i < grid.Nr; ++i) {
    for (int q = 0; q < tf.Ntheta(); ++q) {
      const cplx z = grid.r[i] * rot(sector * q);
      cplx u(1.0, 0.0);
      for (int v = 0; v < N; ++v) {
        const cplx b = config.positions[v];
        const cplx w = (z - b) * (1.0 - std::conj(b) * z);
        u *= rot(config.degrees[v] * std::arg(w));
        const double rho = std::abs(z - b);
        if (rho < 2.0 * epsilon) u *= std::sin(PI * rho / (4.0 * epsilon));
      }
      U[size_t(i) * tf.Ntheta() + q] = u;
    }
  }
  tf.analyze(U.data(), &f);
  f.enforce_boundary();
  return f;
}

PolarField reconstruct_time_periodic(const PolarField& f,
                                     const SolverParams& p, double t) {
  f.validate();
  check_ansatz_consistency(f, p);
  PolarField out = f;
  for (int a = 0; a < f.n_modes(); ++a) {
    const int j = f.grid.mode_set[a];
    const cplx phase =
        rot((double(j) / p.m - p.k) * p.omega * t);
    for (int i = 0; i < f.grid.Nr; ++i) out.c[a][i] *= phase;
  }
  return out;
}

}  // namespace lab
