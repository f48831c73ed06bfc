#include "lab/flow.hpp"

#include <cmath>

#include <fmt/format.h>

namespace lab {

namespace {

double resolve_dt(const PolarField& f, const SolverParams& p) {
  if (p.dt > 0.0) return p.dt;
  if (!std::isfinite(f.epsilon))
    throw PreconditionError(
        "flow: dt must be given explicitly when epsilon is infinite");
  return 0.3 * f.epsilon * f.epsilon;
}

// Largest step for which every implicit row stays diagonally dominant.  The
// reaction shift 1/eps^2 - omega*(k - j/m) can outgrow the centrifugal floor
// j^2 <= j^2/r^2, and rows where dt * (shift - j^2) reaches 1 would lose
// dominance, so the step is capped below that threshold.
double stable_dt(const PolarField& f, const SolverParams& p, double dt_req) {
  const double inv_eps2 =
      std::isfinite(f.epsilon) ? 1.0 / (f.epsilon * f.epsilon) : 0.0;
  double worst = 0.0;
  for (int j : f.grid.mode_set) {
    const double shift = inv_eps2 - p.omega * (p.k - double(j) / p.m);
    worst = std::max(worst, shift - double(j) * j);
  }
  if (worst <= 0.0) return dt_req;
  return std::min(dt_req, 0.9 / worst);
}

// Centrifugal coefficient matching apply_mode_laplacian (D-cell model at
// the innermost node for |j| = 1).
double centrifugal(const PolarGrid& g, int j, int i) {
  if (i == 0 && (j == 1 || j == -1)) return 2.0 / (g.r[0] * g.face[1]);
  return double(j) * j / (g.r[i] * g.r[i]);
}

double action_impl(const PolarField& f, const SolverParams& p,
                   const ThetaTransform& tf, std::vector<cplx>* phys) {
  const PolarGrid& g = f.grid;
  const int Nr = g.Nr;
  double kin = 0.0, mom = 0.0;
  for (int a = 0; a < f.n_modes(); ++a) {
    const int j = g.mode_set[a];
    const std::vector<cplx>& c = f.c[a];
    double k_a = 0.0, m_a = 0.0;
    for (int i = 1; i < Nr; ++i) k_a += g.kappa[i] * std::norm(c[i] - c[i - 1]);
    for (int i = 0; i < Nr; ++i) {
      const double V = cell_volume(g, i);
      k_a += V * centrifugal(g, j, i) * std::norm(c[i]);
      m_a += V * std::norm(c[i]);
    }
    kin += k_a;
    mom -= (p.k - double(j) / p.m) * m_a;
  }
  double pot = 0.0;
  if (std::isfinite(f.epsilon)) {
    phys->resize(size_t(Nr) * tf.Ntheta());
    tf.synthesize(f, phys->data());
    const double dtheta = 2.0 * PI / tf.Ntheta();
    const double eps2 = f.epsilon * f.epsilon;
    for (int i = 0; i < Nr; ++i) {
      double row = 0.0;
      for (int q = 0; q < tf.Ntheta(); ++q)
        row += sqr(1.0 - std::norm((*phys)[size_t(i) * tf.Ntheta() + q]));
      pot += cell_volume(g, i) * dtheta * row / (4.0 * eps2);
    }
  }
  return PI * kin + pot - p.omega * PI * mom;
}

}  // namespace

StepWorkspace::StepWorkspace(const PolarField& shape)
    : Nr_(shape.grid.Nr),
      n_modes_(shape.n_modes()),
      modes_(shape.grid.mode_set),
      tf_(std::make_unique<ThetaTransform>(shape.grid, shape.k_sym)),
      shell_(shape) {
  shape.validate();
  phys_.resize(size_t(Nr_) * tf_->Ntheta());
  nl_.assign(n_modes_, std::vector<cplx>(Nr_));
  low_.assign(n_modes_, std::vector<double>(Nr_));
  cp_.assign(n_modes_, std::vector<double>(Nr_));
  inv_.assign(n_modes_, std::vector<double>(Nr_));
}

void StepWorkspace::require_shape(const PolarField& f) const {
  if (f.grid.Nr != Nr_ || f.grid.mode_set != modes_)
    throw PreconditionError("flow workspace: field shape changed");
}

void StepWorkspace::refactor(const PolarField& f, const SolverParams& p,
                             double dt) {
  const PolarGrid& g = f.grid;
  const double inv_eps2 =
      std::isfinite(f.epsilon) ? 1.0 / (f.epsilon * f.epsilon) : 0.0;
#pragma omp parallel for if (parallel) schedule(static)
  for (int a = 0; a < n_modes_; ++a) {
    const int j = modes_[a];
    const double beta = inv_eps2 - p.omega * (p.k - double(j) / p.m);
    std::vector<double>& low = low_[a];
    std::vector<double>& cp = cp_[a];
    std::vector<double>& inv = inv_[a];
    double prev_cp = 0.0;
    for (int i = 0; i < Nr_; ++i) {
      double l = 0.0, d = 1.0, u = 0.0;
      if (i < Nr_ - 1) {
        const double V = cell_volume(g, i);
        const double kl = (i > 0) ? g.kappa[i] / V : 0.0;
        const double ku = g.kappa[i + 1] / V;
        const double diagA = -(kl + ku) - centrifugal(g, j, i) + beta;
        l = -dt * kl;
        d = 1.0 - dt * diagA;
        u = -dt * ku;
      }
      // Boundary row stays the identity: exact Dirichlet trace.
      const double denom = d - l * prev_cp;
      inv[i] = 1.0 / denom;
      cp[i] = u * inv[i];
      low[i] = l;
      prev_cp = cp[i];
    }
  }
  cached_dt_ = dt;
  cached_omega_ = p.omega;
  cached_eps_ = f.epsilon;
  cached_k_ = p.k;
  cached_m_ = p.m;
}

void StepWorkspace::cubic_term(const PolarField& f,
                               std::vector<std::vector<cplx>>* nl) {
  if (!std::isfinite(f.epsilon)) {
    for (auto& mode : *nl) std::fill(mode.begin(), mode.end(), cplx(0, 0));
    return;
  }
  tf_->synthesize(f, phys_.data());
  const double inv_eps2 = 1.0 / (f.epsilon * f.epsilon);
  const long total = long(Nr_) * tf_->Ntheta();
#pragma omp parallel for if (parallel) schedule(static)
  for (long s = 0; s < total; ++s)
    phys_[s] *= -std::norm(phys_[s]) * inv_eps2;
  // Collect modes through the persistent shell field of matching shape.
  std::swap(shell_.c, *nl);
  tf_->analyze(phys_.data(), &shell_);
  std::swap(shell_.c, *nl);
}

void gradient_flow_step(PolarField& f, const SolverParams& p,
                        StepWorkspace& ws) {
  check_ansatz_consistency(f, p);
  ws.require_shape(f);
  const double dt = resolve_dt(f, p);
  if (dt != ws.cached_dt_ || p.omega != ws.cached_omega_ ||
      f.epsilon != ws.cached_eps_ || p.k != ws.cached_k_ ||
      p.m != ws.cached_m_)
    ws.refactor(f, p, dt);
  ws.cubic_term(f, &ws.nl_);
  const int Nr = ws.Nr_;
#pragma omp parallel for if (ws.parallel) schedule(static)
  for (int a = 0; a < ws.n_modes_; ++a) {
    std::vector<cplx>& c = f.c[a];
    std::vector<cplx>& rhs = ws.nl_[a];  // consumed in place
    const std::vector<double>& low = ws.low_[a];
    const std::vector<double>& cp = ws.cp_[a];
    const std::vector<double>& inv = ws.inv_[a];
    // rhs_i = c_i + dt X_i on interior rows, boundary row = Dirichlet value.
    for (int i = 0; i < Nr - 1; ++i) rhs[i] = c[i] + dt * rhs[i];
    rhs[Nr - 1] = (ws.modes_[a] == f.n_bc) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
    // Thomas solve (real factors, complex rhs), forward then backward.
    rhs[0] *= inv[0];
    for (int i = 1; i < Nr; ++i) rhs[i] = (rhs[i] - low[i] * rhs[i - 1]) * inv[i];
    c[Nr - 1] = rhs[Nr - 1];
    for (int i = Nr - 2; i >= 0; --i) c[i] = rhs[i] - cp[i] * c[i + 1];
  }
}

void gradient_flow_step(PolarField& f, const SolverParams& p) {
  StepWorkspace ws(f);
  gradient_flow_step(f, p, ws);
}

double discrete_action(const PolarField& f, const SolverParams& p) {
  f.validate();
  check_ansatz_consistency(f, p);
  const ThetaTransform tf(f.grid, f.k_sym);
  std::vector<cplx> phys;
  return action_impl(f, p, tf, &phys);
}

double flow_gradient_norm(const PolarField& f, const SolverParams& p,
                          StepWorkspace& ws) {
  check_ansatz_consistency(f, p);
  ws.require_shape(f);
  ws.cubic_term(f, &ws.nl_);
  const PolarGrid& g = f.grid;
  const double inv_eps2 =
      std::isfinite(f.epsilon) ? 1.0 / (f.epsilon * f.epsilon) : 0.0;
  double s = 0.0;
  std::vector<cplx> lap;
  for (int a = 0; a < f.n_modes(); ++a) {
    const int j = g.mode_set[a];
    const double beta = inv_eps2 - p.omega * (p.k - double(j) / p.m);
    apply_mode_laplacian(g, j, f.c[a], &lap);
    for (int i = 0; i < g.Nr - 1; ++i) {
      const cplx G = lap[i] + beta * f.c[a][i] + ws.nl_[a][i];
      s += cell_volume(g, i) * std::norm(G);
    }
  }
  return std::sqrt(2.0 * PI * s);
}

RelaxResult relax_to_critical(PolarField& f, const SolverParams& p) {
  f.validate();
  check_ansatz_consistency(f, p);
  const double dt0 = resolve_dt(f, p);
  const double dt_lim = stable_dt(f, p, dt0);
  double dt = dt_lim;
  StepWorkspace ws(f);
  SolverParams q = p;

  RelaxResult out;
  out.action_trace.reserve(std::min<long>(p.max_steps, 1 << 20));
  std::vector<cplx> phys;
  double a_old = action_impl(f, p, *ws.tf_, &phys);
  std::vector<std::vector<cplx>> backup;
  long good = 0;
  const long check_every = 25;

  for (long step = 0; step < p.max_steps; ++step) {
    backup = f.c;
    q.dt = dt;
    gradient_flow_step(f, q, ws);
    const double a_new = action_impl(f, q, *ws.tf_, &phys);
    const double allow = 1e-12 * (1.0 + std::abs(a_old));
    if (!(a_new <= a_old + allow)) {
      f.c = std::move(backup);
      dt *= 0.5;
      ++out.halvings;
      if (dt < dt0 * 1e-12)
        throw SolverFailure(
            fmt::format("flow: step size collapsed (action stuck at {:.6e})",
                        a_old));
      continue;
    }
    out.max_step_increase = std::max(out.max_step_increase, a_new - a_old);
    a_old = a_new;
    out.action_trace.push_back(a_new);
    ++out.steps;
    if (++good >= 50 && dt < dt_lim) {
      dt = std::min(dt_lim, 1.2 * dt);
      good = 0;
    }
    if (out.steps % check_every == 0 || step == p.max_steps - 1) {
      out.residual = elliptic_residual(f, p);
      if (out.residual <= p.residual_tol) {
        out.converged = true;
        break;
      }
    }
  }
  if (!out.converged) out.residual = elliptic_residual(f, p);
  out.dt_final = dt;
  return out;
}

ConstrainedResult constrained_relax(PolarField& f, double p_target,
                                    const SolverParams& p) {
  f.validate();
  check_ansatz_consistency(f, p);
  const PolarGrid& g = f.grid;
  const int Nr = g.Nr;
  const double J_init = momentum_J(f, p.k, p.m);
  if (std::abs(J_init - p_target) > 0.5 * (1.0 + std::abs(p_target)))
    throw PreconditionError(fmt::format(
        "constrained flow: initial momentum {:.6f} is far from the target "
        "{:.6f}; prepare closer initial data",
        J_init, p_target));

  const double dt0 = resolve_dt(f, p);
  StepWorkspace ws(f);
  // The descent runs in a rotating frame whose rate is re-estimated from the
  // state as the flow settles.  Keeping the current rate inside the implicit
  // operator is essential: with a frozen frame the discrete fixed point
  // satisfies a stationarity condition distorted by (I - dt*A), which leaves
  // an O(omega * dt / eps^2) floor under the residual.
  SolverParams q = p;
  double dt_lim = stable_dt(f, q, dt0);
  double dt = dt_lim;

  // Interior w-quadrature moments of the mode weights mu_j = k - j/m drive
  // the scalar-quadratic momentum projection.
  std::vector<double> mu(f.n_modes());
  for (int a = 0; a < f.n_modes(); ++a)
    mu[a] = p.k - double(g.mode_set[a]) / p.m;

  auto project = [&](double target) {
    double B = 0.0, A = 0.0;
    const double C = momentum_J(f, p.k, p.m);
    double gradsq = 0.0;
    for (int a = 0; a < f.n_modes(); ++a) {
      double s2 = 0.0;
      for (int i = 0; i < Nr - 1; ++i) s2 += g.w[i] * std::norm(f.c[a][i]);
      B += 2.0 * PI * mu[a] * mu[a] * s2;
      A -= PI * mu[a] * mu[a] * mu[a] * s2;
      gradsq += mu[a] * mu[a] * s2;
    }
    if (gradsq < 1e-28)
      throw SolverFailure("constrained flow: momentum gradient degenerate");
    const double rhs = C - target;
    double alpha;
    const double disc = B * B - 4.0 * A * rhs;
    if (std::abs(A) < 1e-14 * std::abs(B)) {
      alpha = -rhs / B;
    } else {
      if (disc < 0.0)
        throw SolverFailure(
            "constrained flow: momentum level set unreachable from here");
      const double sq = std::sqrt(disc);
      alpha = -2.0 * rhs / (B + (B >= 0 ? sq : -sq));
    }
    for (int a = 0; a < f.n_modes(); ++a) {
      const double scale = -mu[a] * alpha;
      for (int i = 0; i < Nr - 1; ++i) f.c[a][i] *= (1.0 + scale);
    }
  };

  auto multiplier = [&]() {
    // omega = -<F, G_J>_V / |G_J|_V^2 with F the omega-free descent
    // direction and G_J the momentum gradient -mu_j c_j.
    ws.cubic_term(f, &ws.nl_);
    const double inv_eps2 =
        std::isfinite(f.epsilon) ? 1.0 / (f.epsilon * f.epsilon) : 0.0;
    double num = 0.0, den = 0.0;
    std::vector<cplx> lap;
    for (int a = 0; a < f.n_modes(); ++a) {
      apply_mode_laplacian(g, g.mode_set[a], f.c[a], &lap);
      for (int i = 0; i < Nr - 1; ++i) {
        const cplx F = lap[i] + inv_eps2 * f.c[a][i] + ws.nl_[a][i];
        const cplx GJ = -mu[a] * f.c[a][i];
        const double V = cell_volume(g, i);
        num -= V * (F.real() * GJ.real() + F.imag() * GJ.imag());
        den += V * std::norm(GJ);
      }
    }
    if (den < 1e-28)
      throw SolverFailure("constrained flow: momentum gradient degenerate");
    return num / den;
  };

  ConstrainedResult out;
  out.energy_trace.reserve(std::min<long>(p.max_steps, 1 << 20));
  std::vector<cplx> phys;
  // The monotonicity guard watches the plain energy: on a fixed momentum
  // level set it differs from the frame action by a constant, so it stays
  // meaningful across frame-rate updates.
  SolverParams ez = p;
  ez.omega = 0.0;
  project(p_target);
  double e_old = action_impl(f, ez, *ws.tf_, &phys);
  std::vector<std::vector<cplx>> backup;
  long good = 0;
  const long check_every = 25;

  for (long step = 0; step < p.max_steps; ++step) {
    backup = f.c;
    q.dt = dt;
    gradient_flow_step(f, q, ws);
    project(p_target);
    const double e_new = action_impl(f, ez, *ws.tf_, &phys);
    const double allow = 1e-12 * (1.0 + std::abs(e_old));
    if (!(e_new <= e_old + allow)) {
      f.c = std::move(backup);
      dt *= 0.5;
      ++out.halvings;
      if (dt < dt0 * 1e-12)
        throw SolverFailure(
            fmt::format("constrained flow: step size collapsed at E = {:.6e}",
                        e_old));
      continue;
    }
    e_old = e_new;
    out.energy_trace.push_back(e_new);
    ++out.steps;
    out.max_momentum_drift =
        std::max(out.max_momentum_drift,
                 std::abs(momentum_J(f, p.k, p.m) - p_target));
    if (++good >= 50 && dt < dt_lim) {
      dt = std::min(dt_lim, 1.2 * dt);
      good = 0;
    }
    if (out.steps % check_every == 0 || step == p.max_steps - 1) {
      out.omega_eps = multiplier();
      SolverParams r = p;
      r.omega = out.omega_eps;
      out.residual = elliptic_residual(f, r);
      if (out.residual <= p.residual_tol) {
        out.converged = true;
        break;
      }
      q.omega = out.omega_eps;
      dt_lim = stable_dt(f, q, dt0);
      dt = std::min(dt, dt_lim);
    }
  }
  if (!out.converged) {
    out.omega_eps = multiplier();
    SolverParams r = p;
    r.omega = out.omega_eps;
    out.residual = elliptic_residual(f, r);
  }
  out.dt_final = dt;
  return out;
}

}  // namespace lab
