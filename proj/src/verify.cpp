#include "lab/verify.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "json.hpp"

#include "lab/flow.hpp"
#include "lab/glops.hpp"
#include "lab/rings.hpp"
#include "lab/runio.hpp"
#include "lab/tracker.hpp"
#include "lab/vortex.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace lab {
namespace {

// Pinned reference values, computed once with an independent high-precision
// route and frozen here so the suite checks against numbers the library
// cannot influence.
constexpr double kOmegaRing1 = -8.0 / 3.0;            // ring rate n=1, rho=1/2
constexpr double kOmegaRing2 = -76.0 / 15.0;          // ring rate n=2, rho=1/2
constexpr double kDeltaW = -0.25894266899182174;      // W(p) - W(q), criterion 6
constexpr double kBumpTarget3 = 3.30967972664;        // pairing target, bump 3
constexpr double kStagR1 = 0.19755100552364563;       // staggered k=2 inner
constexpr double kStagR2 = 0.45557854672234285;       // staggered k=2 outer
constexpr double kStagOmega0 = 2.0 * -10.381527408822065;

struct Ctx {
  std::string cache;
};

CriterionResult make_result(int id, const char* name) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  return r;
}

// ---------------------------------------------------------------------------
// Cached relaxations
// ---------------------------------------------------------------------------

struct RelaxSpec {
  std::string label;
  RingFamily family;
  double omega0 = 0.0;      // fixed-rate flow rate / initial frame estimate
  bool constrained = false;
  double p_target = 0.0;
  bool exact_steps = false;  // constrained: run max_steps accepted steps
  double eps = 0.0;
  int Nr = 0, J = 0, k_sym = 0;  // 0 = defaults
  double tol = 1e-6;
  long max_steps = 200000;
  // Keep the mode coefficients real (reflection-symmetric field).  The real
  // subspace is invariant under every flow operator; round-off breaks it,
  // and mixed-sign states have a reflection-odd unstable direction (the
  // rings rotating against each other) that amplifies that round-off, so
  // long driven runs re-project every lock_period accepted steps.
  bool mirror_lock = false;
  long lock_period = 1000;
  std::string suffix;  // extra cache-key discriminator (continuations)
};

/// Zero the imaginary parts of the modes in the k-fold rotation sector
/// (k | j); other modes are untouched.
void apply_mirror_lock(PolarField* f, int k) {
  const int kk = std::max(1, k);
  for (int a = 0; a < f->n_modes(); ++a) {
    if (f->grid.mode_set[a] % kk != 0) continue;
    for (cplx& v : f->c[a]) v = cplx(v.real(), 0.0);
  }
}

std::string spec_key(const RelaxSpec& s) {
  std::string key = fmt::format(
      "relax|v1|constrained={}|exact={}|eps={:.17g}|Nr={}|J={}|ksym={}|"
      "om={:.17g}|pt={:.17g}|tol={:.17g}|ms={}|k={}",
      int(s.constrained), int(s.exact_steps), s.eps, s.Nr, s.J, s.k_sym,
      s.omega0, s.p_target, s.tol, s.max_steps, s.family.k);
  for (const auto& r : s.family.rings)
    key += fmt::format("|r={:.17g}:{:.17g}:{}", r.rho, r.phi, r.degree);
  if (s.mirror_lock) key += fmt::format("|mlock=1|lp={}", s.lock_period);
  if (!s.suffix.empty()) key += "|" + s.suffix;
  return key;
}

struct CachedRun {
  PolarField field;
  json metrics;
};

SolverParams params_for(const RelaxSpec& s, double omega) {
  SolverParams p;
  p.omega = omega;
  p.k = s.family.ansatz_k();
  p.m = s.family.ansatz_m();
  p.residual_tol = s.tol;
  p.max_steps = s.max_steps;
  return p;
}

CachedRun compute_relax(const RelaxSpec& s, const PolarField* init) {
  CachedRun out;
  PolarField f = [&] {
    if (init) return *init;
    const PolarGrid grid = vortex_solver_grid(s.family, s.eps, s.Nr, s.J, s.k_sym);
    const int k_sym = s.k_sym > 0 ? s.k_sym : s.family.k;
    return bbh_initial_data(s.family.expand(), s.eps, grid, k_sym);
  }();
  SolverParams p = params_for(s, s.omega0);

  if (!s.constrained) {
    const RelaxResult r = relax_to_critical(f, p);
    out.metrics = json{{"label", s.label},
                       {"kind", "fixed"},
                       {"omega", s.omega0},
                       {"steps", r.steps},
                       {"residual", r.residual},
                       {"converged", r.converged},
                       {"dt_final", r.dt_final},
                       {"halvings", r.halvings},
                       {"max_step_increase", r.max_step_increase}};
  } else {
    long total = 0, halvings = 0;
    double max_inc = 0.0, max_drift = 0.0;
    double carry_dt = 0.0;  // <= 0: solver default; else last accepted dt
    ConstrainedResult r;
    while (true) {
      if (s.mirror_lock) apply_mirror_lock(&f, s.family.k);
      SolverParams q = p;
      q.dt = carry_dt;
      q.max_steps = s.max_steps - total;
      if (s.mirror_lock) q.max_steps = std::min(q.max_steps, s.lock_period);
      if (s.exact_steps) q.residual_tol = 0.0;
      r = constrained_relax(f, s.p_target, q);
      total += r.steps;
      halvings += r.halvings;
      max_drift = std::max(max_drift, r.max_momentum_drift);
      for (std::size_t i = 1; i < r.energy_trace.size(); ++i)
        max_inc = std::max(max_inc, r.energy_trace[i] - r.energy_trace[i - 1]);
      if (total >= s.max_steps) break;
      if (!s.exact_steps && r.converged) break;
      if (r.steps == 0) {
        // A chunk that only rejected steps: retry at half its final dt so
        // driven runs always reach the requested accepted-step count.
        carry_dt = r.dt_final * 0.5;
        if (!(carry_dt > 1e-12)) break;
        continue;
      }
      carry_dt = r.dt_final;
    }
    double residual = r.residual;
    if (s.mirror_lock) {
      // Leave the cached field exactly in the locked subspace and record
      // the residual of that cleaned state.
      apply_mirror_lock(&f, s.family.k);
      SolverParams q = p;
      q.omega = r.omega_eps;
      residual = elliptic_residual(f, q);
    }
    out.metrics = json{{"label", s.label},
                       {"kind", "constrained"},
                       {"omega_eps", r.omega_eps},
                       {"p_target", s.p_target},
                       {"steps", total},
                       {"residual", residual},
                       {"converged", r.converged},
                       {"dt_final", r.dt_final},
                       {"halvings", halvings},
                       {"max_momentum_drift", max_drift},
                       {"max_step_increase", max_inc}};
  }
  out.field = std::move(f);
  return out;
}

/// Cache lookup with re-validation: a stored field is trusted only if its
/// recomputed residual matches the recorded one.
CachedRun obtain(const Ctx& ctx, const RelaxSpec& s,
                 const PolarField* init = nullptr) {
  if (ctx.cache.empty()) return compute_relax(s, init);
  fs::create_directories(ctx.cache);
  const std::string key = sha256_hex(spec_key(s)).substr(0, 24);
  const fs::path snap = fs::path(ctx.cache) / (key + ".snap");
  const fs::path meta = fs::path(ctx.cache) / (key + ".json");

  if (fs::exists(snap) && fs::exists(meta)) {
    try {
      CachedRun out;
      out.field = load_snapshot(snap.string());
      std::ifstream in(meta);
      out.metrics = json::parse(in);
      const double omega = s.constrained
                               ? out.metrics.at("omega_eps").get<double>()
                               : s.omega0;
      const SolverParams p = params_for(s, omega);
      const double recomputed = elliptic_residual(out.field, p);
      const double recorded = out.metrics.at("residual").get<double>();
      if (std::abs(recomputed - recorded) <=
          1e-9 + 1e-3 * std::abs(recorded))
        return out;
    } catch (const std::exception&) {
      // corrupt or stale entry: fall through and recompute
    }
  }

  CachedRun out = compute_relax(s, init);
  save_snapshot(out.field, snap.string() + ".tmp");
  fs::rename(snap.string() + ".tmp", snap);
  {
    std::ofstream o(meta.string() + ".tmp");
    o << out.metrics.dump(2) << "\n";
  }
  fs::rename(meta.string() + ".tmp", meta);
  return out;
}

/// The suite's standard relaxation: single +1 ring whose radius and rate
/// come from the momentum value p = -1/8 (radius 1/2, rate -8/3).
RelaxSpec single_ring_spec(double eps) {
  RelaxSpec s;
  const double rho = single_ring_radius_from_momentum(1, -0.125);
  s.label = fmt::format("single_ring_eps{:g}", eps);
  s.family = RingFamily{1, {{rho, 0.0, +1}}};
  s.omega0 = single_ring_omega(1, rho);
  s.eps = eps;
  return s;
}

RingFamily staggered_family() {
  return RingFamily{2, {{kStagR1, 0.0, +1}, {kStagR2, PI / 2.0, -1}}};
}

/// Staggered-pair momentum-constrained settle at eps = 0.05 (criterion 16
/// phase 1; also the background state for the sector-lock run).
RelaxSpec staggered_spec() {
  RelaxSpec s;
  s.label = "staggered_k2_eps0.05";
  s.family = staggered_family();
  s.omega0 = kStagOmega0;
  s.constrained = true;
  s.eps = 0.05;
  s.p_target = (PI / s.family.ansatz_m()) * momentum_J0(s.family.expand());
  s.mirror_lock = true;
  return s;
}

const std::vector<double> kSweepEps{0.1, 0.05, 0.025};

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

CriterionResult c1_pvf_conservation(const Ctx&) {
  CriterionResult r = make_result(1, "pvf_conservation");
  RingFamily fam{3, {{0.5, 0.0, +1}}};
  const double omega0 = single_ring_omega(3, 0.5);
  const double T = std::abs(2.0 * PI * fam.ansatz_m() / omega0);
  const double dt = T / 8192.0;
  IntegrateOptions opt;
  opt.sample_stride = 8;
  const Trajectory tr = integrate_pvf(fam.expand(), T, dt, opt);
  r.measured["drift_W"] = tr.max_rel_drift_W;
  r.measured["drift_J0"] = tr.max_rel_drift_J0;
  r.tolerance["drift_W"] = 1e-8;
  r.tolerance["drift_J0"] = 1e-8;
  r.passed = !tr.aborted && tr.max_rel_drift_W <= 1e-8 &&
             tr.max_rel_drift_J0 <= 1e-8;
  r.detail = fmt::format(
      "n=3 polygon rho=0.5, one period T={:.6f} (dt={:.3e}): rel drift "
      "W {:.2e}, J0 {:.2e} (tol 1e-8 each)",
      T, dt, tr.max_rel_drift_W, tr.max_rel_drift_J0);
  return r;
}

CriterionResult c2_ring_speed_closed_form(const Ctx&) {
  CriterionResult r = make_result(2, "ring_speed_closed_form");
  const double e1 = std::abs(single_ring_omega(1, 0.5) - kOmegaRing1);
  const double e2 = std::abs(single_ring_omega(2, 0.5) - kOmegaRing2);

  auto measured_rate = [](int n, double target) {
    RingFamily fam{n, {{0.5, 0.0, +1}}};
    const Trajectory tr = integrate_pvf(fam.expand(), 0.3, 1e-4, {});
    const cplx b0 = tr.positions.front()[0];
    const cplx b1 = tr.positions.back()[0];
    const double span = tr.times.back() - tr.times.front();
    const double measured = -std::arg(b1 / b0) / span;
    return std::abs(measured - target);
  };
  const double m1 = measured_rate(1, kOmegaRing1);
  const double m2 = measured_rate(2, kOmegaRing2);

  r.measured["closed_form_err_n1"] = e1;
  r.measured["closed_form_err_n2"] = e2;
  r.measured["measured_rate_err_n1"] = m1;
  r.measured["measured_rate_err_n2"] = m2;
  r.tolerance["closed_form"] = 1e-12;
  r.tolerance["measured_rate"] = 1e-6;
  r.passed = e1 <= 1e-12 && e2 <= 1e-12 && m1 <= 1e-6 && m2 <= 1e-6;
  r.detail = fmt::format(
      "closed-form errors {:.1e}/{:.1e} vs -8/3, -76/15 (tol 1e-12); "
      "integrated-rate errors {:.1e}/{:.1e} (tol 1e-6)",
      e1, e2, m1, m2);
  return r;
}

CriterionResult c3_staggered_criticality(const Ctx&) {
  CriterionResult r = make_result(3, "staggered_criticality");
  double worst_at = 0.0, best_off = 1e300;
  for (int k = 1; k <= 4; ++k) {
    const double r0 = staggered_critical_radius(k);
    auto grad_sup = [&](double rho) {
      // build the equal-radius +- pair directly (both rings share one radius)
      VortexConfig c;
      for (int b = 0; b < k; ++b) {
        c.positions.push_back(std::polar(rho, 2.0 * PI * b / k));
        c.degrees.push_back(+1);
        c.positions.push_back(std::polar(rho, PI / k + 2.0 * PI * b / k));
        c.degrees.push_back(-1);
      }
      double sup = 0.0;
      for (const cplx& g : grad_W(c)) sup = std::max(sup, std::abs(g));
      return sup;
    };
    worst_at = std::max(worst_at, grad_sup(r0));
    best_off = std::min({best_off, grad_sup(r0 + 0.05), grad_sup(r0 - 0.05)});
  }
  r.measured["grad_sup_at_r0"] = worst_at;
  r.measured["grad_sup_off_r0"] = best_off;
  r.tolerance["grad_sup_at_r0"] = 1e-10;
  r.tolerance["grad_sup_off_r0_min"] = 1e-3;
  r.passed = worst_at <= 1e-10 && best_off > 1e-3;
  r.detail = fmt::format(
      "k=1..4: sup|grad W| at r0(k) = {:.2e} (tol 1e-10); off by +-0.05 "
      "it is >= {:.2e} (must exceed 1e-3)",
      worst_at, best_off);
  return r;
}

/// Central finite differences of the rotating-frame energy H; independent
/// of the analytic gradient route used by the solvers.
double fd_grad_H_sup(const VortexConfig& c, double omega0, int m) {
  const double h = 1e-6;
  double sup = 0.0;
  for (std::size_t i = 0; i < c.positions.size(); ++i) {
    for (int axis = 0; axis < 2; ++axis) {
      const cplx dz = axis == 0 ? cplx(h, 0.0) : cplx(0.0, h);
      VortexConfig cp = c, cm = c;
      cp.positions[i] += dz;
      cm.positions[i] -= dz;
      const double g = (modified_energy_H(cp, omega0, m) -
                        modified_energy_H(cm, omega0, m)) /
                       (2.0 * h);
      sup = std::max(sup, std::abs(g));
    }
  }
  return sup;
}

CriterionResult c4_catalog_cross_validation(const Ctx&) {
  CriterionResult r = make_result(4, "catalog_cross_validation");
  double worst_ring = 0.0, worst_fd = 0.0;
  int entries = 0;
  for (const auto& entry : standard_catalog()) {
    ++entries;
    for (double res : ring_residual(entry.eq.family, entry.eq.omega0))
      worst_ring = std::max(worst_ring, std::abs(res));
    worst_fd = std::max(
        worst_fd, fd_grad_H_sup(entry.eq.family.expand(), entry.eq.omega0,
                                entry.eq.family.ansatz_m()));
  }
  r.measured["max_ring_residual"] = worst_ring;
  r.measured["max_fd_grad_H"] = worst_fd;
  r.tolerance["max_ring_residual"] = 1e-10;
  r.tolerance["max_fd_grad_H"] = 1e-8;
  r.passed = entries > 0 && worst_ring <= 1e-10 && worst_fd <= 1e-8;
  r.detail = fmt::format(
      "{} catalog entries: max ring residual {:.2e} (tol 1e-10), max "
      "finite-difference |grad H| {:.2e} (tol 1e-8)",
      entries, worst_ring, worst_fd);
  return r;
}

CriterionResult c5_hessian_null_audit(const Ctx&) {
  CriterionResult r = make_result(5, "hessian_null_audit");
  int audited = 0;
  bool ok = true;
  double min_alignment = 1.0;
  for (const auto& entry : standard_catalog()) {
    const RingFamily& f = entry.eq.family;
    if (f.rings.size() != 1 || f.rings[0].degree != +1 || f.n() > 4) continue;
    ++audited;
    ok = ok && entry.hessian.null_count == 1;
    min_alignment = std::min(min_alignment, entry.hessian.tangent_alignment);
  }
  r.measured["audited_entries"] = audited;
  r.measured["min_tangent_alignment"] = min_alignment;
  r.tolerance["tangent_alignment_min"] = 0.999;
  r.passed = audited >= 4 && ok && min_alignment >= 0.999;
  r.detail = fmt::format(
      "{} single-ring entries (n <= 4): every null count = 1 ({}), min "
      "rotation-tangent alignment {:.6f} (min 0.999)",
      audited, ok ? "yes" : "no", min_alignment);
  return r;
}

/// Auto grid scaled up by an integer factor.  The energy of a constructed
/// field carries a quadrature error comparable to the pair-interaction gap
/// itself at the solver resolution; doubling it makes the discretization
/// error subordinate at every epsilon used below.
PolarGrid scaled_vortex_grid(const RingFamily& fam, double eps, int scale,
                             int k_sym) {
  const PolarGrid base = vortex_solver_grid(fam, eps, 0, 0, k_sym);
  int J = 0;
  for (int j : base.mode_set) J = std::max(J, std::abs(j));
  return vortex_solver_grid(fam, eps, static_cast<int>(base.r.size()) * scale,
                            J * scale, k_sym);
}

PolarField build_pair_field(double eps, int Nr = 0, int J = 0, int scale = 1) {
  RingFamily fam{2, {{0.5, 0.0, +1}}};
  const PolarGrid g = (Nr == 0 && J == 0 && scale > 1)
                          ? scaled_vortex_grid(fam, eps, scale, 2)
                          : vortex_solver_grid(fam, eps, Nr, J);
  return bbh_initial_data(fam.expand(), eps, g, 2);
}

PolarField build_offset_field(double eps, int scale = 1) {
  const VortexConfig q{{{0.15, 0.5}, {0.15, -0.5}}, {+1, +1}};
  RingFamily sizing{1, {{std::abs(q.positions[0]), 0.0, +1}}};
  const PolarGrid g = scale > 1 ? scaled_vortex_grid(sizing, eps, scale, 1)
                                : vortex_solver_grid(sizing, eps, 0, 0, 1);
  return bbh_initial_data(q, eps, g, 1);
}

CriterionResult c6_energy_gap_pairs(const Ctx&) {
  CriterionResult r = make_result(6, "energy_gap_pairs");
  const std::vector<double> eps_list{0.05, 0.02, 0.01};
  std::vector<double> gaps;
  for (double eps : eps_list) {
    const double Ep = energy_E(build_pair_field(eps, 0, 0, 2));
    const double Eq = energy_E(build_offset_field(eps, 2));
    gaps.push_back(std::abs((Ep - Eq) - kDeltaW));
  }
  const bool decreasing = gaps[1] < gaps[0] && gaps[2] < gaps[1];
  r.measured["gap_eps0.05"] = gaps[0];
  r.measured["gap_eps0.02"] = gaps[1];
  r.measured["gap_eps0.01"] = gaps[2];
  r.tolerance["gap_eps0.02"] = 0.1;
  r.passed = gaps[1] <= 0.1 && decreasing;
  r.detail = fmt::format(
      "|dE - dW| over eps {{0.05, 0.02, 0.01}} = {:.1e}, {:.1e}, {:.1e} "
      "(<= 0.1 at 0.02, strictly decreasing; dW = {:.6f})",
      gaps[0], gaps[1], gaps[2], kDeltaW);
  return r;
}

CriterionResult c7_momentum_gap(const Ctx&) {
  CriterionResult r = make_result(7, "momentum_gap");
  const std::vector<double> eps_list{0.05, 0.02, 0.01};
  const double target = PI * momentum_J0(RingFamily{2, {{0.5, 0.0, +1}}}.expand());
  std::vector<double> gaps;
  for (double eps : eps_list) {
    const PolarField w = build_pair_field(eps);
    gaps.push_back(std::abs(momentum_J(w, 2, 1) - target));
  }
  const bool decreasing = gaps[1] < gaps[0] && gaps[2] < gaps[1];
  r.measured["gap_eps0.05"] = gaps[0];
  r.measured["gap_eps0.02"] = gaps[1];
  r.measured["gap_eps0.01"] = gaps[2];
  r.tolerance["gap_eps0.02"] = 0.05;
  r.passed = gaps[1] <= 0.05 && decreasing;
  r.detail = fmt::format(
      "|J - pi J0/m| over eps {{0.05, 0.02, 0.01}} = {:.1e}, {:.1e}, {:.1e} "
      "(<= 0.05 at 0.02, strictly decreasing; target {:.6f})",
      gaps[0], gaps[1], gaps[2], target);
  return r;
}

double odd_mode_sup(const PolarField& f, int stride) {
  double sup = 0.0;
  for (int a = 0; a < f.n_modes(); ++a) {
    if (f.grid.mode_set[a] % stride == 0) continue;
    for (const cplx& z : f.c[a]) sup = std::max(sup, std::abs(z));
  }
  return sup;
}

CriterionResult c8_symmetry_sector_lock(const Ctx& ctx) {
  CriterionResult r = make_result(8, "symmetry_sector_lock");
  const long total_steps = 10000, chunk = 1000;

  auto compute = [&]() -> json {
    RingFamily fam = staggered_family();
    const PolarGrid grid = vortex_solver_grid(fam, 0.05, 0, 0, 1);
    PolarField f = bbh_initial_data(fam.expand(), 0.05, grid, 1);
    for (int a = 0; a < f.n_modes(); ++a)
      if (f.grid.mode_set[a] % 2 != 0)
        std::fill(f.c[a].begin(), f.c[a].end(), cplx(0.0, 0.0));
    SolverParams p;
    p.omega = kStagOmega0;
    p.k = 0;
    p.m = 2;
    p.residual_tol = 0.0;
    const double p_target = momentum_J(f, p.k, p.m);
    double sup = 0.0;
    json checkpoints = json::array();
    long done = 0;
    double carry_dt = 0.0;
    while (done < total_steps) {
      // Hold the even-sector background on its reflection-symmetric
      // (real-coefficient) slice; the odd sector under test is untouched.
      apply_mirror_lock(&f, 2);
      SolverParams q = p;
      q.dt = carry_dt;
      q.max_steps = std::min(chunk, total_steps - done);
      const ConstrainedResult res = constrained_relax(f, p_target, q);
      done += res.steps;
      if (res.steps == 0) {
        carry_dt = res.dt_final * 0.5;
        if (!(carry_dt > 1e-12)) break;
        continue;
      }
      carry_dt = res.dt_final;
      const double s = odd_mode_sup(f, 2);
      sup = std::max(sup, s);
      checkpoints.push_back(s);
    }
    int plus = 0, minus = 0;
    for (const auto& v : detect_vortices(f)) (v.degree > 0 ? plus : minus)++;
    return json{{"odd_sup_max", sup},
                {"steps", done},
                {"checkpoints", checkpoints},
                {"plus", plus},
                {"minus", minus}};
  };

  json m;
  bool cached = false;
  if (!ctx.cache.empty()) {
    const fs::path meta =
        fs::path(ctx.cache) /
        (sha256_hex("sector_lock|v2|k=2|eps=0.05|steps=10000|lp=1000")
             .substr(0, 24) +
         ".json");
    if (fs::exists(meta)) {
      try {
        std::ifstream in(meta);
        m = json::parse(in);
        cached = m.at("steps").get<long>() == total_steps;
      } catch (const std::exception&) {
        cached = false;
      }
    }
    if (!cached) {
      m = compute();
      fs::create_directories(ctx.cache);
      std::ofstream o(meta.string() + ".tmp");
      o << m.dump(2) << "\n";
      o.close();
      fs::rename(meta.string() + ".tmp", meta);
    }
  } else {
    m = compute();
  }

  const double sup = m.at("odd_sup_max").get<double>();
  const int plus = m.at("plus").get<int>(), minus = m.at("minus").get<int>();
  r.measured["odd_mode_sup"] = sup;
  r.measured["steps"] = double(m.at("steps").get<long>());
  r.measured["final_plus"] = plus;
  r.measured["final_minus"] = minus;
  r.tolerance["odd_mode_sup"] = 1e-12;
  r.passed = sup <= 1e-12 && m.at("steps").get<long>() == total_steps &&
             plus == 2 && minus == 2;
  r.detail = fmt::format(
      "staggered k=2 flow on the full mode set, odd sector zeroed at start: "
      "sup over {} steps = {:.2e} (tol 1e-12); background kept {}+/{}- "
      "vortices",
      m.at("steps").get<long>(), sup, plus, minus);
  return r;
}

CriterionResult c9_action_monotonicity(const Ctx& ctx) {
  CriterionResult r = make_result(9, "action_monotonicity");
  double worst = 0.0;
  std::string worst_label = "-";
  auto note = [&](const json& m) {
    const double inc = m.at("max_step_increase").get<double>();
    if (inc > worst) {
      worst = inc;
      worst_label = m.at("label").get<std::string>();
    }
  };
  for (double eps : kSweepEps) note(obtain(ctx, single_ring_spec(eps)).metrics);
  const CachedRun stag = obtain(ctx, staggered_spec());
  note(stag.metrics);
  RelaxSpec phase2 = staggered_spec();
  phase2.label = "staggered_k2_eps0.05_persist";
  phase2.exact_steps = true;
  phase2.max_steps = 100000;
  phase2.suffix = "persist";
  note(obtain(ctx, phase2, &stag.field).metrics);

  r.measured["max_step_increase"] = worst;
  r.tolerance["max_step_increase"] = 1e-10;
  r.passed = worst <= 1e-10;
  r.detail = fmt::format(
      "worst accepted action/energy increment over all suite relaxations = "
      "{:.2e} (in {}; tol 1e-10 per step)",
      worst, worst_label);
  return r;
}

CriterionResult c10_modulus_bound(const Ctx& ctx) {
  CriterionResult r = make_result(10, "modulus_bound");
  r.passed = true;
  std::string parts;
  for (double eps : kSweepEps) {
    const CachedRun run = obtain(ctx, single_ring_spec(eps));
    const double mm = max_modulus(run.field);
    const double bound = 1.0 + 10.0 * eps * eps;
    r.measured[fmt::format("max_modulus_eps{:g}", eps)] = mm;
    r.tolerance[fmt::format("bound_eps{:g}", eps)] = bound;
    r.passed = r.passed && mm <= bound &&
               run.metrics.at("converged").get<bool>();
    parts += fmt::format("{}{:.6f} (<= {:.3f})", parts.empty() ? "" : ", ", mm,
                         bound);
  }
  r.detail = "relaxed max|v| at eps {0.1, 0.05, 0.025}: " + parts;
  return r;
}

CriterionResult c11_vortex_radius_convergence(const Ctx& ctx) {
  CriterionResult r = make_result(11, "vortex_radius_convergence");
  std::vector<double> devs;
  int count05 = 0, degree05 = 0;
  for (double eps : kSweepEps) {
    const CachedRun run = obtain(ctx, single_ring_spec(eps));
    const auto obs = detect_vortices(run.field);
    double dev = 1e300;
    for (const auto& v : obs)
      dev = std::min(dev, std::abs(std::abs(v.position) - 0.5));
    if (eps == 0.05) {
      count05 = static_cast<int>(obs.size());
      degree05 = obs.empty() ? 0 : obs[0].degree;
      r.measured["radius_eps0.05"] =
          obs.empty() ? -1.0 : std::abs(obs[0].position);
    }
    devs.push_back(dev);
    r.measured[fmt::format("deviation_eps{:g}", eps)] = dev;
  }
  const bool decreasing = devs[1] < devs[0] && devs[2] < devs[1];
  r.tolerance["deviation_eps0.05"] = 0.05;
  r.passed = count05 == 1 && degree05 == +1 && devs[1] <= 0.05 && decreasing;
  r.detail = fmt::format(
      "eps=0.05: {} vortex (degree {:+d}) at radius {:.6f}, |r - 0.5| = "
      "{:.4f} (tol 0.05); deviations over eps {{0.1, 0.05, 0.025}} = "
      "{:.4f}, {:.4f}, {:.4f} (strictly decreasing)",
      count05, degree05, r.measured.count("radius_eps0.05")
                             ? r.measured["radius_eps0.05"] : -1.0,
      devs[1], devs[0], devs[1], devs[2]);
  return r;
}

CriterionResult c12_jacobian_pairing_accuracy(const Ctx&) {
  CriterionResult r = make_result(12, "jacobian_pairing_accuracy");
  const PolarField w = build_pair_field(0.02, 512, 96);
  const VortexConfig p{{{0.5, 0.0}, {-0.5, 0.0}}, {+1, +1}};

  auto bump = [](cplx z0, double R) {
    return [z0, R](cplx z) {
      const double q = std::norm(z - z0) / (R * R);
      return q >= 1.0 ? 0.0 : std::exp(1.0 - 1.0 / (1.0 - q));
    };
  };
  struct Case {
    cplx z0;
    double R;
    double target;
  };
  const std::vector<Case> cases{{{0.5, 0.0}, 0.35, PI},
                                {{-0.5, 0.0}, 0.35, PI},
                                {{0.0, 0.0}, 0.8, kBumpTarget3}};
  r.passed = true;
  std::string parts;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const double pairing = jacobian_pairing(w, bump(cases[i].z0, cases[i].R));
    const double rel = std::abs(pairing - cases[i].target) /
                       std::abs(cases[i].target);
    r.measured[fmt::format("rel_err_bump{}", i + 1)] = rel;
    r.passed = r.passed && rel <= 0.05;
    parts += fmt::format("{}{:.4f}", parts.empty() ? "" : ", ", rel);
  }
  r.tolerance["rel_err"] = 0.05;
  r.detail = fmt::format(
      "pair (+1,+1) at +-0.5, eps=0.02: <Jw, phi> relative errors vs "
      "pi*sum d_i phi(p_i) = {} (tol 0.05 each)",
      parts);
  return r;
}

CriterionResult c13_pohozaev_identity(const Ctx& ctx) {
  CriterionResult r = make_result(13, "pohozaev_identity");
  r.passed = true;
  std::string parts;
  double worst_potential = 0.0;
  for (double eps : kSweepEps) {
    const RelaxSpec s = single_ring_spec(eps);
    const CachedRun run = obtain(ctx, s);
    const PohozaevReport rep =
        pohozaev_residual(run.field, params_for(s, s.omega0));
    const double res_el = run.metrics.at("residual").get<double>();
    // Calibrated bound: the identity is exact in the continuum, so the
    // measured residual is solver tolerance (scaled) plus the second-order
    // discretization floor of the boundary-flux and Jacobian quadratures.
    const double bound = 0.01 + 50.0 * res_el;
    r.measured[fmt::format("residual_eps{:g}", eps)] = rep.residual;
    r.measured[fmt::format("potential_eps{:g}", eps)] = rep.potential;
    r.tolerance[fmt::format("bound_eps{:g}", eps)] = bound;
    r.passed = r.passed && rep.residual <= bound;
    worst_potential = std::max(worst_potential, rep.potential);
    parts += fmt::format("{}{:.2e} (<= {:.2e})", parts.empty() ? "" : ", ",
                         rep.residual, bound);
  }
  r.tolerance["potential_uniform_bound"] = 4.5;
  r.measured["potential_max"] = worst_potential;
  r.passed = r.passed && worst_potential <= 4.5;
  r.detail = fmt::format(
      "identity residual at eps {{0.1, 0.05, 0.025}}: {}; potential term "
      "max {:.3f} (uniform bound 4.5)",
      parts, worst_potential);
  return r;
}

CriterionResult c14_force_balance_defect(const Ctx& ctx) {
  CriterionResult r = make_result(14, "force_balance_defect");
  std::vector<double> defects;
  for (double eps : kSweepEps) {
    const RelaxSpec s = single_ring_spec(eps);
    const CachedRun run = obtain(ctx, s);
    double worst = 0.0;
    for (double d :
         vanishing_gradient_check(run.field, params_for(s, s.omega0)))
      worst = std::max(worst, d);
    defects.push_back(worst);
    r.measured[fmt::format("defect_eps{:g}", eps)] = worst;
  }
  const bool decreasing = defects[1] < defects[0] && defects[2] < defects[1];
  r.tolerance["defect_eps0.05"] = 0.1;
  r.passed = defects[1] <= 0.1 && decreasing;
  r.detail = fmt::format(
      "per-vortex |grad W + d pi (omega0/m) b| at eps {{0.1, 0.05, 0.025}} "
      "= {:.4f}, {:.4f}, {:.4f} (<= 0.1 at 0.05, strictly decreasing)",
      defects[0], defects[1], defects[2]);
  return r;
}

CriterionResult c15_time_periodicity_and_speed(const Ctx& ctx) {
  CriterionResult r = make_result(15, "time_periodicity_and_speed");
  const RelaxSpec s = single_ring_spec(0.05);
  const CachedRun run = obtain(ctx, s);
  const SolverParams p = params_for(s, s.omega0);
  const double T = 2.0 * PI * p.m / p.omega;

  const PolarField fT = reconstruct_time_periodic(run.field, p, T);
  double max_diff = 0.0;
  for (int a = 0; a < run.field.n_modes(); ++a)
    for (int i = 0; i < run.field.grid.Nr; ++i)
      max_diff = std::max(max_diff,
                          std::abs(fT.c[a][i] - run.field.c[a][i]));

  std::vector<PolarField> snaps;
  std::vector<double> times;
  for (int i = 0; i < 8; ++i) {
    const double t = i * std::abs(T) / 8.0;
    snaps.push_back(reconstruct_time_periodic(run.field, p, t));
    times.push_back(t);
  }
  const RelativeEquilibrium eq{s.family, s.omega0};
  const TrackReport track = compare_to_pvf(snaps, times, eq);
  const double speed_err = std::abs(track.angular_speed - s.omega0 / p.m);

  r.measured["period_reconstruction_err"] = max_diff;
  r.measured["angular_speed_err"] = speed_err;
  r.measured["track_max_deviation"] = track.max_deviation;
  r.tolerance["period_reconstruction_err"] = 1e-13;
  r.tolerance["angular_speed_err"] = 1e-3;
  r.passed = max_diff <= 1e-13 && speed_err <= 1e-3;
  r.detail = fmt::format(
      "u(T) vs u(0) max coefficient diff {:.2e} (tol 1e-13); tracked "
      "angular speed error {:.2e} vs omega0/m (tol 1e-3), track deviation "
      "{:.4f}",
      max_diff, speed_err, track.max_deviation);
  return r;
}

CriterionResult c16_staggered_pair_persistence(const Ctx& ctx) {
  CriterionResult r = make_result(16, "staggered_pair_persistence");
  const CachedRun settled = obtain(ctx, staggered_spec());
  RelaxSpec phase2 = staggered_spec();
  phase2.label = "staggered_k2_eps0.05_persist";
  phase2.exact_steps = true;
  phase2.max_steps = 100000;
  phase2.suffix = "persist";
  const CachedRun persisted = obtain(ctx, phase2, &settled.field);

  const auto obs = detect_vortices(persisted.field);
  int plus = 0, minus = 0;
  double r_plus = 0.0, r_minus = 0.0;
  for (const auto& v : obs) {
    if (v.degree > 0) {
      ++plus;
      r_plus = std::abs(v.position);
    } else {
      ++minus;
      r_minus = std::abs(v.position);
    }
  }
  const long steps = persisted.metrics.at("steps").get<long>();
  r.measured["plus_vortices"] = plus;
  r.measured["minus_vortices"] = minus;
  r.measured["steps"] = double(steps);
  r.measured["momentum_drift"] =
      persisted.metrics.at("max_momentum_drift").get<double>();
  r.tolerance["vortices_per_sign"] = 2;
  r.passed = plus == 2 && minus == 2 && steps >= 100000;
  r.detail = fmt::format(
      "staggered k=2 at eps=0.05 after sector-locked settle + {} constrained "
      "steps: {} positive / {} negative vortices (need 2/2; radii ~ {:.4f} / "
      "{:.4f}), momentum drift {:.1e}",
      steps, plus, minus, r_plus, r_minus,
      persisted.metrics.at("max_momentum_drift").get<double>());
  return r;
}

}  // namespace

std::string format_result(const CriterionResult& r) {
  return fmt::format("{} criterion {:2d} ({}): {}",
                     r.passed ? "PASS" : "FAIL", r.id, r.name, r.detail);
}

namespace {
using Fn = CriterionResult (*)(const Ctx&);
constexpr std::pair<const char*, Fn> kCriteria[16] = {
      {"pvf_conservation", c1_pvf_conservation},
      {"ring_speed_closed_form", c2_ring_speed_closed_form},
      {"staggered_criticality", c3_staggered_criticality},
      {"catalog_cross_validation", c4_catalog_cross_validation},
      {"hessian_null_audit", c5_hessian_null_audit},
      {"energy_gap_pairs", c6_energy_gap_pairs},
      {"momentum_gap", c7_momentum_gap},
      {"symmetry_sector_lock", c8_symmetry_sector_lock},
      {"action_monotonicity", c9_action_monotonicity},
      {"modulus_bound", c10_modulus_bound},
      {"vortex_radius_convergence", c11_vortex_radius_convergence},
      {"jacobian_pairing_accuracy", c12_jacobian_pairing_accuracy},
      {"pohozaev_identity", c13_pohozaev_identity},
      {"force_balance_defect", c14_force_balance_defect},
    {"time_periodicity_and_speed", c15_time_periodicity_and_speed},
    {"staggered_pair_persistence", c16_staggered_pair_persistence},
};
}  // namespace

std::vector<std::pair<int, std::string>> criterion_names() {
  std::vector<std::pair<int, std::string>> out;
  for (int i = 0; i < 16; ++i) out.emplace_back(i + 1, kCriteria[i].first);
  return out;
}

std::vector<CriterionResult> run_criteria(const std::vector<int>& ids,
                                          const std::string& cache_dir) {
  Ctx ctx{cache_dir};
  std::vector<CriterionResult> out;
  std::set<int> seen;
  for (int id : ids) {
    if (id < 1 || id > 16)
      throw PreconditionError(fmt::format("criterion id {} outside 1..16", id));
    if (!seen.insert(id).second) continue;
    CriterionResult r;
    try {
      r = kCriteria[id - 1].second(ctx);
    } catch (const std::exception& e) {
      r = make_result(id, kCriteria[id - 1].first);
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lab
