#include "lab/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "lab/vortex.hpp"

namespace lab {

namespace {

// Three-point derivative of a nonuniformly sampled function at every node
// (centered inside, one-sided at the ends).
std::vector<cplx> deriv_all(const std::vector<double>& r,
                            const std::vector<cplx>& c) {
  const int N = int(r.size());
  std::vector<cplx> d(N);
  for (int i = 0; i < N; ++i) {
    const int s = std::clamp(i, 1, N - 2);
    const double x0 = r[s - 1] - r[i], x1 = r[s] - r[i], x2 = r[s + 1] - r[i];
    // p'(0) for the quadratic p through the samples at offsets x0, x1, x2.
    const double a0 = (x1 + x2) / ((x0 - x1) * (x0 - x2));
    const double a1 = (x0 + x2) / ((x1 - x0) * (x1 - x2));
    const double a2 = (x0 + x1) / ((x2 - x0) * (x2 - x1));
    d[i] = -(a0 * c[s - 1] + a1 * c[s] + a2 * c[s + 1]);
  }
  return d;
}

// Evaluate sum_a coeff[a][i] e^{i j_a theta_q} on a full-circle raster of
// Nt equally spaced angles; out[i * Nt + q].
void raster_modes(const std::vector<int>& modes,
                  const std::vector<std::vector<cplx>>& coeff, int Nr, int Nt,
                  std::vector<cplx>* out) {
  out->assign(size_t(Nr) * Nt, cplx(0, 0));
  std::vector<cplx> phase(Nt);
  for (size_t a = 0; a < modes.size(); ++a) {
    const double j = modes[a];
    for (int q = 0; q < Nt; ++q) {
      const double th = 2.0 * PI * q / Nt;
      phase[q] = std::polar(1.0, j * th);
    }
    for (int i = 0; i < Nr; ++i) {
      const cplx ci = coeff[a][i];
      if (ci == cplx(0, 0)) continue;
      cplx* row = out->data() + size_t(i) * Nt;
      for (int q = 0; q < Nt; ++q) row[q] += ci * phase[q];
    }
  }
}

int raster_angles(const PolarField& f, double scale) {
  int max_j = 1;
  for (int j : f.grid.mode_set) max_j = std::max(max_j, std::abs(j));
  int want = std::max(128, 4 * (max_j + 1));
  if (std::isfinite(f.epsilon))
    want = std::max(want, int(std::ceil(scale / f.epsilon)));
  return ((want + 7) / 8) * 8;
}

double min_spacing(const PolarGrid& g) {
  double h = g.r[0];
  for (int i = 1; i < g.Nr; ++i) h = std::min(h, g.r[i] - g.r[i - 1]);
  return h;
}

// <Ju, phi> with Ju = (1/r) Im(conj(u_r) u_theta) on the polar raster.
double pair_jacobian(const PolarField& f,
                     const std::function<double(cplx)>& phi, int Nt) {
  const PolarGrid& g = f.grid;
  const int Nr = g.Nr;
  std::vector<std::vector<cplx>> dc(f.n_modes()), ct(f.n_modes());
  for (int a = 0; a < f.n_modes(); ++a) {
    dc[a] = deriv_all(g.r, f.c[a]);
    ct[a].resize(Nr);
    const cplx ij(0.0, double(g.mode_set[a]));
    for (int i = 0; i < Nr; ++i) ct[a][i] = ij * f.c[a][i];
  }
  std::vector<cplx> ur, ut;
  raster_modes(g.mode_set, dc, Nr, Nt, &ur);
  raster_modes(g.mode_set, ct, Nr, Nt, &ut);
  const double dtheta = 2.0 * PI / Nt;
  double s = 0.0;
  for (int i = 0; i < Nr; ++i) {
    const double w = cell_volume(g, i) * dtheta / g.r[i];
    for (int q = 0; q < Nt; ++q) {
      const size_t idx = size_t(i) * Nt + q;
      const double ju = std::imag(std::conj(ur[idx]) * ut[idx]);
      const double th = 2.0 * PI * q / Nt;
      s += w * ju * phi(std::polar(g.r[i], th));
    }
  }
  return s;
}

struct Component {
  std::vector<std::pair<int, int>> cells;  // (i, q)
  double min_mod = 1e9;
  double max_r = 0.0;
  cplx centroid{0, 0};
  double weight = 0.0;
  double spread = 0.0;  // largest distance of a cell from the centroid
};

int winding_on_circle(const PolarField& f, cplx center, double radius) {
  const int M = 128;
  double total = 0.0;
  cplx prev = f.eval(center + std::polar(radius, 0.0));
  for (int s = 1; s <= M; ++s) {
    const double th = 2.0 * PI * s / M;
    const cplx cur = f.eval(center + std::polar(radius, th));
    total += std::arg(cur / prev);
    prev = cur;
  }
  return int(std::lround(total / (2.0 * PI)));
}

cplx newton_refine(const PolarField& f, cplx z0, double eps, double trust) {
  cplx z = z0;
  const double h = std::isfinite(eps) ? eps / 50.0 : 1e-4;
  for (int it = 0; it < 10; ++it) {
    const cplx u = f.eval(z);
    const cplx ux = (f.eval(z + h) - f.eval(z - h)) / (2.0 * h);
    const cplx uy = (f.eval(z + cplx(0, h)) - f.eval(z - cplx(0, h))) /
                    (2.0 * h);
    // Solve [Re ux Re uy; Im ux Im uy] step = -u.
    const double det = ux.real() * uy.imag() - uy.real() * ux.imag();
    if (std::abs(det) < 1e-14) break;
    const double sx = (-u.real() * uy.imag() + u.imag() * uy.real()) / det;
    const double sy = (-ux.real() * u.imag() + u.real() * ux.imag()) / det;
    const cplx step(sx, sy);
    z += step;
    if (std::abs(z - z0) > trust) return z0;  // refinement ran away
    if (std::abs(step) < 1e-13) break;
  }
  return (std::abs(z) < 1.0) ? z : z0;
}

// Minimum-cost degree-compatible assignment between detected and reference
// vortices; returns the permutation ref index -> detection index and the
// cost (sum of squared distances).  Small N: enumerate within degree groups.
struct Assignment {
  std::vector<int> ref_to_det;
  double cost = 0.0;
  double worst = 0.0;
};

Assignment best_assignment(const std::vector<cplx>& ref_pos,
                           const std::vector<int>& ref_deg,
                           const std::vector<VortexObservation>& det) {
  const int N = int(ref_pos.size());
  // Group indices by degree.
  std::vector<int> degs;
  for (int d : ref_deg)
    if (std::find(degs.begin(), degs.end(), d) == degs.end())
      degs.push_back(d);

  Assignment out;
  out.ref_to_det.assign(N, -1);
  out.cost = 0.0;
  out.worst = 0.0;
  for (int d : degs) {
    std::vector<int> ri, di;
    for (int i = 0; i < N; ++i)
      if (ref_deg[i] == d) ri.push_back(i);
    for (int i = 0; i < int(det.size()); ++i)
      if (det[i].degree == d) di.push_back(i);
    if (ri.size() != di.size())
      throw SolverFailure(fmt::format(
          "tracking: {} reference vortices of degree {} but {} detections",
          ri.size(), d, di.size()));
    std::vector<int> perm(di.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    std::vector<int> best_perm = perm;
    do {
      double c = 0.0;
      for (size_t s = 0; s < ri.size(); ++s)
        c += std::norm(ref_pos[ri[s]] - det[di[perm[s]]].position);
      if (c < best) {
        best = c;
        best_perm = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (size_t s = 0; s < ri.size(); ++s) {
      out.ref_to_det[ri[s]] = di[best_perm[s]];
      const double dist =
          std::abs(ref_pos[ri[s]] - det[di[best_perm[s]]].position);
      out.worst = std::max(out.worst, dist);
    }
    out.cost += best;
  }
  return out;
}

}  // namespace

double jacobian_pairing(const PolarField& field,
                        const std::function<double(cplx)>& testfn) {
  field.validate();
  return pair_jacobian(field, testfn, raster_angles(field, 4.0 * PI));
}

std::vector<VortexObservation> detect_vortices(const PolarField& field) {
  field.validate();
  const PolarGrid& g = field.grid;
  const double eps = field.epsilon;
  if (std::isfinite(eps) && eps < 4.0 * min_spacing(g))
    throw PreconditionError(fmt::format(
        "vortex detection: cores of size {} unresolved by spacing {}", eps,
        min_spacing(g)));

  const int Nr = g.Nr;
  const int Nt = raster_angles(field, 4.0 * PI);
  std::vector<cplx> u;
  raster_modes(g.mode_set, field.c, Nr, Nt, &u);

  const double band =
      std::isfinite(eps) ? 1.0 - 2.0 * eps : 1.0 - 2.0 * min_spacing(g);
  std::vector<char> mask(u.size()), seen(u.size(), 0);
  for (size_t s = 0; s < u.size(); ++s) mask[s] = std::abs(u[s]) <= 0.5;

  std::vector<Component> comps;
  std::vector<size_t> stack;
  for (size_t s0 = 0; s0 < u.size(); ++s0) {
    if (!mask[s0] || seen[s0]) continue;
    Component comp;
    stack.assign(1, s0);
    seen[s0] = 1;
    while (!stack.empty()) {
      const size_t s = stack.back();
      stack.pop_back();
      const int i = int(s / Nt), q = int(s % Nt);
      comp.cells.push_back({i, q});
      const double mod = std::abs(u[s]);
      comp.min_mod = std::min(comp.min_mod, mod);
      comp.max_r = std::max(comp.max_r, g.r[i]);
      const double w = 0.5 - mod;
      const cplx z = std::polar(g.r[i], 2.0 * PI * q / Nt);
      comp.centroid += w * z;
      comp.weight += w;
      const auto push = [&](int ii, int qq) {
        if (ii < 0 || ii >= Nr) return;
        const size_t t = size_t(ii) * Nt + ((qq % Nt) + Nt) % Nt;
        if (mask[t] && !seen[t]) {
          seen[t] = 1;
          stack.push_back(t);
        }
      };
      push(i - 1, q);
      push(i + 1, q);
      push(i, q - 1);
      push(i, q + 1);
    }
    if (comp.weight > 0.0) comp.centroid /= comp.weight;
    for (auto [i, q] : comp.cells)
      comp.spread = std::max(
          comp.spread,
          std::abs(std::polar(g.r[i], 2.0 * PI * q / Nt) - comp.centroid));
    if (comp.max_r < band) comps.push_back(std::move(comp));
  }

  std::vector<VortexObservation> out;
  const double loc =
      std::isfinite(eps) ? 4.0 * eps : 8.0 * min_spacing(g);
  for (const Component& comp : comps) {
    VortexObservation obs;
    const double trust = std::max(loc, 2.0 * comp.spread);
    obs.position = newton_refine(field, comp.centroid, eps, trust);
    obs.localization_radius = loc;
    obs.modulus_min =
        std::min(comp.min_mod, std::abs(field.eval(obs.position)));
    obs.degree = winding_on_circle(field, obs.position, loc);
    if (obs.degree != 0) out.push_back(obs);
  }
  std::sort(out.begin(), out.end(),
            [](const VortexObservation& a, const VortexObservation& b) {
              const double ra = std::abs(a.position), rb = std::abs(b.position);
              if (ra != rb) return ra < rb;
              return std::arg(a.position) < std::arg(b.position);
            });
  return out;
}

PohozaevReport pohozaev_residual(const PolarField& field,
                                 const SolverParams& params) {
  field.validate();
  check_ansatz_consistency(field, params);
  const PolarGrid& g = field.grid;
  const int Nr = g.Nr;
  PohozaevReport rep;

  // Boundary flux: normal derivative per mode at r = 1, one-sided quadratic.
  double flux = 0.0;
  for (int a = 0; a < field.n_modes(); ++a) {
    const std::vector<cplx>& c = field.c[a];
    const double x0 = g.r[Nr - 3] - 1.0, x1 = g.r[Nr - 2] - 1.0, x2 = 0.0;
    const double a0 = (x1 + x2) / ((x0 - x1) * (x0 - x2));
    const double a1 = (x0 + x2) / ((x1 - x0) * (x1 - x2));
    const double a2 = (x0 + x1) / ((x2 - x0) * (x2 - x1));
    const cplx dn = -(a0 * c[Nr - 3] + a1 * c[Nr - 2] + a2 * c[Nr - 1]);
    flux += std::norm(dn);
  }
  rep.boundary_flux = 0.5 * 2.0 * PI * flux;

  rep.core_constant = PI * double(field.n_bc) * field.n_bc;

  // Mass and potential by the shared quadratures.
  double mass = 0.0;
  for (int a = 0; a < field.n_modes(); ++a)
    for (int i = 0; i < Nr; ++i)
      mass += cell_volume(g, i) * std::norm(field.c[a][i]);
  mass *= 2.0 * PI;

  if (std::isfinite(field.epsilon)) {
    const int Nt = raster_angles(field, 4.0 * PI);
    std::vector<cplx> u;
    raster_modes(g.mode_set, field.c, Nr, Nt, &u);
    const double dtheta = 2.0 * PI / Nt;
    double pot = 0.0;
    for (int i = 0; i < Nr; ++i) {
      double row = 0.0;
      for (int q = 0; q < Nt; ++q)
        row += sqr(1.0 - std::norm(u[size_t(i) * Nt + q]));
      pot += cell_volume(g, i) * dtheta * row;
    }
    rep.potential = pot / (2.0 * field.epsilon * field.epsilon);
  }

  rep.rotation_mass = params.omega * params.k * (PI - mass);
  const double moment = pair_jacobian(
      field, [](cplx z) { return std::norm(z); },
      raster_angles(field, 4.0 * PI));
  rep.moment_pairing = params.omega / params.m * moment;

  rep.residual = std::abs((rep.boundary_flux - rep.core_constant +
                           rep.potential) -
                          (rep.rotation_mass - rep.moment_pairing));
  return rep;
}

std::vector<double> vanishing_gradient_defects(const VortexConfig& config,
                                               double omega0, int m) {
  config.validate();
  if (m == 0) throw PreconditionError("vanishing gradient: m must be nonzero");
  const std::vector<cplx> grad = grad_W(config);
  std::vector<double> out(config.positions.size());
  for (size_t j = 0; j < out.size(); ++j)
    out[j] = std::abs(grad[j] + double(config.degrees[j]) * PI *
                                    (omega0 / m) * config.positions[j]);
  return out;
}

std::vector<double> vanishing_gradient_check(const PolarField& field,
                                             const SolverParams& params) {
  const std::vector<VortexObservation> obs = detect_vortices(field);
  if (obs.empty())
    throw SolverFailure("vanishing gradient: no vortices detected");
  VortexConfig cfg;
  for (const VortexObservation& o : obs) {
    cfg.positions.push_back(o.position);
    cfg.degrees.push_back(o.degree);
  }
  return vanishing_gradient_defects(cfg, params.omega, params.m);
}

TrackReport compare_to_pvf(const std::vector<PolarField>& fields_over_time,
                           const std::vector<double>& times,
                           const RelativeEquilibrium& equilibrium) {
  if (fields_over_time.empty())
    throw PreconditionError("tracking: no snapshots given");
  if (fields_over_time.size() != times.size())
    throw PreconditionError("tracking: snapshot/time count mismatch");
  equilibrium.family.validate();
  const VortexConfig ref = equilibrium.family.expand();
  const int N = ref.size();
  const double omega_tilde =
      equilibrium.omega0 / double(equilibrium.family.ansatz_m());

  std::vector<std::vector<VortexObservation>> det(fields_over_time.size());
  for (size_t s = 0; s < fields_over_time.size(); ++s) {
    det[s] = detect_vortices(fields_over_time[s]);
    if (int(det[s].size()) != N)
      throw SolverFailure(fmt::format(
          "tracking: snapshot {} has {} detections, reference has {}", s,
          det[s].size(), N));
  }

  auto rotated_ref = [&](double theta, double t) {
    std::vector<cplx> pos(N);
    const cplx rot = std::polar(1.0, theta - omega_tilde * t);
    for (int j = 0; j < N; ++j) pos[j] = rot * ref.positions[j];
    return pos;
  };
  auto cost_at = [&](double theta) {
    return best_assignment(rotated_ref(theta, times[0]), ref.degrees, det[0])
        .cost;
  };

  // Coarse scan then golden-section refinement for the alignment angle.
  const int S = 720;
  double best_theta = 0.0, best_cost = 1e300;
  for (int s = 0; s < S; ++s) {
    const double th = 2.0 * PI * s / S;
    const double c = cost_at(th);
    if (c < best_cost) {
      best_cost = c;
      best_theta = th;
    }
  }
  {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = best_theta - 2.0 * PI / S, b = best_theta + 2.0 * PI / S;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = cost_at(x1), f2 = cost_at(x2);
    for (int it = 0; it < 80 && (b - a) > 1e-12; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = cost_at(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = cost_at(x2);
      }
    }
    best_theta = 0.5 * (a + b);
  }

  TrackReport rep;
  rep.theta_star = std::fmod(best_theta + 4.0 * PI, 2.0 * PI);
  rep.deviations.resize(fields_over_time.size());
  std::vector<double> track_arg(fields_over_time.size());
  for (size_t s = 0; s < fields_over_time.size(); ++s) {
    const Assignment asg = best_assignment(rotated_ref(best_theta, times[s]),
                                           ref.degrees, det[s]);
    rep.deviations[s] = asg.worst;
    rep.max_deviation = std::max(rep.max_deviation, asg.worst);
    track_arg[s] = std::arg(det[s][asg.ref_to_det[0]].position);
  }

  // Unwrapped least-squares slope of the tracked argument.
  if (times.size() >= 2) {
    for (size_t s = 1; s < track_arg.size(); ++s) {
      double d = track_arg[s] - track_arg[s - 1];
      while (d > PI) d -= 2.0 * PI;
      while (d < -PI) d += 2.0 * PI;
      track_arg[s] = track_arg[s - 1] + d;
    }
    double tbar = 0.0, pbar = 0.0;
    for (size_t s = 0; s < times.size(); ++s) {
      tbar += times[s];
      pbar += track_arg[s];
    }
    tbar /= times.size();
    pbar /= times.size();
    double num = 0.0, den = 0.0;
    for (size_t s = 0; s < times.size(); ++s) {
      num += (times[s] - tbar) * (track_arg[s] - pbar);
      den += sqr(times[s] - tbar);
    }
    if (den > 0.0) rep.angular_speed = -num / den;
  }
  return rep;
}

}  // namespace lab
