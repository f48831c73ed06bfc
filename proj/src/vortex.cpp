#include "lab/vortex.hpp"

#include <fstream>

#include <fmt/format.h>

namespace lab {

int VortexConfig::total_degree() const {
  int n = 0;
  for (int d : degrees) n += d;
  return n;
}

void VortexConfig::validate() const {
  if (positions.size() != degrees.size())
    throw PreconditionError("vortex config: positions/degrees size mismatch");
  if (positions.empty())
    throw PreconditionError("vortex config: empty");
  for (size_t j = 0; j < positions.size(); ++j) {
    if (degrees[j] != 1 && degrees[j] != -1)
      throw PreconditionError(
          fmt::format("vortex config: degree {} at index {} (must be +-1)",
                      degrees[j], j));
    if (std::abs(positions[j]) >= 1.0)
      throw PreconditionError(
          fmt::format("vortex config: point {} lies outside the open disc "
                      "(|b|={})",
                      j, std::abs(positions[j])));
  }
  for (size_t j = 0; j < positions.size(); ++j)
    for (size_t k = j + 1; k < positions.size(); ++k)
      if (std::abs(positions[j] - positions[k]) == 0.0)
        throw PreconditionError(
            fmt::format("vortex config: points {} and {} coincide", j, k));
}

double renormalized_energy(const VortexConfig& c) {
  c.validate();
  const int N = c.size();
  std::vector<double> pair_terms;   // j != k, ordered pairs
  std::vector<double> image_terms;  // all (j,k) including j == k
  pair_terms.reserve(static_cast<size_t>(N) * (N - 1));
  image_terms.reserve(static_cast<size_t>(N) * N);
  for (int j = 0; j < N; ++j) {
    for (int k = 0; k < N; ++k) {
      const double djdk = static_cast<double>(c.degrees[j] * c.degrees[k]);
      if (j != k)
        pair_terms.push_back(
            djdk * std::log(std::abs(c.positions[j] - c.positions[k])));
      image_terms.push_back(
          djdk *
          std::log(std::abs(1.0 - std::conj(c.positions[j]) * c.positions[k])));
    }
  }
  return PI * stable_sum(pair_terms) - PI * stable_sum(image_terms);
}

namespace {

/// A_l + B_l: the complex "induction sum" felt by vortex l, combining the
/// direct pair field and the boundary image field.
cplx induced_sum(const VortexConfig& c, int l) {
  const int N = c.size();
  std::vector<double> re_terms, im_terms;
  re_terms.reserve(2 * N);
  im_terms.reserve(2 * N);
  for (int k = 0; k < N; ++k) {
    const double dk = static_cast<double>(c.degrees[k]);
    if (k != l) {
      const cplx t = dk / (c.positions[l] - c.positions[k]);
      re_terms.push_back(t.real());
      im_terms.push_back(t.imag());
    }
    const cplx s = dk * std::conj(c.positions[k]) /
                   (1.0 - std::conj(c.positions[k]) * c.positions[l]);
    re_terms.push_back(s.real());
    im_terms.push_back(s.imag());
  }
  return {stable_sum(re_terms), stable_sum(im_terms)};
}

}  // namespace

cplx induction_at(const VortexConfig& c, int l) { return induced_sum(c, l); }

std::vector<cplx> grad_W(const VortexConfig& c) {
  c.validate();
  std::vector<cplx> g(c.size());
  for (int l = 0; l < c.size(); ++l)
    g[l] = 2.0 * PI * static_cast<double>(c.degrees[l]) *
           std::conj(induced_sum(c, l));
  return g;
}

std::vector<cplx> grad_W_fd(const VortexConfig& c, double h) {
  std::vector<cplx> g(c.size());
  for (int l = 0; l < c.size(); ++l) {
    VortexConfig p = c;
    auto eval = [&](cplx delta) {
      p.positions[l] = c.positions[l] + delta;
      return renormalized_energy(p);
    };
    const double gx = (eval({h, 0}) - eval({-h, 0})) / (2 * h);
    const double gy = (eval({0, h}) - eval({0, -h})) / (2 * h);
    g[l] = {gx, gy};
  }
  return g;
}

double momentum_J0(const VortexConfig& c) {
  std::vector<double> terms;
  terms.reserve(c.size());
  for (int j = 0; j < c.size(); ++j)
    terms.push_back(static_cast<double>(c.degrees[j]) *
                    std::norm(c.positions[j]));
  return -0.5 * stable_sum(terms);
}

std::vector<cplx> pvf_rhs(const VortexConfig& c) {
  c.validate();
  std::vector<cplx> v(c.size());
  for (int l = 0; l < c.size(); ++l)
    v[l] = cplx(0.0, 2.0) * std::conj(induced_sum(c, l));
  return v;
}

namespace {

/// Minimal pairwise distance and minimal gap to the boundary circle.
void geometry_margins(const std::vector<cplx>& b, double* min_sep,
                      double* min_gap) {
  *min_sep = 2.0;
  *min_gap = 1.0;
  for (size_t j = 0; j < b.size(); ++j) {
    *min_gap = std::min(*min_gap, 1.0 - std::abs(b[j]));
    for (size_t k = j + 1; k < b.size(); ++k)
      *min_sep = std::min(*min_sep, std::abs(b[j] - b[k]));
  }
}

std::vector<cplx> rhs_at(VortexConfig& scratch, const std::vector<cplx>& b) {
  scratch.positions = b;
  return pvf_rhs(scratch);
}

}  // namespace

Trajectory integrate_pvf(const VortexConfig& c0, double t_end, double dt,
                         const IntegrateOptions& opt) {
  c0.validate();
  if (dt <= 0.0 || t_end <= 0.0)
    throw PreconditionError("integrate_pvf: dt and t_end must be positive");

  Trajectory tr;
  VortexConfig scratch = c0;
  std::vector<cplx> b = c0.positions;
  const double W0 = renormalized_energy(c0);
  const double J0v = momentum_J0(c0);
  const double Wref = std::max(std::abs(W0), 1e-12);
  const double Jref = std::max(std::abs(J0v), 1e-12);

  const int nsteps = static_cast<int>(std::ceil(t_end / dt - 1e-12));
  auto record = [&](double t) {
    scratch.positions = b;
    const double W = renormalized_energy(scratch);
    const double J = momentum_J0(scratch);
    tr.times.push_back(t);
    tr.positions.push_back(b);
    tr.conserved.push_back({t, W, J});
    tr.max_rel_drift_W = std::max(tr.max_rel_drift_W, std::abs(W - W0) / Wref);
    tr.max_rel_drift_J0 =
        std::max(tr.max_rel_drift_J0, std::abs(J - J0v) / Jref);
  };
  record(0.0);

  double t = 0.0;
  const int N = c0.size();
  std::vector<cplx> k1, k2, k3, k4, btmp(N);
  for (int step = 0; step < nsteps; ++step) {
    const double h = std::min(dt, t_end - t);
    k1 = rhs_at(scratch, b);
    for (int j = 0; j < N; ++j) btmp[j] = b[j] + 0.5 * h * k1[j];
    k2 = rhs_at(scratch, btmp);
    for (int j = 0; j < N; ++j) btmp[j] = b[j] + 0.5 * h * k2[j];
    k3 = rhs_at(scratch, btmp);
    for (int j = 0; j < N; ++j) btmp[j] = b[j] + h * k3[j];
    k4 = rhs_at(scratch, btmp);
    for (int j = 0; j < N; ++j)
      b[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    t += h;

    double min_sep, min_gap;
    geometry_margins(b, &min_sep, &min_gap);
    if (min_sep < opt.min_separation || min_gap < opt.min_boundary_gap) {
      tr.aborted = true;
      tr.abort_reason =
          min_sep < opt.min_separation
              ? fmt::format("near-collision at t={:.6g} (min separation {:.3e})",
                            t, min_sep)
              : fmt::format("boundary approach at t={:.6g} (gap {:.3e})", t,
                            min_gap);
      record(t);
      return tr;
    }
    if ((step + 1) % opt.sample_stride == 0 || step + 1 == nsteps) record(t);
  }
  return tr;
}

void write_trajectory_csv(const Trajectory& tr, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  const int N =
      tr.positions.empty() ? 0 : static_cast<int>(tr.positions.front().size());
  out << "t";
  for (int j = 1; j <= N; ++j) out << fmt::format(",re_b{},im_b{}", j, j);
  out << ",W,J0\n";
  for (size_t s = 0; s < tr.times.size(); ++s) {
    out << fmt::format("{:.17g}", tr.times[s]);
    for (int j = 0; j < N; ++j)
      out << fmt::format(",{:.17g},{:.17g}", tr.positions[s][j].real(),
                         tr.positions[s][j].imag());
    out << fmt::format(",{:.17g},{:.17g}\n", tr.conserved[s].W,
                       tr.conserved[s].J0);
  }
}

}  // namespace lab
