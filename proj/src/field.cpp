#include "lab/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "json.hpp"

namespace lab {

int PolarField::mode_index(int j) const {
  const auto& ms = grid.mode_set;
  const auto it = std::lower_bound(ms.begin(), ms.end(), j);
  if (it == ms.end() || *it != j) return -1;
  return static_cast<int>(it - ms.begin());
}

void PolarField::validate() const {
  grid.validate();
  if (k_sym < 1) throw PreconditionError("field: k_sym must be >= 1");
  if (static_cast<int>(c.size()) != n_modes())
    throw PreconditionError("field: mode storage does not match mode set");
  for (const auto& row : c)
    if (static_cast<int>(row.size()) != grid.Nr)
      throw PreconditionError("field: radial storage size mismatch");
  for (int j : grid.mode_set)
    if (j % k_sym != 0)
      throw PreconditionError(
          fmt::format("field: mode {} incompatible with symmetry {}", j, k_sym));
  if (mode_index(n_bc) < 0)
    throw PreconditionError(
        fmt::format("field: boundary winding {} not carried", n_bc));
  if (!(epsilon > 0.0))
    throw PreconditionError("field: epsilon must be positive (or +inf)");
}

void PolarField::enforce_boundary() {
  const int last = grid.Nr - 1;
  for (int a = 0; a < n_modes(); ++a)
    c[a][last] = (grid.mode_set[a] == n_bc) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
}

cplx PolarField::eval(cplx z) const {
  const double rr = std::abs(z);
  const double th = std::arg(z);
  const auto& r = grid.r;
  const int Nr = grid.Nr;

  // four-node cubic Lagrange stencil around rr (clamped to the grid)
  int i1 = static_cast<int>(std::lower_bound(r.begin(), r.end(), rr) -
                            r.begin());
  int i0 = std::clamp(i1 - 2, 0, Nr - 4);
  double L[4];
  for (int t = 0; t < 4; ++t) {
    L[t] = 1.0;
    for (int s = 0; s < 4; ++s)
      if (s != t) L[t] *= (rr - r[i0 + s]) / (r[i0 + t] - r[i0 + s]);
  }

  cplx u = 0.0;
  for (int a = 0; a < n_modes(); ++a) {
    cplx cj = 0.0;
    for (int t = 0; t < 4; ++t) cj += L[t] * c[a][i0 + t];
    u += cj * rot(grid.mode_set[a] * th);
  }
  return u;
}

PolarField make_field(const PolarGrid& grid, double epsilon, int k_sym,
                      int n_bc) {
  PolarField f;
  f.grid = grid;
  f.epsilon = epsilon;
  f.k_sym = k_sym;
  f.n_bc = n_bc;
  f.c.assign(grid.mode_set.size(), std::vector<cplx>(grid.Nr, cplx(0.0)));
  f.enforce_boundary();
  f.validate();
  return f;
}

ThetaTransform::ThetaTransform(const PolarGrid& grid, int k_sym)
    : Nr_(grid.Nr), stride_(k_sym), modes_(grid.mode_set) {
  if (k_sym < 1) throw PreconditionError("transform: k_sym must be >= 1");
  int Jred = 0;
  for (int j : modes_) {
    if (j % k_sym != 0)
      throw PreconditionError("transform: mode set incompatible with k_sym");
    Jred = std::max(Jred, std::abs(j) / k_sym);
  }
  int Nt = 4 * (Jred + 1);
  Nt = ((Nt + 11) / 12) * 12;
  Ntheta_ = Nt;

  bin_.resize(modes_.size());
  for (size_t a = 0; a < modes_.size(); ++a) {
    const int jr = modes_[a] / stride_;
    bin_[a] = ((jr % Ntheta_) + Ntheta_) % Ntheta_;
  }

  buf_.assign(static_cast<size_t>(Nr_) * Ntheta_, cplx(0.0));
  fftw_complex* b = reinterpret_cast<fftw_complex*>(buf_.data());
  const int n[1] = {Ntheta_};
  fwd_ = fftw_plan_many_dft(1, n, Nr_, b, nullptr, 1, Ntheta_, b, nullptr, 1,
                            Ntheta_, FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_ = fftw_plan_many_dft(1, n, Nr_, b, nullptr, 1, Ntheta_, b, nullptr, 1,
                            Ntheta_, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!fwd_ || !bwd_) throw std::runtime_error("transform: FFT planning failed");
}

ThetaTransform::~ThetaTransform() {
  if (fwd_) fftw_destroy_plan(fwd_);
  if (bwd_) fftw_destroy_plan(bwd_);
}

void ThetaTransform::synthesize(const PolarField& f, cplx* out) const {
  if (f.grid.Nr != Nr_ || f.grid.mode_set != modes_)
    throw PreconditionError("transform: field shape mismatch");
  std::fill(buf_.begin(), buf_.end(), cplx(0.0));
  for (size_t a = 0; a < modes_.size(); ++a) {
    const int b = bin_[a];
    for (int i = 0; i < Nr_; ++i)
      buf_[static_cast<size_t>(i) * Ntheta_ + b] = f.c[a][i];
  }
  fftw_execute(bwd_);
  std::copy(buf_.begin(), buf_.end(), out);
}

void ThetaTransform::analyze(const cplx* in, PolarField* f) const {
  if (f->grid.Nr != Nr_ || f->grid.mode_set != modes_)
    throw PreconditionError("transform: field shape mismatch");
  std::copy(in, in + buf_.size(), buf_.begin());
  fftw_execute(fwd_);
  const double scale = 1.0 / Ntheta_;
  for (size_t a = 0; a < modes_.size(); ++a) {
    const int b = bin_[a];
    for (int i = 0; i < Nr_; ++i)
      f->c[a][i] = scale * buf_[static_cast<size_t>(i) * Ntheta_ + b];
  }
}

void save_snapshot(const PolarField& f, const std::string& path) {
  f.validate();
  nlohmann::json h;
  h["format"] = "polar-field-v1";
  h["Nr"] = f.grid.Nr;
  if (std::isinf(f.epsilon))
    h["epsilon"] = "inf";
  else
    h["epsilon"] = f.epsilon;
  h["k_sym"] = f.k_sym;
  h["n_bc"] = f.n_bc;
  h["modes"] = f.grid.mode_set;
  h["r"] = f.grid.r;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << h.dump() << "\n";
  for (const auto& row : f.c)
    for (const cplx& z : row) {
      const double re = z.real(), im = z.imag();
      out.write(reinterpret_cast<const char*>(&re), sizeof(double));
      out.write(reinterpret_cast<const char*>(&im), sizeof(double));
    }
}

PolarField load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string header;
  std::getline(in, header);
  const nlohmann::json h = nlohmann::json::parse(header);
  if (h.at("format") != "polar-field-v1")
    throw std::runtime_error("snapshot: unknown format");

  PolarField f;
  const std::vector<double> nodes = h.at("r").get<std::vector<double>>();
  const std::vector<int> modes = h.at("modes").get<std::vector<int>>();
  f.grid = make_grid_from_nodes(nodes, modes);
  f.epsilon = h.at("epsilon").is_string()
                  ? std::numeric_limits<double>::infinity()
                  : h.at("epsilon").get<double>();
  f.k_sym = h.at("k_sym").get<int>();
  f.n_bc = h.at("n_bc").get<int>();
  f.c.assign(modes.size(), std::vector<cplx>(f.grid.Nr));
  for (auto& row : f.c)
    for (cplx& z : row) {
      double re, im;
      in.read(reinterpret_cast<char*>(&re), sizeof(double));
      in.read(reinterpret_cast<char*>(&im), sizeof(double));
      z = {re, im};
    }
  if (!in) throw std::runtime_error("snapshot: truncated payload");
  f.validate();
  return f;
}

void write_field_csv(const PolarField& f, const std::string& path,
                     int Ntheta_out) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "r,theta,abs_u,arg_u\n";
  for (int i = 0; i < f.grid.Nr; ++i) {
    for (int q = 0; q < Ntheta_out; ++q) {
      const double th = 2.0 * PI * q / Ntheta_out;
      cplx u = 0.0;
      for (int a = 0; a < f.n_modes(); ++a)
        u += f.c[a][i] * rot(f.grid.mode_set[a] * th);
      out << fmt::format("{:.9g},{:.9g},{:.9g},{:.9g}\n", f.grid.r[i], th,
                         std::abs(u), std::arg(u));
    }
  }
}

}  // namespace lab
