// Small shared utilities: complex alias, order-independent summation,
// and error types used across the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace lab {

using cplx = std::complex<double>;

inline constexpr double PI = 3.14159265358979323846264338327950288;

/// Thrown when an iterative solver fails to reach its tolerance.
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a routine's documented precondition is violated.
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Sum of a list of doubles that is exactly independent of input order:
/// terms are sorted by (value, then original order collapses since equal
/// values add identically) before accumulation.  Used so that relabeling
/// vortices reproduces energies and momenta bitwise.
inline double stable_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

inline double sqr(double x) { return x * x; }

/// exp(i*theta)
inline cplx rot(double theta) { return {std::cos(theta), std::sin(theta)}; }

}  // namespace lab
