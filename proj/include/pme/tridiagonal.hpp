#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace pme {

/// Thomas algorithm for lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
/// lower[0] and upper[n-1] are ignored. Returns false on a zero pivot. No pivoting:
/// meant for the diagonally dominant M-matrices produced by the solver.
inline bool solve_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                              const std::vector<double>& upper, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  if (n == 0) return true;
  std::vector<double> c(n);
  double denom = diag[0];
  if (denom == 0.0 || !std::isfinite(denom)) return false;
  c[0] = upper[0] / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - lower[i] * c[i - 1];
    if (denom == 0.0 || !std::isfinite(denom)) return false;
    c[i] = (i + 1 < n) ? upper[i] / denom : 0.0;
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
  return true;
}

}  // namespace pme
