#pragma once

// Cell-centered discretization of the ball B_R in the radial coordinate. Volumes
// and face areas are kept as logarithms because psi^{N-1} overflows on the
// exponentially warped models long before the grids of interest end.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "pme/error.hpp"
#include "pme/geometry.hpp"

namespace pme {

namespace detail {

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> gl_nodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> gl_weights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

inline double log_sum_exp(std::span<const double> x) {
  const double mx = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : x) s += std::exp(v - mx);
  return mx + std::log(s);
}

}  // namespace detail

class RadialGrid {
 public:
  /// Uniform grid with `cells` cells on [0, R].
  RadialGrid(const ModelManifold& M, double R, std::size_t cells) : R_(R) {
    if (!(R > 0.0)) throw DomainError("grid radius must be positive");
    if (cells < 2) throw DomainError("grid needs at least two cells");
    edges_.resize(cells + 1);
    for (std::size_t j = 0; j <= cells; ++j) edges_[j] = R * static_cast<double>(j) / static_cast<double>(cells);
    edges_.back() = R;
    build(M);
  }

  /// Arbitrary strictly increasing edges starting at 0.
  RadialGrid(const ModelManifold& M, std::vector<double> edges) : edges_(std::move(edges)) {
    if (edges_.size() < 3 || edges_.front() != 0.0) throw DomainError("grid edges must start at 0 and span >= 2 cells");
    for (std::size_t j = 1; j < edges_.size(); ++j) {
      if (!(edges_[j] > edges_[j - 1])) throw DomainError("grid edges must be strictly increasing");
    }
    R_ = edges_.back();
    build(M);
  }

  std::size_t size() const noexcept { return centers_.size(); }
  double radius() const noexcept { return R_; }
  /// Width of cell j.
  double width(std::size_t j) const { return edges_[j + 1] - edges_[j]; }
  /// Largest cell width.
  double h() const noexcept { return h_max_; }
  const std::vector<double>& edges() const noexcept { return edges_; }
  const std::vector<double>& centers() const noexcept { return centers_; }
  /// log of |S^{N-1}| * integral of psi^{N-1} over cell j.
  const std::vector<double>& log_volumes() const noexcept { return log_vol_; }
  /// log of the area |S^{N-1}| psi(rho_j)^{N-1} of face j; -inf at the pole.
  const std::vector<double>& log_face_areas() const noexcept { return log_area_; }
  /// Flux coefficients A_{j+1} / (V_j d_{j+1}) and A_j / (V_j d_j).
  const std::vector<double>& kappa_plus() const noexcept { return kp_; }
  const std::vector<double>& kappa_minus() const noexcept { return km_; }
  /// max_j log V_j, the unit in which masses are reported.
  double log_mass_scale() const noexcept { return log_scale_; }
  /// V_j / exp(log_mass_scale).
  const std::vector<double>& scaled_volumes() const noexcept { return scaled_vol_; }
  /// A_J / (d_J exp(log_mass_scale)): outflow per unit jump of u^m at the boundary.
  double scaled_boundary_conductance() const noexcept { return boundary_cond_; }

  /// Cell averages of f with respect to the Riemannian volume.
  template <class F>
  std::vector<double> cell_averages(const ModelManifold& M, F&& f) const {
    std::vector<double> out(size());
    std::array<double, 8> lw{};
    for (std::size_t j = 0; j < size(); ++j) {
      const double a = edges_[j], b = edges_[j + 1];
      for (std::size_t k = 0; k < 8; ++k) {
        const double x = 0.5 * (a + b) + 0.5 * (b - a) * detail::gl_nodes[k];
        lw[k] = std::log(detail::gl_weights[k]) + (M.dim() - 1) * M.log_psi(x);
      }
      const double mx = *std::max_element(lw.begin(), lw.end());
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < 8; ++k) {
        const double x = 0.5 * (a + b) + 0.5 * (b - a) * detail::gl_nodes[k];
        const double w = std::exp(lw[k] - mx);
        num += w * f(x);
        den += w;
      }
      out[j] = num / den;
    }
    return out;
  }

  /// f evaluated at the cell centers.
  template <class F>
  std::vector<double> sample_centers(F&& f) const {
    std::vector<double> out(size());
    for (std::size_t j = 0; j < size(); ++j) out[j] = f(centers_[j]);
    return out;
  }

 private:
  void build(const ModelManifold& M) {
    const std::size_t J = edges_.size() - 1;
    const double log_s = std::log(unit_sphere_area(M.dim()));
    const int n1 = M.dim() - 1;
    centers_.resize(J);
    log_vol_.resize(J);
    log_area_.resize(J + 1);
    h_max_ = 0.0;
    std::array<double, 8> terms{};
    for (std::size_t j = 0; j < J; ++j) {
      const double a = edges_[j], b = edges_[j + 1];
      centers_[j] = 0.5 * (a + b);
      h_max_ = std::max(h_max_, b - a);
      for (std::size_t k = 0; k < 8; ++k) {
        const double x = 0.5 * (a + b) + 0.5 * (b - a) * detail::gl_nodes[k];
        terms[k] = std::log(detail::gl_weights[k]) + n1 * M.log_psi(x);
      }
      log_vol_[j] = log_s + std::log(0.5 * (b - a)) + detail::log_sum_exp(terms);
    }
    log_area_[0] = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j <= J; ++j) log_area_[j] = log_s + n1 * M.log_psi(edges_[j]);

    kp_.assign(J, 0.0);
    km_.assign(J, 0.0);
    for (std::size_t j = 0; j < J; ++j) {
      const double d_plus = (j + 1 < J) ? centers_[j + 1] - centers_[j] : R_ - centers_[j];
      kp_[j] = std::exp(log_area_[j + 1] - log_vol_[j] - std::log(d_plus));
      if (j > 0) km_[j] = std::exp(log_area_[j] - log_vol_[j] - std::log(centers_[j] - centers_[j - 1]));
    }
    log_scale_ = *std::max_element(log_vol_.begin(), log_vol_.end());
    scaled_vol_.resize(J);
    for (std::size_t j = 0; j < J; ++j) scaled_vol_[j] = std::exp(log_vol_[j] - log_scale_);
    boundary_cond_ = std::exp(log_area_[J] - log_scale_ - std::log(R_ - centers_[J - 1]));
  }

  double R_ = 0.0;
  double h_max_ = 0.0;
  std::vector<double> edges_, centers_, log_vol_, log_area_, kp_, km_, scaled_vol_;
  double log_scale_ = 0.0;
  double boundary_cond_ = 0.0;
};

/// Per-cell averages of a (signed) solution at time t.
struct RadialField {
  double t = 0.0;
  std::vector<double> u;
};

/// Signed power |u|^{m-1} u.
inline double signed_pow(double u, double m) { return u == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(u), m), u); }

/// Volume integral of u in units of exp(grid.log_mass_scale()).
inline double scaled_mass(const RadialGrid& g, std::span<const double> u) {
  double s = 0.0;
  const auto& w = g.scaled_volumes();
  for (std::size_t j = 0; j < u.size(); ++j) s += w[j] * u[j];
  return s;
}

}  // namespace pme
