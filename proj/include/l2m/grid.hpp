#pragma once

#include <span>
#include <string>
#include <vector>

#include "l2m/types.hpp"

namespace l2m {

/// One polar factor of a polydisc grid: |z - center| < radius, sampled with
/// Gauss-Legendre radial nodes and uniform angular nodes.
struct AxisSpec {
  double radius = 1.0;
  int n_radial = 32;
  int n_angular = 32;
  cplx center{0.0, 0.0};
};

/// Sampled polydisc in one or two complex variables with tensor polar
/// quadrature. Node index for dims == 2 is i1 * size(axis 2) + i2; within an
/// axis the index is ir * n_angular + ia.
class GridDomain {
 public:
  GridDomain() = default;
  explicit GridDomain(std::vector<AxisSpec> axes);

  int dims() const { return static_cast<int>(axes_.size()); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  const Point& node(std::size_t i) const { return nodes_[i]; }
  const AxisSpec& axis(int k) const { return axes_[k]; }
  const std::vector<AxisSpec>& axes() const { return axes_; }

  /// Grid of a single axis (as a one-variable domain).
  GridDomain axis_grid(int k) const { return GridDomain({axes_[k]}); }

  /// Euclidean volume of the polydisc.
  double volume() const;
  /// min_k (R_k - |z_k - c_k|); negative outside.
  double boundary_distance(const Point& z) const;
  bool contains(const Point& z) const { return boundary_distance(z) > 0.0; }
  /// Typical node spacing: smallest radial gap over all axes.
  double spacing() const;
  double min_radius() const;

  /// Radial / angular indices of node i along axis k.
  int radial_index(std::size_t i, int k) const;
  int angular_index(std::size_t i, int k) const;

  /// Every node whose per-axis radial and angular indices are multiples of
  /// the strides (deterministic check subsets).
  std::vector<std::size_t> strided_subset(int radial_stride, int angular_stride) const;

  /// Canonical description, equal for grids with identical node layout.
  std::string fingerprint() const;

 private:
  std::vector<AxisSpec> axes_;
  std::vector<Point> nodes_;
  std::vector<double> weights_;
};

/// radii: one per complex variable; resolution: (n_radial, n_angular) per
/// variable, flattened. Throws std::invalid_argument on non-positive radius
/// or a count below 8.
GridDomain make_polydisc_grid(const std::vector<double>& radii, const std::vector<int>& resolution,
                              const std::vector<cplx>& centers = {});

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

/// Sum of f(node) * weight over the grid. Throws NonFiniteIntegrand naming the
/// first non-finite sample.
double quadrature(std::span<const double> f, const GridDomain& dom);

}  // namespace l2m
