#pragma once

#include <functional>
#include <vector>

#include "l2m/grid.hpp"
#include "l2m/weight.hpp"

namespace l2m {

using ScalarFn = std::function<double(const Point&)>;

/// Complex Hessian (d^2 f / dz_j dzbar_k) at a point; h22/h12 unused for dims 1.
struct LeviMatrix {
  double h11 = 0.0;
  double h22 = 0.0;
  cplx h12{};
  int dims = 1;
  double min_eig() const;
};

/// Fourth-order central differences along the real directions v and iv for
/// each complex direction; the stencil reaches 2 * step from x.
LeviMatrix levi_matrix(const ScalarFn& f, int dims, const Point& x, double step);
double levi_min_eig(const ScalarFn& f, int dims, const Point& x, double step);

/// Levi minimum eigenvalue of the full weight at x. Throws std::out_of_range
/// when the stencil leaves the domain or comes within 2 * step of a log-tag.
double levi_min_eig(const Weight& w, const Point& x, double step, const GridDomain& dom);

/// Default finite-difference step: 1e-3 times the smallest domain radius.
double default_step(const GridDomain& dom);

struct PshOptions {
  double tol = 1e-6;
  double step = 0.0;                        // 0 selects default_step
  const std::vector<std::size_t>* nodes = nullptr;  // restrict to these nodes
  std::function<bool(std::size_t)> skip;    // extra exclusions (singular nodes, degenerate sections)
};

struct PshReport {
  bool psh = true;
  std::size_t worst_node = 0;
  Point worst_point{};
  double worst_value = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

/// Sampling psh test of a weight: Levi min eigenvalue of the smooth part at
/// every admissible node (stencil inside the domain). Tags with coef >= 0
/// are psh and excluded from stencils; a tag with coef < 0 inside the domain
/// makes the weight non-psh.
PshReport is_psh(const Weight& w, const GridDomain& dom, const PshOptions& opts = {});

/// Same scan for an arbitrary function on the grid's nodes.
PshReport is_psh_fn(const ScalarFn& f, const GridDomain& dom, const PshOptions& opts = {});

}  // namespace l2m
