#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "l2m/optimizer.hpp"
#include "l2m/sections.hpp"
#include "l2m/weight.hpp"

namespace l2m {

/// L^{2/m} pseudo-norm (int |u|^{2/m} e^{-phi/m})^{m/2}. Throws
/// IntegrabilityError when a pole of e^{-phi} makes the integral infinite.
double pseudo_norm(const Section& u, const Weight& w, int m);

/// Membership of u in the ideal J_m(phi): int |u|^{2/m} e^{-phi} finite near
/// every pole (decided by exponent arithmetic at the weight's log-tags).
bool j_m_integrable(const Section& u, const Weight& w, int m);

struct BergmanResult {
  double value = 0.0;                 // B_m(x)
  std::optional<Section> extremal;    // pseudo-norm 1 extremal section; empty when B_m(x) = 0
  int restarts = 0;
  double gap = 0.0;                   // best - second-best local optimum over restarts
  bool zero = false;                  // no admissible section is nonzero at x
};

/// m-Bergman kernel sup |u(x)|^2 / ||u||_m^2. m = 1 uses the reproducing-kernel
/// closed form; m >= 2 the multi-start optimizer.
BergmanResult bergman_kernel(const SectionSpace& space, const Weight& w, int m, const Point& x, int restarts = 32,
                             std::uint64_t seed = 1);
/// Always runs the optimizer (also for m = 1, as a cross-check of the closed form).
BergmanResult bergman_optimize(const SectionSpace& space, const Weight& w, int m, const Point& x, int restarts = 32,
                               std::uint64_t seed = 1);
/// Reproducing kernel v(x)^* G^{-1} v(x). Throws ConditioningError if G is not
/// positive definite, IntegrabilityError for non-integrable basis pairs.
double bergman_closed_form_m1(const SectionSpace& space, const Weight& w, const Point& x);

/// B_m at every node of the space's grid (deterministic; parallel over nodes).
std::vector<double> kernel_field(const SectionSpace& space, const Weight& w, int m, const OptimizerOptions& opts = {});

/// Weight of h_{m-1} = (B_m^{-1})^{(m-1)/m} h^{1/m}:
///   phi_{m-1} = ((m-1)/m) log B_m + phi/m  (sampled on the grid).
/// m = 1 returns w unchanged; B_m = 0 gives -inf (metric +inf).
Weight twisted_weight_h_m_minus_1(const GridDomain& grid, const std::vector<double>& B, const Weight& w, int m);

/// Narasimhan-Simha form g_m(u, v) = int u conj(v) e^{-phi_{m-1}}; equals gram(space, w) at m = 1.
Eigen::MatrixXcd ns_gram(const SectionSpace& space, const Weight& w, int m, const OptimizerOptions& opts = {});
/// Same from a precomputed B_m field on the space's grid.
Eigen::MatrixXcd ns_gram_from_field(const SectionSpace& space, const Weight& w, int m, const std::vector<double>& B);

struct ExtremalReport {
  bool pass = true;
  double worst_ratio = 0.0;  // max |u(x)|^2 / (B_m(x) ||u||_m^2)
  std::size_t worst_probe = 0;
  std::size_t worst_point = 0;
};

/// |u(x)|^2 <= B_m(x) ||u||_m^2 (1 + 1e-8) for every probe and point;
/// B holds B_m at the points.
ExtremalReport extremal_bound_check(const SectionSpace& space, const Weight& w, int m, const std::vector<Section>& probes,
                                    const std::vector<Point>& points, const std::vector<double>& B);

/// Pointwise Hölder chain |u|^2 e^{-phi_{m-1}} <= ||u||_m^{2(m-1)/m} (|u|^2 e^{-phi})^{1/m} (1 + 1e-8)
/// at every node for every basis section; B is the B_m field on the grid.
/// Returns the worst ratio lhs / rhs.
double holder_chain_worst_ratio(const SectionSpace& space, const Weight& w, int m, const std::vector<double>& B);

}  // namespace l2m
