#pragma once

// Singular Hermitian metrics on trivial rank-r bundles over a grid.
// Convention throughout: |v|_h^2 = v^T h conj(v).

#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "l2m/grid.hpp"
#include "l2m/levi.hpp"
#include "l2m/polynomial.hpp"
#include "l2m/weight.hpp"

namespace l2m {

using HMatrix = Eigen::MatrixXcd;

/// r x r positive semidefinite Hermitian matrix field. When built from a
/// field function the metric can be evaluated off-grid (needed for curvature
/// stencils); sample-only metrics support the nodewise operations.
class MatrixMetric {
 public:
  using Field = std::function<HMatrix(const Point&)>;

  MatrixMetric(GridDomain grid, int rank, Field field, std::vector<LogTag> det_tags = {},
               std::vector<std::size_t> declared_singular = {});
  static MatrixMetric from_samples(GridDomain grid, std::vector<HMatrix> samples,
                                   std::vector<std::size_t> declared_singular = {});
  static MatrixMetric constant(GridDomain grid, const HMatrix& h);

  int rank() const { return rank_; }
  const GridDomain& grid() const { return grid_; }
  const std::vector<HMatrix>& samples() const { return samples_; }
  const HMatrix& at_node(std::size_t i) const { return samples_[i]; }
  bool has_field() const { return static_cast<bool>(field_); }
  HMatrix at(const Point& z) const;
  const Field& field() const { return field_; }

  /// Nodes where det h < 1e-14 (rC)^r (C the largest entry modulus there),
  /// entries are non-finite, or the builder declared them singular.
  const std::vector<std::size_t>& singular_nodes() const { return singular_; }
  bool is_singular(std::size_t i) const { return singular_mask_[i]; }
  /// Known logarithmic factors of det h (det h ~ prod |z - p|^{2a}).
  const std::vector<LogTag>& det_tags() const { return det_tags_; }

 private:
  MatrixMetric() = default;
  void finish(std::vector<std::size_t> declared);

  GridDomain grid_;
  int rank_ = 0;
  Field field_;
  std::vector<HMatrix> samples_;
  std::vector<LogTag> det_tags_;
  std::vector<std::size_t> singular_;
  std::vector<bool> singular_mask_;
};

/// Holomorphic section v = (v^1, ..., v^r) with polynomial components.
using SectionSample = std::vector<Polynomial>;

/// |v|_h^2 = v^T h conj(v) for a constant or evaluated vector.
double hnorm2(const HMatrix& h, const Eigen::VectorXcd& v);

// ---- constructions -----------------------------------------------------------

/// The rank-2 metric whose Hermitian form is
/// |v|_h^2 = (1 + |z|^2)|v1|^2 + 2 Re(conj(z) v1 conj(v2)) + |z|^2 |v2|^2, det h = |z|^4.
/// As a matrix (|v|_h^2 = v^T h conj(v)) this is ((1 + |z|^2, conj z), (z, |z|^2)):
/// the transpose of the same metric written in the v^H h v convention. In this
/// orientation log |v|_h^2 is subharmonic for every holomorphic v.
MatrixMetric raufi_example(const GridDomain& grid);

/// Transpose-inverse per node. Input singular nodes stay singular; a
/// non-singular node with condition number above 1e14 raises NearSingularError.
MatrixMetric dual_metric(const MatrixMetric& h);

/// Weight log det h; tags of the metric are carried as log-tags.
/// Throws InconsistencyError when det <= 0 at a non-singular node.
Weight det_weight(const MatrixMetric& h);

/// Relative rounding error of det h(z) in floating point: eps * perm(|h|) / det h
/// (the Leibniz terms that cancel). Infinite when det h <= 0.
double det_rounding(const HMatrix& h);

/// is_psh of det_weight(h), skipping singular nodes and nodes where the
/// determinant's rounding error, amplified by the finite-difference stencil
/// (about 2.7 / step^2), exceeds tol / 10. Skipped nodes are counted.
PshReport det_weight_psh(const MatrixMetric& h, const PshOptions& opts = {});

struct EigenBoundsReport {
  double C = 0.0;
  bool lambda_max_ok = true;
  bool lambda_min_ok = true;
  double worst_max_margin = 0.0;  // min over nodes of rC - lambda_max
  double worst_min_margin = 0.0;  // min over nodes of lambda_min - det / (rC)^(r-1)
  std::size_t worst_max_node = 0;
  std::size_t worst_min_node = 0;
  bool ok() const { return lambda_max_ok && lambda_min_ok; }
};

/// Entry-bound eigenvalue estimates lambda_max <= rC and
/// lambda_min >= det h / (rC)^(r-1) on a region. C is the largest entry
/// modulus over the region unless an explicit bound is supplied.
EigenBoundsReport eigen_bounds_check(const MatrixMetric& h, const std::vector<std::size_t>& region,
                                     std::optional<double> C = std::nullopt);
EigenBoundsReport eigen_bounds_check(const MatrixMetric& h, std::optional<double> C = std::nullopt);

struct GriffithsOptions {
  double tol = 1e-6;
  double step = 0.0;               // 0: default_step(grid)
  double degenerate_floor = 1e-2;  // skip nodes where |v|_h^2 < floor * max_nodes |v|_h^2
};

struct GriffithsReport {
  bool pass = true;
  std::size_t worst_section = 0;
  std::size_t worst_node = 0;
  double worst_value = 0.0;
  std::vector<PshReport> per_section;
  std::string note = "sampling test over a finite section list: necessary conditions only";
};

/// Constants e_i, pairwise e_i + e_j and e_i + sqrt(-1) e_j, then n_random
/// seeded sections with complex-normal polynomial components of degree <= 2.
std::vector<SectionSample> default_test_sections(int rank, std::uint64_t seed = 7, int n_random = 8);

/// log |v|_h^2 psh for every section in the list (sampling test).
GriffithsReport griffiths_negative_test(const MatrixMetric& h, const std::vector<SectionSample>& sections,
                                        const GriffithsOptions& opts = {});
/// Negative test applied to the dual metric.
GriffithsReport griffiths_positive_test(const MatrixMetric& h, const std::vector<SectionSample>& sections,
                                        const GriffithsOptions& opts = {});

/// |h_ij|^2 <= h_ii h_jj at every finite node, i != j. Needs rank >= 2.
bool entry_cauchy_schwarz_check(const MatrixMetric& h);

/// Metric pulled back along a one-variable polynomial map source -> target.
/// Throws std::out_of_range when a source node maps outside h's domain.
MatrixMetric pullback_metric(const MatrixMetric& h, const Polynomial& map, const GridDomain& source);

/// Induced metric F^T h conj(F) on the span of the columns of F (r x s).
MatrixMetric restrict_sub(const MatrixMetric& h, const HMatrix& frame);

/// Quotient by a surjection P (q x r), computed as dual(restrict_sub(dual(h), P^T)).
MatrixMetric quotient_metric(const MatrixMetric& h, const HMatrix& surjection);

/// Metric on S^m E for rank 2 in the unnormalized monomial basis
/// e1^m, e1^(m-1) e2, ..., e2^m; entry (k, l) is the x^k y^l coefficient of
/// (h11 + h21 x + h12 y + h22 x y)^m.
MatrixMetric sym_power_metric(const MatrixMetric& h, int m);
HMatrix sym_power_matrix(const HMatrix& h, int m);

/// Dual tautological value |line|^2_{h*} at a node for a unit line in the dual fiber.
double taut_metric(const MatrixMetric& h, const Eigen::VectorXcd& line, std::size_t node);

struct TautBoundReport {
  bool pass = true;
  double C = 0.0;                // entry bound of h* on the region
  double worst_lambda_margin = 0.0;  // min of g* - lambda_min(h*)
  double worst_bound_ratio = 0.0;    // max of g / ((rC)^(r-1) det h)
};

/// Checks g* >= lambda_min(h*) and g = 1/g* <= (rC)^(r-1) det h at the given
/// nodes for every line, C being the entry bound of h* over those nodes.
TautBoundReport taut_bound_check(const MatrixMetric& h, const std::vector<std::size_t>& nodes,
                                 const std::vector<Eigen::VectorXcd>& lines);

// ---- export ------------------------------------------------------------------

/// CSV columns re(z),im(z)[,re(w),im(w)],re(h_11),im(h_11),... row-major.
void write_metric_csv(std::ostream& os, const MatrixMetric& h);
nlohmann::json metric_descriptor(const MatrixMetric& h);
/// Rebuilds a sample-only metric; the grid comes from the descriptor.
MatrixMetric read_metric(std::istream& csv, const nlohmann::json& descriptor);

nlohmann::json grid_to_json(const GridDomain& g);
GridDomain grid_from_json(const nlohmann::json& j);

}  // namespace l2m
