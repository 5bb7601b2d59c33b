#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "l2m/levi.hpp"
#include "l2m/optimizer.hpp"
#include "l2m/sections.hpp"
#include "l2m/weight.hpp"

namespace l2m {

/// One-parameter family of fibers: base disc in t, a fixed section basis on
/// the fiber disc in z, and a joint weight phi(t, z) (two-variable Weight with
/// t as the first variable).
struct Family {
  GridDomain base;
  SectionSpace fiber;
  Weight phi;
  int m = 1;
  std::string label;
};

/// Validates dimensions (base and fiber one-variable, weight two-variable, m >= 1).
Family make_family(GridDomain base, SectionSpace fiber, Weight phi, int m, std::string label = {});

/// Fiber weight phi(t, .).
Weight fiber_weight(const Family& fam, cplx t);

/// Product grid (base axis, fiber axis) used for joint checks.
GridDomain product_grid(const Family& fam);

/// Joint psh test of phi on a strided subset of the product grid.
PshReport family_psh_report(const Family& fam, double tol = 1e-6, int radial_stride = 4, int angular_stride = 4);
/// Throws PreconditionError naming the worst product node when phi is not jointly psh.
void require_family_psh(const Family& fam, double tol = 1e-6);

/// Pointwise relative kernel B_m(t, x) with per-fiber state (m = 1: Gram
/// factorization; m >= 2: quadrature weights for the optimizer).
class RelativeKernel {
 public:
  RelativeKernel(const Family& fam, OptimizerOptions opts = {});
  const Family& family() const { return fam_; }
  /// B_m(t, x); 0 when the fiber over t has no admissible section nonzero at x.
  double value(cplx t, cplx x) const;
  /// B_m on every base node at a fixed fiber point.
  std::vector<double> field(cplx x) const;

 private:
  Family fam_;
  OptimizerOptions opts_;
};

/// t -> B_m(t, x_fiber) over the base nodes (joint psh precondition enforced).
std::vector<double> relative_kernel(const Family& fam, cplx x_fiber, int restarts = 32, std::uint64_t seed = 1);

/// Closed form of B_1(t, 0) for phi = |t z|^2 on the unit fiber disc.
double tz_family_b1_at_origin(cplx t);

struct VariationOptions {
  double tol = 1e-4;
  double step = 1e-2;          // finite-difference step in t and z
  int base_radial_stride = 1;  // check subset of base nodes
  int base_angular_stride = 1;
  int fiber_radial_stride = 4; // check subset of fiber nodes
  int fiber_angular_stride = 4;
  cplx x_report{};             // fiber point for the per-base-node logB column
  OptimizerOptions optimizer{};
  int center_restarts = 8;     // multi-start at each stencil center (m >= 2)
};

struct VariationRow {
  cplx t;
  double logB = 0.0;       // log B_m(t, x_report)
  double levi_min = 0.0;   // min joint Levi eigenvalue over checked fiber points at t (NaN if none)
};

struct VariationReport {
  bool psh = true;          // joint (t, z) test
  bool t_subharmonic = true;
  double worst_value = 0.0;
  cplx worst_t{}, worst_x{};
  double worst_t_value = 0.0;
  cplx worst_t_t{}, worst_t_x{};
  std::size_t checked = 0;
  std::size_t skipped = 0;   // zero kernel or stencil outside the domain
  std::vector<VariationRow> rows;
  bool pass() const { return psh && t_subharmonic; }
};

/// Finite-difference Levi test of log B_m over the product of base and fiber
/// check nodes, plus subharmonicity in t at each fiber check point.
VariationReport psh_variation_check(const Family& fam, const VariationOptions& opts = {});

struct UniformBoundReport {
  double C = 0.0;            // max over sampled (t, x) of B_m
  double worst_ratio = 1.0;  // max over x of (max_t B / median_t B)
  bool pass = true;          // worst_ratio <= 2
};

UniformBoundReport uniform_bound_check(const Family& fam, const std::vector<cplx>& xs, const OptimizerOptions& opts = {});

struct EnvelopeResult {
  Weight weight;
  PshReport psh;
};

/// reg_sup of (1/k) phi_k over a common grid, with an is_psh report.
EnvelopeResult envelope_metric(const std::vector<std::pair<int, Weight>>& entries, const GridDomain& grid,
                               const PshOptions& psh_opts = {});

struct DualProbeVerdict {
  std::string name;
  Eigen::VectorXcd xi;
  bool psh = true;
  double worst_value = 0.0;
  cplx worst_t{};
};

struct FamilyGramReport {
  std::vector<Eigen::MatrixXcd> G;        // per base node
  std::vector<DualProbeVerdict> probes;
  std::vector<std::size_t> singular_nodes;
  std::size_t checked = 0;
  bool pass() const {
    for (const auto& p : probes)
      if (!p.psh) return false;
    return true;
  }
};

struct FamilyGramOptions {
  double tol = 1e-4;
  double step = 1e-2;
  int random_probes = 16;
  std::uint64_t seed = 11;
  OptimizerOptions optimizer{};  // used for m >= 2 (B_m on all fiber nodes)
};

/// Per-fiber Narasimhan-Simha Gram G(t) and the dual-probe test:
/// log(xi^* G(t)^{-1} xi) subharmonic in t for basis and random duals.
FamilyGramReport family_ns_gram(const Family& fam, const FamilyGramOptions& opts = {});
/// G(t) for a single t.
Eigen::MatrixXcd family_gram_at(const Family& fam, cplx t, const OptimizerOptions& opts = {});

struct LowerBoundScan {
  double inf_lambda_min = 0.0;
  std::size_t argmin = 0;
  bool above_floor = true;
  std::vector<double> lambda_min;
};

LowerBoundScan gram_lower_bound_scan(const Family& fam, const std::vector<cplx>& path, double floor = 0.0,
                                     const OptimizerOptions& opts = {});

/// Kernel field over the base as CSV: t_re,t_im,B,logB.
void write_kernel_field_csv(std::ostream& os, const GridDomain& base, const std::vector<double>& B);
/// Gram field over the base as CSV: t_re,t_im,then re/im of every entry.
void write_gram_field_csv(std::ostream& os, const GridDomain& base, const std::vector<Eigen::MatrixXcd>& G);

nlohmann::json family_descriptor(const Family& fam);

}  // namespace l2m
