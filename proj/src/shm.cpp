#include "l2m/shm.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "l2m/field_io.hpp"
#include "l2m/kernels.hpp"

namespace l2m {

using nlohmann::json;

namespace {

bool all_finite(const HMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (!std::isfinite(m(i).real()) || !std::isfinite(m(i).imag())) return false;
  return true;
}

double max_entry(const HMatrix& m) { return m.cwiseAbs().maxCoeff(); }

HMatrix hermitian_part(const HMatrix& m) { return 0.5 * (m + m.adjoint()); }

HMatrix nan_matrix(int r) {
  return HMatrix::Constant(r, r, cplx{std::numeric_limits<double>::quiet_NaN(), 0.0});
}

Eigen::VectorXcd eval_section(const SectionSample& v, const Point& z) {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) out(static_cast<Eigen::Index>(k)) = v[k](z);
  return out;
}

}  // namespace

double hnorm2(const HMatrix& h, const Eigen::VectorXcd& v) { return (v.transpose() * h * v.conjugate())(0, 0).real(); }

// ---- MatrixMetric ------------------------------------------------------------

MatrixMetric::MatrixMetric(GridDomain grid, int rank, Field field, std::vector<LogTag> det_tags,
                           std::vector<std::size_t> declared_singular)
    : grid_(std::move(grid)), rank_(rank), field_(std::move(field)), det_tags_(std::move(det_tags)) {
  if (rank_ < 1) throw std::invalid_argument("MatrixMetric: rank must be >= 1");
  samples_.resize(grid_.size());
  const auto n = static_cast<std::ptrdiff_t>(grid_.size());
  kernels::ExceptionTrap trap;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    trap.run([&] { samples_[static_cast<std::size_t>(i)] = field_(grid_.node(static_cast<std::size_t>(i))); });
  trap.rethrow();
  finish(std::move(declared_singular));
}

MatrixMetric MatrixMetric::from_samples(GridDomain grid, std::vector<HMatrix> samples,
                                        std::vector<std::size_t> declared_singular) {
  if (samples.size() != grid.size()) throw std::invalid_argument("MatrixMetric: sample count does not match grid");
  if (samples.empty()) throw std::invalid_argument("MatrixMetric: empty grid");
  MatrixMetric h;
  h.grid_ = std::move(grid);
  h.rank_ = static_cast<int>(samples.front().rows());
  h.samples_ = std::move(samples);
  h.finish(std::move(declared_singular));
  return h;
}

MatrixMetric MatrixMetric::constant(GridDomain grid, const HMatrix& m) {
  return MatrixMetric(std::move(grid), static_cast<int>(m.rows()), [m](const Point&) { return m; });
}

HMatrix MatrixMetric::at(const Point& z) const {
  if (!field_) throw UnsupportedError("MatrixMetric: sample-only metric has no off-grid evaluation");
  return field_(z);
}

void MatrixMetric::finish(std::vector<std::size_t> declared) {
  singular_mask_.assign(samples_.size(), false);
  for (std::size_t i : declared) {
    if (i >= samples_.size()) throw std::out_of_range("MatrixMetric: declared singular node out of range");
    singular_mask_[i] = true;
  }
  const double r = rank_;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const HMatrix& m = samples_[i];
    if (m.rows() != rank_ || m.cols() != rank_) throw std::invalid_argument("MatrixMetric: sample has wrong shape");
    if (!all_finite(m)) {
      singular_mask_[i] = true;
      continue;
    }
    const double C = max_entry(m);
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, C))
      throw std::invalid_argument("MatrixMetric: sample at node " + std::to_string(i) + " is not Hermitian");
    const double det = m.determinant().real();
    if (C == 0.0 || det < 1e-14 * std::pow(r * C, r)) singular_mask_[i] = true;
  }
  singular_.clear();
  for (std::size_t i = 0; i < singular_mask_.size(); ++i)
    if (singular_mask_[i]) singular_.push_back(i);
}

// ---- constructions -------------------------------------------------------------

MatrixMetric raufi_example(const GridDomain& grid) {
  if (grid.dims() != 1) throw std::invalid_argument("raufi_example: one-variable grid expected");
  double rmin = std::numeric_limits<double>::infinity();
  for (const auto& p : grid.nodes()) rmin = std::min(rmin, std::abs(p[0]));
  std::vector<std::size_t> nearest;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::abs(grid.node(i)[0]) <= rmin * (1.0 + 1e-12)) nearest.push_back(i);
  return MatrixMetric(
      grid, 2,
      [](const Point& p) {
        const cplx z = p[0];
        const double a = std::norm(z);
        HMatrix h(2, 2);
        h << 1.0 + a, std::conj(z), z, a;
        return h;
      },
      {LogTag::point(0.0, 2.0)}, nearest);
}

MatrixMetric dual_metric(const MatrixMetric& h) {
  std::vector<std::size_t> near;
  for (std::size_t i = 0; i < h.grid().size(); ++i) {
    if (h.is_singular(i)) continue;
    Eigen::SelfAdjointEigenSolver<HMatrix> es(h.at_node(i), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e14) near.push_back(i);
  }
  if (!near.empty())
    throw NearSingularError("dual_metric: " + std::to_string(near.size()) + " near-singular node(s)", near);

  std::vector<LogTag> tags = h.det_tags();
  for (auto& t : tags) t.coef = -t.coef;
  if (h.has_field()) {
    auto f = h.field();
    return MatrixMetric(
        h.grid(), h.rank(), [f](const Point& z) { return hermitian_part(HMatrix(f(z).inverse().transpose())); }, tags,
        h.singular_nodes());
  }
  std::vector<HMatrix> s(h.samples().size());
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = h.is_singular(i) ? nan_matrix(h.rank()) : hermitian_part(HMatrix(h.at_node(i).inverse().transpose()));
  return MatrixMetric::from_samples(h.grid(), std::move(s), h.singular_nodes());
}

Weight det_weight(const MatrixMetric& h) {
  for (std::size_t i = 0; i < h.samples().size(); ++i) {
    if (h.is_singular(i)) continue;
    const double det = h.at_node(i).determinant().real();
    if (!(det > 0.0))
      throw InconsistencyError("det_weight: det h <= 0 at non-singular node " + std::to_string(i));
  }
  const int dims = h.grid().dims();
  if (h.has_field()) {
    auto f = h.field();
    auto tags = h.det_tags();
    return Weight::custom(
        dims,
        [f, tags, dims](const Point& z) {
          double v = std::log(f(z).determinant().real());
          for (const auto& t : tags) v -= t.eval(z, dims);
          return v;
        },
        "log det h", tags);
  }
  std::vector<double> v(h.samples().size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double det = h.at_node(i).determinant().real();
    v[i] = det > 0.0 ? std::log(det) : -std::numeric_limits<double>::infinity();
  }
  return Weight::sampled(h.grid(), std::move(v), "log det h");
}

namespace {

// Permanent of the entrywise modulus (Leibniz expansion without signs).
double abs_permanent(const HMatrix& h, std::vector<bool>& used, Eigen::Index row) {
  if (row == h.rows()) return 1.0;
  double s = 0.0;
  for (Eigen::Index c = 0; c < h.cols(); ++c) {
    if (used[static_cast<std::size_t>(c)]) continue;
    const double a = std::abs(h(row, c));
    if (a == 0.0) continue;
    used[static_cast<std::size_t>(c)] = true;
    s += a * abs_permanent(h, used, row + 1);
    used[static_cast<std::size_t>(c)] = false;
  }
  return s;
}

}  // namespace

double det_rounding(const HMatrix& h) {
  const double det = h.determinant().real();
  if (!(det > 0.0)) return std::numeric_limits<double>::infinity();
  double perm = 0.0;
  if (h.rows() <= 6) {
    std::vector<bool> used(static_cast<std::size_t>(h.cols()), false);
    perm = abs_permanent(h, used, 0);
  } else {
    perm = 1.0;  // Hadamard-type bound for larger ranks
    for (Eigen::Index c = 0; c < h.cols(); ++c) perm *= h.col(c).norm();
  }
  return std::numeric_limits<double>::epsilon() * perm / det;
}

PshReport det_weight_psh(const MatrixMetric& h, const PshOptions& opts) {
  const GridDomain& g = h.grid();
  const double step = opts.step > 0.0 ? opts.step : default_step(g);
  const double limit = 0.1 * opts.tol * step * step / 2.7;
  std::vector<char> noisy(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i)
    noisy[i] = !h.is_singular(i) && !(det_rounding(h.at_node(i)) <= limit);
  PshOptions o = opts;
  o.skip = [&](std::size_t i) { return (opts.skip && opts.skip(i)) || h.is_singular(i) || noisy[i]; };
  return is_psh(det_weight(h), g, o);
}

EigenBoundsReport eigen_bounds_check(const MatrixMetric& h, const std::vector<std::size_t>& region,
                                     std::optional<double> C) {
  if (region.empty()) throw std::invalid_argument("eigen_bounds_check: empty region");
  EigenBoundsReport rep;
  double c = 0.0;
  for (std::size_t i : region) {
    if (!all_finite(h.at_node(i))) throw std::invalid_argument("eigen_bounds_check: non-finite entries in region");
    c = std::max(c, max_entry(h.at_node(i)));
  }
  rep.C = C.value_or(c);
  const double r = h.rank();
  const double rc = r * rep.C;
  const double slack = 1e-12 * std::max(1.0, rc);
  rep.worst_max_margin = rep.worst_min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i : region) {
    const HMatrix& m = h.at_node(i);
    Eigen::SelfAdjointEigenSolver<HMatrix> es(m, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff(), lmin = es.eigenvalues().minCoeff();
    const double det = m.determinant().real();
    const double mmax = rc - lmax;
    const double mmin = lmin - det / std::pow(rc, r - 1.0);
    if (mmax < rep.worst_max_margin) {
      rep.worst_max_margin = mmax;
      rep.worst_max_node = i;
    }
    if (mmin < rep.worst_min_margin) {
      rep.worst_min_margin = mmin;
      rep.worst_min_node = i;
    }
  }
  rep.lambda_max_ok = rep.worst_max_margin >= -slack;
  rep.lambda_min_ok = rep.worst_min_margin >= -slack;
  return rep;
}

EigenBoundsReport eigen_bounds_check(const MatrixMetric& h, std::optional<double> C) {
  std::vector<std::size_t> all;
  for (std::size_t i = 0; i < h.grid().size(); ++i)
    if (all_finite(h.at_node(i))) all.push_back(i);
  return eigen_bounds_check(h, all, C);
}

// ---- Griffiths sampling tests ---------------------------------------------------

std::vector<SectionSample> default_test_sections(int rank, std::uint64_t seed, int n_random) {
  std::vector<SectionSample> out;
  auto constant_vec = [rank](const std::vector<std::pair<int, cplx>>& entries) {
    SectionSample v(static_cast<std::size_t>(rank), Polynomial());
    for (const auto& [k, c] : entries) v[static_cast<std::size_t>(k)] = Polynomial::constant(c);
    return v;
  };
  for (int i = 0; i < rank; ++i) out.push_back(constant_vec({{i, 1.0}}));
  for (int i = 0; i < rank; ++i)
    for (int j = i + 1; j < rank; ++j) {
      out.push_back(constant_vec({{i, 1.0}, {j, 1.0}}));
      out.push_back(constant_vec({{i, 1.0}, {j, cplx{0.0, 1.0}}}));
    }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int s = 0; s < n_random; ++s) {
    SectionSample v;
    for (int k = 0; k < rank; ++k) {
      std::vector<cplx> c(3);
      for (auto& x : c) x = cplx{nd(rng), nd(rng)};
      v.push_back(Polynomial::univariate(c));
    }
    out.push_back(std::move(v));
  }
  return out;
}

GriffithsReport griffiths_negative_test(const MatrixMetric& h, const std::vector<SectionSample>& sections,
                                        const GriffithsOptions& opts) {
  if (sections.empty()) throw std::invalid_argument("griffiths_negative_test: empty section list");
  if (!h.has_field()) throw UnsupportedError("griffiths_negative_test: metric needs a field for curvature stencils");
  const GridDomain& g = h.grid();
  GriffithsReport rep;
  rep.worst_value = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < sections.size(); ++s) {
    const SectionSample& v = sections[s];
    if (static_cast<int>(v.size()) != h.rank()) throw std::invalid_argument("griffiths_negative_test: section rank mismatch");
    std::vector<double> q(g.size(), 0.0);
    double qmax = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (h.is_singular(i)) continue;
      q[i] = hnorm2(h.at_node(i), eval_section(v, g.node(i)));
      qmax = std::max(qmax, q[i]);
    }
    if (!(qmax > 0.0)) throw DegenerateError("griffiths_negative_test: |v|_h^2 vanishes on the grid for section " + std::to_string(s));
    PshOptions po;
    po.tol = opts.tol;
    po.step = opts.step;
    po.skip = [&](std::size_t i) { return h.is_singular(i) || q[i] < opts.degenerate_floor * qmax; };
    const auto& field = h.field();
    PshReport pr = is_psh_fn([&](const Point& z) { return std::log(hnorm2(field(z), eval_section(v, z))); }, g, po);
    if (pr.checked > 0 && pr.worst_value < rep.worst_value) {
      rep.worst_value = pr.worst_value;
      rep.worst_section = s;
      rep.worst_node = pr.worst_node;
    }
    rep.pass = rep.pass && pr.psh;
    rep.per_section.push_back(pr);
  }
  if (!std::isfinite(rep.worst_value)) rep.worst_value = 0.0;
  return rep;
}

GriffithsReport griffiths_positive_test(const MatrixMetric& h, const std::vector<SectionSample>& sections,
                                        const GriffithsOptions& opts) {
  return griffiths_negative_test(dual_metric(h), sections, opts);
}

bool entry_cauchy_schwarz_check(const MatrixMetric& h) {
  if (h.rank() < 2) throw std::invalid_argument("entry_cauchy_schwarz_check: rank >= 2 required");
  for (const HMatrix& m : h.samples()) {
    if (!all_finite(m)) continue;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (i == j) continue;
        const double lhs = std::norm(m(i, j));
        const double rhs = m(i, i).real() * m(j, j).real();
        if (lhs > rhs + 1e-12 * std::max(1.0, std::abs(rhs))) return false;
      }
  }
  return true;
}

// ---- functoriality ---------------------------------------------------------------

MatrixMetric pullback_metric(const MatrixMetric& h, const Polynomial& map, const GridDomain& source) {
  if (source.dims() != 1 || h.grid().dims() != 1) throw UnsupportedError("pullback_metric: one-variable maps only");
  if (!h.has_field()) throw UnsupportedError("pullback_metric: metric needs a field");
  for (std::size_t i = 0; i < source.size(); ++i)
    if (!(h.grid().boundary_distance(Point{map(source.node(i)), cplx{}}) > 0.0))
      throw std::out_of_range("pullback_metric: image of node " + std::to_string(i) + " escapes the target domain");
  std::vector<LogTag> tags;
  if (map.degree() <= 1) {
    cplx alpha{}, beta{};
    for (const auto& t : map.terms()) (t.exp.a == 1 ? alpha : beta) = t.coef;
    if (alpha != cplx{})
      for (const auto& t : h.det_tags())
        if (t.kind == LogTag::Kind::point) tags.push_back(LogTag::point((t.where[0] - beta) / alpha, t.coef));
  }
  auto f = h.field();
  return MatrixMetric(
      source, h.rank(), [f, map](const Point& w) { return f(Point{map(w), cplx{}}); }, tags);
}

MatrixMetric restrict_sub(const MatrixMetric& h, const HMatrix& frame) {
  if (frame.rows() != h.rank() || frame.cols() < 1 || frame.cols() > h.rank())
    throw std::invalid_argument("restrict_sub: frame must be r x s with 1 <= s <= r");
  Eigen::FullPivLU<HMatrix> lu(frame);
  if (lu.rank() != frame.cols()) throw std::invalid_argument("restrict_sub: frame columns are linearly dependent");
  const HMatrix F = frame;
  auto induced = [F](const HMatrix& m) { return hermitian_part(HMatrix(F.transpose() * m * F.conjugate())); };
  if (h.has_field()) {
    auto f = h.field();
    return MatrixMetric(
        h.grid(), static_cast<int>(F.cols()), [f, induced](const Point& z) { return induced(f(z)); }, {},
        h.singular_nodes());
  }
  std::vector<HMatrix> s;
  for (const auto& m : h.samples()) s.push_back(induced(m));
  return MatrixMetric::from_samples(h.grid(), std::move(s), h.singular_nodes());
}

MatrixMetric quotient_metric(const MatrixMetric& h, const HMatrix& surjection) {
  if (surjection.cols() != h.rank() || surjection.rows() < 1 || surjection.rows() > h.rank())
    throw std::invalid_argument("quotient_metric: surjection must be q x r");
  Eigen::FullPivLU<HMatrix> lu(surjection);
  if (lu.rank() != surjection.rows()) throw std::invalid_argument("quotient_metric: map is not surjective");
  return dual_metric(restrict_sub(dual_metric(h), surjection.transpose()));
}

HMatrix sym_power_matrix(const HMatrix& h, int m) {
  if (h.rows() != 2 || h.cols() != 2) throw UnsupportedError("sym_power_metric: rank 2 only");
  if (m < 1) throw std::invalid_argument("sym_power_metric: m must be positive");
  // Coefficients c(k, l) of x^k y^l in (h11 + h21 x + h12 y + h22 x y)^m.
  HMatrix c = HMatrix::Zero(m + 1, m + 1);
  c(0, 0) = 1.0;
  for (int step = 0; step < m; ++step) {
    HMatrix next = HMatrix::Zero(m + 1, m + 1);
    for (int k = 0; k <= step; ++k)
      for (int l = 0; l <= step; ++l) {
        const cplx v = c(k, l);
        if (v == cplx{}) continue;
        next(k, l) += v * h(0, 0);
        next(k + 1, l) += v * h(1, 0);
        next(k, l + 1) += v * h(0, 1);
        next(k + 1, l + 1) += v * h(1, 1);
      }
    c = next;
  }
  return c;
}

MatrixMetric sym_power_metric(const MatrixMetric& h, int m) {
  if (h.rank() != 2) throw UnsupportedError("sym_power_metric: rank 2 only");
  if (m < 1) throw std::invalid_argument("sym_power_metric: m must be positive");
  if (h.has_field()) {
    auto f = h.field();
    return MatrixMetric(
        h.grid(), m + 1, [f, m](const Point& z) { return hermitian_part(sym_power_matrix(f(z), m)); }, {},
        h.singular_nodes());
  }
  std::vector<HMatrix> s;
  for (const auto& x : h.samples()) s.push_back(all_finite(x) ? hermitian_part(sym_power_matrix(x, m)) : nan_matrix(m + 1));
  return MatrixMetric::from_samples(h.grid(), std::move(s), h.singular_nodes());
}

// ---- tautological metric ---------------------------------------------------------

namespace {
HMatrix dual_at(const MatrixMetric& h, std::size_t node) {
  if (node >= h.grid().size()) throw std::out_of_range("taut_metric: node out of range");
  const HMatrix& m = h.at_node(node);
  if (h.is_singular(node) || !all_finite(m)) throw DegenerateError("taut_metric: h* is not finite at singular node " + std::to_string(node));
  HMatrix d = hermitian_part(HMatrix(m.inverse().transpose()));
  if (!all_finite(d)) throw DegenerateError("taut_metric: h* is not finite at node " + std::to_string(node));
  return d;
}
}  // namespace

double taut_metric(const MatrixMetric& h, const Eigen::VectorXcd& line, std::size_t node) {
  if (line.size() != h.rank()) throw std::invalid_argument("taut_metric: line has wrong length");
  const double n = line.norm();
  if (std::abs(n - 1.0) > 1e-10) throw std::invalid_argument("taut_metric: line must be a unit vector");
  return hnorm2(dual_at(h, node), line);
}

TautBoundReport taut_bound_check(const MatrixMetric& h, const std::vector<std::size_t>& nodes,
                                 const std::vector<Eigen::VectorXcd>& lines) {
  if (nodes.empty() || lines.empty()) throw std::invalid_argument("taut_bound_check: empty nodes or lines");
  std::vector<HMatrix> duals;
  TautBoundReport rep;
  for (std::size_t i : nodes) {
    duals.push_back(dual_at(h, i));
    rep.C = std::max(rep.C, max_entry(duals.back()));
  }
  const double r = h.rank();
  const double factor = std::pow(r * rep.C, r - 1.0);
  rep.worst_lambda_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    Eigen::SelfAdjointEigenSolver<HMatrix> es(duals[k], Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    const double det = h.at_node(nodes[k]).determinant().real();
    for (const auto& line : lines) {
      const double gs = taut_metric(h, line, nodes[k]);
      rep.worst_lambda_margin = std::min(rep.worst_lambda_margin, gs - lmin);
      rep.worst_bound_ratio = std::max(rep.worst_bound_ratio, (1.0 / gs) / (factor * det));
      if (gs < lmin - 1e-10 * std::max(1.0, lmin)) rep.pass = false;
    }
  }
  if (rep.worst_bound_ratio > 1.0 + 1e-10) rep.pass = false;
  return rep;
}

// ---- export ----------------------------------------------------------------------

json grid_to_json(const GridDomain& g) {
  json axes = json::array();
  for (const auto& a : g.axes())
    axes.push_back({{"radius", a.radius},
                    {"n_radial", a.n_radial},
                    {"n_angular", a.n_angular},
                    {"center", json::array({a.center.real(), a.center.imag()})}});
  return json{{"axes", axes}};
}

GridDomain grid_from_json(const json& j) {
  std::vector<double> radii;
  std::vector<int> res;
  std::vector<cplx> centers;
  for (const auto& a : j.at("axes")) {
    radii.push_back(a.at("radius").get<double>());
    res.push_back(a.at("n_radial").get<int>());
    res.push_back(a.at("n_angular").get<int>());
    const auto c = a.value("center", json::array({0.0, 0.0}));
    centers.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
  }
  return make_polydisc_grid(radii, res, centers);
}

void write_metric_csv(std::ostream& os, const MatrixMetric& h) {
  const GridDomain& g = h.grid();
  os << "re(z),im(z)";
  if (g.dims() == 2) os << ",re(w),im(w)";
  for (int i = 1; i <= h.rank(); ++i)
    for (int j = 1; j <= h.rank(); ++j) os << ",re(h_" << i << j << "),im(h_" << i << j << ")";
  os << '\n';
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Point& p = g.node(n);
    os << io::fmt(p[0].real()) << ',' << io::fmt(p[0].imag());
    if (g.dims() == 2) os << ',' << io::fmt(p[1].real()) << ',' << io::fmt(p[1].imag());
    const HMatrix& m = h.at_node(n);
    for (int i = 0; i < h.rank(); ++i)
      for (int j = 0; j < h.rank(); ++j) os << ',' << io::fmt(m(i, j).real()) << ',' << io::fmt(m(i, j).imag());
    os << '\n';
  }
}

json metric_descriptor(const MatrixMetric& h) {
  return json{{"rank", h.rank()}, {"grid", grid_to_json(h.grid())}, {"singular_nodes", h.singular_nodes()}};
}

MatrixMetric read_metric(std::istream& csv, const json& descriptor) {
  const GridDomain g = grid_from_json(descriptor.at("grid"));
  const int r = descriptor.at("rank").get<int>();
  const std::size_t coord = g.dims() == 2 ? 4 : 2;
  std::string line;
  std::getline(csv, line);
  std::vector<HMatrix> samples;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != coord + 2 * static_cast<std::size_t>(r * r))
      throw std::invalid_argument("read_metric: row " + std::to_string(samples.size() + 2) + " has wrong column count");
    HMatrix m(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        const std::size_t k = coord + 2 * static_cast<std::size_t>(i * r + j);
        m(i, j) = cplx{std::stod(f[k]), std::stod(f[k + 1])};
      }
    samples.push_back(m);
  }
  return MatrixMetric::from_samples(g, std::move(samples),
                                    descriptor.value("singular_nodes", std::vector<std::size_t>{}));
}

}  // namespace l2m
