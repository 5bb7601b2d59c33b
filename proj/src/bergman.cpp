#include "l2m/bergman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "l2m/kernels.hpp"

namespace l2m {

namespace {

void require_m(int m) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
}

BergmanResult to_result(const SectionSpace& space, const RayleighProblem::Solution& s, int m) {
  BergmanResult r;
  r.restarts = s.restarts;
  r.gap = s.gap;
  if (!(s.value > 0.0) || s.coef.size() == 0) {
    r.zero = true;
    return r;
  }
  r.value = s.value;
  // Rescale u(x) = 1 to pseudo-norm 1: ||c||_m = I^{m/2}.
  r.extremal = Section(space, s.coef / std::pow(s.integral, m / 2.0));
  return r;
}

}  // namespace

double pseudo_norm(const Section& u, const Weight& w, int m) {
  require_m(m);
  const Polynomial p = u.polynomial();
  if (p.is_zero()) return 0.0;
  for (const auto& t : pole_loci(w)) {
    const double e = (2.0 * order_along(p, t) - 2.0 * t.coef) / m;
    if (!(e > -locus_codim(t, u.space().dims())))
      throw IntegrabilityError("pseudo_norm: |u|^{2/m} e^{-phi/m} is not integrable at a log-tag of coefficient " +
                               std::to_string(t.coef));
  }
  const GridDomain& g = u.space().domain();
  const std::vector<double> phi = w.sample(g);
  const Eigen::VectorXcd v = u.at_nodes();
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = std::pow(std::norm(v(static_cast<Eigen::Index>(i))), 1.0 / m) * std::exp(-phi[i] / m);
  return std::pow(quadrature(f, g), m / 2.0);
}

bool j_m_integrable(const Section& u, const Weight& w, int m) {
  require_m(m);
  const Polynomial p = u.polynomial();
  if (p.is_zero()) return true;
  for (const auto& t : pole_loci(w)) {
    const double e = 2.0 * order_along(p, t) / m - 2.0 * t.coef;
    if (!(e > -locus_codim(t, u.space().dims()))) return false;
  }
  return true;
}

BergmanResult bergman_kernel(const SectionSpace& space, const Weight& w, int m, const Point& x, int restarts,
                             std::uint64_t seed) {
  require_m(m);
  const RayleighProblem prob(space, w, m);
  if (m == 1) return to_result(space, prob.closed_form_m1(x), m);
  OptimizerOptions opts;
  opts.restarts = restarts;
  opts.seed = seed;
  return to_result(space, prob.maximize(x, opts), m);
}

BergmanResult bergman_optimize(const SectionSpace& space, const Weight& w, int m, const Point& x, int restarts,
                               std::uint64_t seed) {
  require_m(m);
  const RayleighProblem prob(space, w, m);
  OptimizerOptions opts;
  opts.restarts = restarts;
  opts.seed = seed;
  return to_result(space, prob.maximize(x, opts), m);
}

double bergman_closed_form_m1(const SectionSpace& space, const Weight& w, const Point& x) {
  if (space.dimension() == 0) return 0.0;
  const Eigen::MatrixXcd G = gram(space, w);
  Eigen::LLT<Eigen::MatrixXcd> llt(G);
  if (llt.info() != Eigen::Success) throw ConditioningError("bergman_closed_form_m1: Gram matrix is singular");
  const Eigen::VectorXcd v = space.basis_at(x);
  return (v.adjoint() * llt.solve(v))(0).real();
}

std::vector<double> kernel_field(const SectionSpace& space, const Weight& w, int m, const OptimizerOptions& opts) {
  require_m(m);
  const RayleighProblem prob(space, w, m);
  const auto& nodes = space.domain().nodes();
  if (m == 1) return prob.closed_form_m1(nodes);
  std::vector<double> out(nodes.size());
  kernels::for_each_dynamic(nodes.size(), [&](std::size_t i) { out[i] = prob.maximize(nodes[i], opts).value; });
  return out;
}

Weight twisted_weight_h_m_minus_1(const GridDomain& grid, const std::vector<double>& B, const Weight& w, int m) {
  require_m(m);
  if (m == 1) return w;
  if (B.size() != grid.size()) throw std::invalid_argument("twisted_weight: B field does not match the grid");
  const std::vector<double> phi = w.sample(grid);
  std::vector<double> v(grid.size());
  const double a = (m - 1.0) / m;
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = (B[i] > 0.0 ? a * std::log(B[i]) : -std::numeric_limits<double>::infinity()) + phi[i] / m;
  return Weight::sampled(grid, std::move(v), "phi_" + std::to_string(m - 1));
}

Eigen::MatrixXcd ns_gram_from_field(const SectionSpace& space, const Weight& w, int m, const std::vector<double>& B) {
  require_m(m);
  if (m == 1) return gram(space, w);
  const Weight tw = twisted_weight_h_m_minus_1(space.domain(), B, w, m);
  try {
    return gram_from_samples(space, tw.sample(space.domain()));
  } catch (const NonFiniteIntegrand& e) {
    throw IntegrabilityError(std::string("ns_gram: twisted pairing is not integrable: ") + e.what());
  }
}

Eigen::MatrixXcd ns_gram(const SectionSpace& space, const Weight& w, int m, const OptimizerOptions& opts) {
  require_m(m);
  if (m == 1) return gram(space, w);
  return ns_gram_from_field(space, w, m, kernel_field(space, w, m, opts));
}

ExtremalReport extremal_bound_check(const SectionSpace& space, const Weight& w, int m, const std::vector<Section>& probes,
                                    const std::vector<Point>& points, const std::vector<double>& B) {
  if (B.size() != points.size()) throw std::invalid_argument("extremal_bound_check: one B value per point expected");
  ExtremalReport rep;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    if (probes[p].polynomial().is_zero()) continue;
    const double n2 = std::pow(pseudo_norm(probes[p], w, m), 2.0);
    for (std::size_t k = 0; k < points.size(); ++k) {
      const double lhs = std::norm(evaluate(probes[p], points[k]));
      const double rhs = B[k] * n2;
      const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      if (ratio > rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.worst_probe = p;
        rep.worst_point = k;
      }
    }
  }
  (void)space;
  rep.pass = rep.worst_ratio <= 1.0 + 1e-8;
  return rep;
}

double holder_chain_worst_ratio(const SectionSpace& space, const Weight& w, int m, const std::vector<double>& B) {
  require_m(m);
  const GridDomain& g = space.domain();
  if (B.size() != g.size()) throw std::invalid_argument("holder_chain: B field does not match the grid");
  const Weight tw = twisted_weight_h_m_minus_1(g, B, w, m);
  const std::vector<double> phi = w.sample(g), phi_t = tw.sample(g);
  double worst = 0.0;
  for (std::size_t k = 0; k < space.dimension(); ++k) {
    const Section u = Section::basis_element(space, k);
    const double norm = pseudo_norm(u, w, m);
    const Eigen::VectorXcd v = u.at_nodes();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = std::norm(v(static_cast<Eigen::Index>(i)));
      if (s == 0.0) continue;
      // Compare logarithms to stay finite for large weights.
      const double lhs = std::log(s) - phi_t[i];
      const double rhs = 2.0 * (m - 1.0) / m * std::log(norm) + (std::log(s) - phi[i]) / m;
      worst = std::max(worst, std::exp(lhs - rhs));
    }
  }
  return worst;
}

}  // namespace l2m
