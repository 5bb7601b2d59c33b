#include "l2m/extend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "l2m/field_io.hpp"
#include "l2m/kernels.hpp"

namespace l2m {

namespace {

bool is_fixed(const Monomial& e, int dims) { return dims == 1 ? e.a == 0 : e.b == 0; }

/// Boundary datum coefficient for a fixed monomial.
cplx datum_coef(const Polynomial& f, const Monomial& e, int dims) {
  for (const auto& t : f.terms())
    if ((dims == 1 && e.a == 0 && t.exp.a == 0) || (dims == 2 && t.exp.a == e.a && t.exp.b == 0)) return t.coef;
  return cplx{};
}

/// Points and measure of V.
void v_measure(const ExtensionProblem& p, std::vector<Point>& pts, std::vector<double>& wts) {
  if (p.omega.dims() == 1) {
    pts = {Point{}};
    wts = {1.0};
    return;
  }
  const GridDomain v = p.omega.axis_grid(0);
  pts.clear();
  for (const auto& q : v.nodes()) pts.push_back(Point{q[0], cplx{}});
  wts = v.weights();
}

std::vector<double> node_factors(const ExtensionProblem& p, const Denominator& den) {
  const GridDomain& g = p.omega;
  const std::vector<double> phi = p.phi.sample(g);
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = den ? den(g.node(i)) : 1.0;
    if (!(d > 0.0)) throw DegenerateError("extension: denominator is not positive at node " + std::to_string(i));
    f[i] = g.weights()[i] * std::exp(-phi[i]) / d;
    if (!std::isfinite(f[i])) throw NonFiniteIntegrand(i, f[i]);
  }
  return f;
}

}  // namespace

ExtensionProblem make_extension_problem(GridDomain omega, Polynomial f, Weight phi, int degree) {
  const int dims = omega.dims();
  if (degree < 0) throw std::invalid_argument("extension: degree must be >= 0");
  if (phi.dims() != dims) throw std::invalid_argument("extension: weight dimension does not match the domain");
  const AxisSpec& s = omega.axis(dims - 1);  // the sigma direction
  if (std::abs(s.center) + s.radius > 1.0 + 1e-12)
    throw std::invalid_argument("extension: sup |sigma| over the domain exceeds 1");
  if (!(std::abs(s.center) < s.radius)) throw std::invalid_argument("extension: V does not meet the domain");
  for (const auto& t : f.terms()) {
    if (dims == 1 && t.exp.a > 0) throw std::invalid_argument("extension: datum on a point must be a constant");
    if (dims == 2 && t.exp.b > 0) throw std::invalid_argument("extension: datum must be a polynomial in z1 only");
    if (t.exp.a > degree) throw std::invalid_argument("extension: datum degree exceeds the truncation degree");
  }
  return ExtensionProblem{std::move(omega), std::move(f), std::move(phi), degree};
}

Section trivial_extension(const ExtensionProblem& p) {
  const SectionSpace space(p.omega, p.degree, 1);
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(space.dimension()));
  for (std::size_t j = 0; j < space.dimension(); ++j)
    if (is_fixed(space.basis()[j], p.omega.dims()))
      c(static_cast<Eigen::Index>(j)) = datum_coef(p.f, space.basis()[j], p.omega.dims());
  return Section(space, c);
}

double extension_energy(const ExtensionProblem& p, const Section& F, const Denominator& den) {
  const auto f = node_factors(p, den);
  const Eigen::VectorXcd v = F.at_nodes();
  std::vector<double> s(f.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::norm(v(static_cast<Eigen::Index>(i)));
  return kernels::weighted_sum(s, f);
}

OtSolution ot_solve(const ExtensionProblem& p, const Denominator& den) {
  const int dims = p.omega.dims();
  const Section triv = trivial_extension(p);
  const SectionSpace& space = triv.space();
  std::vector<Eigen::Index> free_idx;
  for (std::size_t j = 0; j < space.dimension(); ++j)
    if (!is_fixed(space.basis()[j], dims)) free_idx.push_back(static_cast<Eigen::Index>(j));

  const auto wts = node_factors(p, den);
  Eigen::VectorXcd c = triv.coef();
  if (!free_idx.empty() && !p.f.is_zero()) {
    const Eigen::MatrixXcd& B = space.basis_matrix();
    Eigen::MatrixXcd Bf(B.rows(), static_cast<Eigen::Index>(free_idx.size()));
    for (std::size_t j = 0; j < free_idx.size(); ++j) Bf.col(static_cast<Eigen::Index>(j)) = B.col(free_idx[j]);
    const Eigen::VectorXcd u0 = B * c;
    Eigen::MatrixXcd WBf = Bf;
    for (Eigen::Index i = 0; i < Bf.rows(); ++i) WBf.row(i) *= wts[static_cast<std::size_t>(i)];
    Eigen::MatrixXcd N = Bf.adjoint() * WBf;
    N = 0.5 * (N + N.adjoint());
    const Eigen::VectorXcd rhs = -(WBf.adjoint() * u0);
    Eigen::LLT<Eigen::MatrixXcd> llt(N);
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-15))
      throw ConditioningError("ot_solve: singular normal equations (reduce the truncation degree)");
    const Eigen::VectorXcd y = llt.solve(rhs);
    for (std::size_t j = 0; j < free_idx.size(); ++j) c(free_idx[j]) = y(static_cast<Eigen::Index>(j));
  }
  OtSolution sol{Section(space, c), 0.0, 0.0, 0.0};
  sol.energy = extension_energy(p, sol.F, den);

  std::vector<Point> vp;
  std::vector<double> vw;
  v_measure(p, vp, vw);
  double rhs = 0.0;
  for (std::size_t i = 0; i < vp.size(); ++i) {
    const double s = std::norm(p.f(vp[i]));
    if (s == 0.0) continue;
    const double d = den ? den(vp[i]) : 1.0;
    rhs += vw[i] * s * std::exp(-p.phi(vp[i])) / d;
  }
  sol.rhs = rhs;
  sol.ratio = rhs > 0.0 ? sol.energy / rhs : 0.0;
  return sol;
}

double boundary_l2m_integral(const ExtensionProblem& p, double m) {
  std::vector<Point> vp;
  std::vector<double> vw;
  v_measure(p, vp, vw);
  double acc = 0.0;
  for (std::size_t i = 0; i < vp.size(); ++i) {
    const double s = std::norm(p.f(vp[i]));
    if (s > 0.0) acc += vw[i] * std::pow(s, 1.0 / m) * std::exp(-p.phi(vp[i]));
  }
  return acc;
}

IterationTrace l2m_iterate(const ExtensionProblem& p, double m, int iters) {
  if (!(m >= 1.0)) throw std::invalid_argument("l2m_iterate: m must be >= 1");
  if (iters < 1) throw std::invalid_argument("l2m_iterate: iters must be >= 1");
  IterationTrace tr;
  tr.m = m;
  tr.limit = tr.C0 * boundary_l2m_integral(p, m);
  const GridDomain& g = p.omega;
  const std::vector<double> phi = g.size() ? p.phi.sample(g) : std::vector<double>{};

  auto A_of = [&](const Section& F) {
    const Eigen::VectorXcd v = F.at_nodes();
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < f.size(); ++i)
      f[i] = std::pow(std::norm(v(static_cast<Eigen::Index>(i))), 1.0 / m) * std::exp(-phi[i]);
    return quadrature(f, g);
  };

  if (m == 1.0) {
    const OtSolution s = ot_solve(p);
    IterationStep st;
    st.A = A_of(s.F);
    st.energy = s.energy;
    st.rhs = s.rhs;
    st.ratio = s.ratio;
    st.holder_lhs = st.holder_rhs = st.A;
    tr.steps.push_back(st);
    tr.F.push_back(s.F);
    return tr;
  }

  Section F = trivial_extension(p);
  {
    IterationStep st;
    st.A = A_of(F);
    st.energy = extension_energy(p, F);
    std::vector<Point> vp;
    std::vector<double> vw;
    v_measure(p, vp, vw);
    for (std::size_t i = 0; i < vp.size(); ++i) st.rhs += vw[i] * std::norm(p.f(vp[i])) * std::exp(-p.phi(vp[i]));
    st.ratio = st.rhs > 0.0 ? st.energy / st.rhs : 0.0;
    st.holder_lhs = st.holder_rhs = st.A;
    tr.steps.push_back(st);
    tr.F.push_back(F);
  }
  const double expo = 1.0 - 1.0 / m;
  for (int k = 2; k <= iters; ++k) {
    const Eigen::VectorXcd v = F.at_nodes();
    double vmax = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) vmax = std::max(vmax, std::norm(v(i)));
    if (!(vmax > 0.0)) throw DegenerateError("l2m_iterate: F_k vanishes identically");
    const double floor = 1e-14 * vmax;
    std::size_t floored = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (std::norm(v(i)) < floor) ++floored;
    if (2 * floored > static_cast<std::size_t>(v.size()))
      throw DegenerateError("l2m_iterate: F_k vanishes on most nodes (" + std::to_string(floored) + ")");
    const Section Fk = F;
    const Denominator den = [Fk, floor, expo](const Point& z) {
      return std::pow(std::max(std::norm(evaluate(Fk, z)), floor), expo);
    };
    const OtSolution s = ot_solve(p, den);
    IterationStep st;
    st.k = k;
    st.A = A_of(s.F);
    st.energy = s.energy;
    st.rhs = s.rhs;
    st.ratio = s.ratio;
    st.floored = floored;
    st.holder_lhs = st.A;
    st.holder_rhs = std::pow(s.ratio * s.rhs, 1.0 / m) * std::pow(tr.steps.back().A, expo);
    st.holder_ok = st.holder_lhs <= st.holder_rhs * (1.0 + 1e-8);
    tr.holder_all_ok = tr.holder_all_ok && st.holder_ok;
    const double prev = tr.steps.back().A;
    if (prev > tr.limit * (1.0 + 1e-9) && st.A > prev * (1.0 + 1e-10)) tr.monotone = false;
    tr.steps.push_back(st);
    tr.F.push_back(s.F);
    F = s.F;
  }
  return tr;
}

double recurrence_map(double a, double c0, double m) {
  if (!(a > 0.0) || !(c0 > 0.0)) throw std::invalid_argument("recurrence_map: a and c0 must be positive");
  if (!(m >= 1.0)) throw std::invalid_argument("recurrence_map: m must be >= 1");
  return a * std::pow(c0 / a, 1.0 / m);
}

int recurrence_iterations_to(double a0, double c0, double m, double tol, int max_iters) {
  double a = a0;
  for (int k = 0; k <= max_iters; ++k) {
    if (std::abs(a - c0) <= tol * c0) return k;
    a = recurrence_map(a, c0, m);
  }
  return max_iters + 1;
}

MeanValueReport mean_value_bound(const Section& F, const Point& x, double r, const Weight& w, double m) {
  const GridDomain& dom = F.space().domain();
  const int n = dom.dims();
  if (!(r > 0.0)) throw std::invalid_argument("mean_value_bound: radius must be positive");
  if (dom.boundary_distance(x) < r) throw std::out_of_range("mean_value_bound: polydisc escapes the domain");
  std::vector<double> radii(static_cast<std::size_t>(n), r);
  std::vector<int> res;
  std::vector<cplx> centers;
  for (int k = 0; k < n; ++k) {
    res.push_back(n == 1 ? 48 : 24);
    res.push_back(n == 1 ? 64 : 32);
    centers.push_back(x[static_cast<std::size_t>(k)]);
  }
  const GridDomain sub = make_polydisc_grid(radii, res, centers);
  const std::vector<double> phi = w.sample(sub);
  double sup = -std::numeric_limits<double>::infinity();
  for (double v : phi) sup = std::max(sup, v);
  // psh weights attain their sup on the distinguished boundary.
  const int nb = 256;
  for (int a = 0; a < nb; ++a) {
    const cplx e1 = x[0] + std::polar(r, 2.0 * kPi * a / nb);
    if (n == 1) {
      sup = std::max(sup, w(Point{e1, cplx{}}));
    } else {
      for (int b = 0; b < 32; ++b) sup = std::max(sup, w(Point{e1, x[1] + std::polar(r, 2.0 * kPi * b / 32)}));
    }
  }
  std::vector<double> f(sub.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    f[i] = std::pow(std::norm(evaluate(F, sub.node(i))), 1.0 / m) * std::exp(-phi[i] / m);
  MeanValueReport rep;
  rep.bound = std::exp(sup / m) * quadrature(f, sub) / std::pow(kPi * r * r, n);
  rep.lhs = std::pow(std::norm(evaluate(F, x)), 1.0 / m);
  rep.holds = rep.lhs <= rep.bound * (1.0 + 1e-8);
  return rep;
}

void write_trace_csv(std::ostream& os, const IterationTrace& t) {
  os << "k,A_k,ratio,floored\n";
  for (const auto& s : t.steps) os << s.k << ',' << io::fmt(s.A) << ',' << io::fmt(s.ratio) << ',' << s.floored << '\n';
}

nlohmann::json trace_json(const IterationTrace& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps)
    steps.push_back({{"k", s.k},
                     {"A", s.A},
                     {"energy", s.energy},
                     {"rhs", s.rhs},
                     {"ratio", s.ratio},
                     {"floored", s.floored},
                     {"holder_lhs", s.holder_lhs},
                     {"holder_rhs", s.holder_rhs},
                     {"holder_ok", s.holder_ok}});
  return nlohmann::json{{"m", t.m},
                        {"C0", t.C0},
                        {"limit", t.limit},
                        {"holder_all_ok", t.holder_all_ok},
                        {"monotone", t.monotone},
                        {"steps", steps}};
}

}  // namespace l2m
