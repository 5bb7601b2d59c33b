#include "l2m/sections.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "l2m/field_io.hpp"
#include "l2m/kernels.hpp"
#include "l2m/shm.hpp"

namespace l2m {

namespace {

cplx ipow(cplx z, int k) {
  cplx r{1.0, 0.0};
  for (int i = 0; i < k; ++i) r *= z;
  return r;
}

bool same_locus(const LogTag& a, const LogTag& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == LogTag::Kind::hyperplane)
    return a.axis == b.axis && a.where[static_cast<std::size_t>(a.axis)] == b.where[static_cast<std::size_t>(b.axis)];
  return a.where == b.where;
}

std::vector<double> weight_factors(const SectionSpace& space, const Weight& w) {
  const GridDomain& g = space.domain();
  if (w.dims() != g.dims()) throw std::invalid_argument("gram: weight and fiber dimension differ");
  const std::vector<double> phi = w.sample(g);
  std::vector<double> f(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    f[i] = g.weights()[i] * std::exp(-phi[i]);
    if (!std::isfinite(f[i])) throw NonFiniteIntegrand(i, f[i]);
  }
  return f;
}

void check_pairs(const SectionSpace& space, const Weight& w) {
  const auto loci = pole_loci(w);
  if (loci.empty()) return;
  std::vector<Polynomial> b;
  for (std::size_t k = 0; k < space.dimension(); ++k) b.push_back(space.basis_polynomial(k));
  for (const auto& t : loci) {
    const int codim = locus_codim(t, space.dims());
    std::vector<int> ord;
    for (const auto& p : b) ord.push_back(order_along(p, t));
    for (std::size_t j = 0; j < b.size(); ++j)
      for (std::size_t k = j; k < b.size(); ++k) {
        const double e = ord[j] + ord[k] - 2.0 * t.coef;
        if (!(e > -codim)) {
          std::ostringstream msg;
          msg << "gram: pair (" << j << ", " << k << ") is not integrable against the log-tag of coefficient "
              << t.coef << " (exponent " << e << " <= " << -codim << ")";
          throw IntegrabilityError(msg.str());
        }
      }
  }
}

}  // namespace

// ---- SectionSpace ------------------------------------------------------------

SectionSpace::SectionSpace(GridDomain domain, int degree, int twist) {
  if (degree < 0) throw std::invalid_argument("make_poly_space: degree must be >= 0");
  if (twist < 1) throw std::invalid_argument("make_poly_space: m must be >= 1");
  auto d = std::make_shared<Data>();
  d->domain = std::move(domain);
  d->degree = degree;
  d->twist = twist;
  for (int n = 0; n <= degree; ++n) {
    if (d->domain.dims() == 1) {
      d->basis.push_back({n, 0});
    } else {
      for (int b = 0; b <= n; ++b) d->basis.push_back({n - b, b});
    }
  }
  const auto rows = static_cast<Eigen::Index>(d->domain.size());
  d->at_nodes.resize(rows, static_cast<Eigen::Index>(d->basis.size()));
  data_ = d;
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i) d->at_nodes.row(i) = basis_at(d->domain.node(static_cast<std::size_t>(i))).transpose();
}

Eigen::VectorXcd SectionSpace::basis_at(const Point& z) const {
  const auto& basis = data_->basis;
  Eigen::VectorXcd v(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k)
    v(static_cast<Eigen::Index>(k)) = ipow(z[0], basis[k].a) * ipow(z[1], basis[k].b);
  return v;
}

Polynomial SectionSpace::basis_polynomial(std::size_t k) const {
  const Monomial& e = data_->basis.at(k);
  return Polynomial::monomial(e.a, e.b);
}

SectionSpace make_poly_space(const GridDomain& dom, int degree, int m) { return SectionSpace(dom, degree, m); }

// ---- Section -----------------------------------------------------------------

Section::Section(SectionSpace space, Eigen::VectorXcd coef) : space_(std::move(space)), coef_(std::move(coef)) {
  if (static_cast<std::size_t>(coef_.size()) != space_.dimension())
    throw std::invalid_argument("Section: coefficient length does not match the space dimension");
}

Section Section::zero(const SectionSpace& space) {
  return Section(space, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(space.dimension())));
}

Section Section::basis_element(const SectionSpace& space, std::size_t k) {
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(space.dimension()));
  c(static_cast<Eigen::Index>(k)) = 1.0;
  return Section(space, c);
}

Polynomial Section::polynomial() const {
  std::vector<Polynomial::Term> t;
  for (std::size_t k = 0; k < space_.dimension(); ++k)
    if (coef_(static_cast<Eigen::Index>(k)) != cplx{}) t.push_back({space_.basis()[k], coef_(static_cast<Eigen::Index>(k))});
  return Polynomial(std::move(t));
}

cplx evaluate(const Section& u, const Point& x) {
  const auto& basis = u.space().basis();
  const auto& c = u.coef();
  if (u.space().dims() == 1) {
    // Basis is 1, z, ..., z^d in order.
    cplx acc{};
    for (std::size_t k = basis.size(); k-- > 0;) acc = acc * x[0] + c(static_cast<Eigen::Index>(k));
    return acc;
  }
  // Two variables: Horner in z1 over coefficients that are Horner polynomials in z2.
  const int d = u.space().degree();
  std::vector<std::vector<cplx>> by_a(static_cast<std::size_t>(d + 1));
  for (auto& row : by_a) row.assign(static_cast<std::size_t>(d + 1), cplx{});
  for (std::size_t k = 0; k < basis.size(); ++k)
    by_a[static_cast<std::size_t>(basis[k].a)][static_cast<std::size_t>(basis[k].b)] = c(static_cast<Eigen::Index>(k));
  cplx acc{};
  for (int a = d; a >= 0; --a) {
    cplx inner{};
    for (int b = d - a; b >= 0; --b) inner = inner * x[1] + by_a[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    acc = acc * x[0] + inner;
  }
  return acc;
}

// ---- integrability arithmetic --------------------------------------------------

std::vector<LogTag> pole_loci(const Weight& w) {
  std::vector<LogTag> merged;
  for (const auto& t : w.tags()) {
    bool found = false;
    for (auto& m : merged)
      if (same_locus(m, t)) {
        m.coef += t.coef;
        found = true;
        break;
      }
    if (!found) merged.push_back(t);
  }
  std::vector<LogTag> out;
  for (const auto& m : merged)
    if (m.coef > 0.0) out.push_back(m);
  return out;
}

int order_along(const Polynomial& p, const LogTag& locus) {
  const int o = locus.kind == LogTag::Kind::point ? p.vanishing_order_at(locus.where)
                                                  : p.vanishing_order_along(locus.axis, locus.where[static_cast<std::size_t>(locus.axis)]);
  return o < 0 ? 1 << 20 : o;  // the zero polynomial vanishes to every order
}

int locus_codim(const LogTag& locus, int dims) {
  return locus.kind == LogTag::Kind::point ? 2 * dims : 2;
}

// ---- Gram matrices ------------------------------------------------------------

Eigen::MatrixXcd gram_from_samples(const SectionSpace& space, const std::vector<double>& phi) {
  const GridDomain& g = space.domain();
  if (phi.size() != g.size()) throw std::invalid_argument("gram: sample count does not match the fiber grid");
  std::vector<double> f(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    f[i] = g.weights()[i] * std::exp(-phi[i]);
    if (!std::isfinite(f[i])) throw NonFiniteIntegrand(i, f[i]);
  }
  return kernels::gram(space.basis_matrix(), f);
}

Eigen::MatrixXcd gram(const SectionSpace& space, const Weight& w) {
  check_pairs(space, w);
  return kernels::gram(space.basis_matrix(), weight_factors(space, w));
}

Eigen::MatrixXcd gram_serial(const SectionSpace& space, const Weight& w) {
  check_pairs(space, w);
  return kernels::gram_serial(space.basis_matrix(), weight_factors(space, w));
}

double l2_norm(const Section& u, const Weight& w) {
  const Polynomial p = u.polynomial();
  if (p.is_zero()) return 0.0;
  for (const auto& t : pole_loci(w)) {
    const double e = 2.0 * order_along(p, t) - 2.0 * t.coef;
    if (!(e > -locus_codim(t, u.space().dims())))
      throw IntegrabilityError("l2_norm: section is not square integrable against a log-tag of coefficient " +
                               std::to_string(t.coef));
  }
  const auto f = weight_factors(u.space(), w);
  const Eigen::VectorXcd v = u.at_nodes();
  std::vector<double> a(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) a[i] = std::norm(v(static_cast<Eigen::Index>(i)));
  return std::sqrt(kernels::weighted_sum(a, f));
}

void write_gram_csv(std::ostream& os, const Eigen::MatrixXcd& g) { io::write_complex_matrix(os, g); }

nlohmann::json gram_descriptor(const SectionSpace& space, const Weight& w) {
  nlohmann::json j{{"dimension", space.dimension()},
                   {"degree", space.degree()},
                   {"twist", space.twist()},
                   {"grid", grid_to_json(space.domain())},
                   {"weight", w.serializable() ? w.to_json() : nlohmann::json(w.label())}};
  return j;
}

}  // namespace l2m
