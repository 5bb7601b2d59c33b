#include "l2m/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace l2m {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

Polynomial::Polynomial(std::vector<Term> terms) : terms_(std::move(terms)) { normalize(); }

Polynomial Polynomial::univariate(const std::vector<cplx>& coefs) {
  std::vector<Term> t;
  for (std::size_t k = 0; k < coefs.size(); ++k) t.push_back({{static_cast<int>(k), 0}, coefs[k]});
  return Polynomial(std::move(t));
}

Polynomial Polynomial::monomial(int a, int b, cplx coef) { return Polynomial({{{a, b}, coef}}); }

void Polynomial::normalize() {
  std::map<std::pair<int, int>, cplx> acc;
  for (const auto& t : terms_) {
    if (t.exp.a < 0 || t.exp.b < 0) throw std::invalid_argument("Polynomial: negative exponent");
    acc[{t.exp.a, t.exp.b}] += t.coef;
  }
  terms_.clear();
  for (const auto& [e, c] : acc)
    if (c != cplx{}) terms_.push_back({{e.first, e.second}, c});
  std::stable_sort(terms_.begin(), terms_.end(), [](const Term& x, const Term& y) {
    return x.exp.degree() != y.exp.degree() ? x.exp.degree() < y.exp.degree() : x.exp.b < y.exp.b;
  });
}

int Polynomial::degree() const {
  int d = -1;
  for (const auto& t : terms_) d = std::max(d, t.exp.degree());
  return d;
}

bool Polynomial::is_zero() const { return terms_.empty(); }

cplx Polynomial::operator()(const Point& z) const {
  cplx s{};
  for (const auto& t : terms_) {
    cplx v = t.coef;
    for (int i = 0; i < t.exp.a; ++i) v *= z[0];
    for (int i = 0; i < t.exp.b; ++i) v *= z[1];
    s += v;
  }
  return s;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  std::vector<Term> t = terms_;
  t.insert(t.end(), o.terms_.begin(), o.terms_.end());
  return Polynomial(std::move(t));
}

Polynomial Polynomial::operator*(cplx s) const {
  std::vector<Term> t = terms_;
  for (auto& x : t) x.coef *= s;
  return Polynomial(std::move(t));
}

Polynomial Polynomial::shifted(const Point& shift) const {
  // (z1 + s1)^a (z2 + s2)^b expanded binomially.
  std::vector<Term> out;
  for (const auto& t : terms_)
    for (int i = 0; i <= t.exp.a; ++i)
      for (int j = 0; j <= t.exp.b; ++j) {
        const cplx c = t.coef * binomial(t.exp.a, i) * binomial(t.exp.b, j) * std::pow(shift[0], t.exp.a - i) *
                       std::pow(shift[1], t.exp.b - j);
        out.push_back({{i, j}, c});
      }
  return Polynomial(std::move(out));
}

namespace {
double max_abs(const std::vector<Polynomial::Term>& t) {
  double m = 0.0;
  for (const auto& x : t) m = std::max(m, std::abs(x.coef));
  return m;
}
}  // namespace

int Polynomial::vanishing_order_at(const Point& p, double rel_tol) const {
  if (is_zero()) return -1;
  const Polynomial s = shifted(p);
  const double scale = std::max(max_abs(terms_), max_abs(s.terms_));
  int ord = -1;
  for (const auto& t : s.terms_)
    if (std::abs(t.coef) > rel_tol * scale && (ord < 0 || t.exp.degree() < ord)) ord = t.exp.degree();
  return ord;
}

int Polynomial::vanishing_order_along(int axis, cplx value, double rel_tol) const {
  if (is_zero()) return -1;
  Point shift{cplx{}, cplx{}};
  shift[static_cast<std::size_t>(axis)] = value;
  const Polynomial s = shifted(shift);
  const double scale = std::max(max_abs(terms_), max_abs(s.terms_));
  int ord = -1;
  for (const auto& t : s.terms_) {
    const int e = axis == 0 ? t.exp.a : t.exp.b;
    if (std::abs(t.coef) > rel_tol * scale && (ord < 0 || e < ord)) ord = e;
  }
  return ord;
}

}  // namespace l2m
