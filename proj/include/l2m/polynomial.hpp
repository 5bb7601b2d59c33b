#pragma once

#include <vector>

#include "l2m/types.hpp"

namespace l2m {

/// Exponent pair of z1^a z2^b (b == 0 for one-variable polynomials).
struct Monomial {
  int a = 0;
  int b = 0;
  int degree() const { return a + b; }
  friend bool operator==(const Monomial&, const Monomial&) = default;
};

/// Sparse polynomial in one or two complex variables.
class Polynomial {
 public:
  struct Term {
    Monomial exp;
    cplx coef;
  };

  Polynomial() = default;
  explicit Polynomial(std::vector<Term> terms);
  /// Dense one-variable polynomial c0 + c1 z + ...
  static Polynomial univariate(const std::vector<cplx>& coefs);
  static Polynomial constant(cplx c) { return univariate({c}); }
  static Polynomial monomial(int a, int b = 0, cplx coef = 1.0);

  const std::vector<Term>& terms() const { return terms_; }
  int degree() const;
  bool is_zero() const;

  cplx operator()(const Point& z) const;
  cplx operator()(cplx z) const { return (*this)(Point{z, cplx{}}); }

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator*(cplx s) const;

  /// Coefficients after the substitution z_k -> z_k + shift_k (Taylor shift).
  Polynomial shifted(const Point& shift) const;
  /// Order of vanishing at a point (min total degree of the shifted expansion);
  /// coefficients below rel_tol * max|coef| count as zero. -1 for the zero polynomial.
  int vanishing_order_at(const Point& p, double rel_tol = 1e-12) const;
  /// Multiplicity of the factor (z_axis - value).
  int vanishing_order_along(int axis, cplx value, double rel_tol = 1e-12) const;

 private:
  void normalize();
  std::vector<Term> terms_;
};

/// Binomial coefficient as a double (exact for the small arguments used here).
double binomial(int n, int k);

}  // namespace l2m
