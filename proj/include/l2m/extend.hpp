#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2m/grid.hpp"
#include "l2m/polynomial.hpp"
#include "l2m/sections.hpp"
#include "l2m/weight.hpp"

namespace l2m {

/// Extension from V = {0} (one variable) or V = {z2 = 0} (two variables) to a
/// polydisc Omega, with sigma = z resp. z2 (|d sigma| = 1, sup |sigma| <= 1).
/// The datum f is a constant (point case) or a polynomial in z1.
struct ExtensionProblem {
  GridDomain omega;
  Polynomial f;
  Weight phi;
  int degree = 8;  // truncation degree of the extension space
};

ExtensionProblem make_extension_problem(GridDomain omega, Polynomial f, Weight phi, int degree);

/// Optional extra denominator field: minimize int |F|^2 e^{-phi} / den.
using Denominator = std::function<double(const Point&)>;

struct OtSolution {
  Section F;
  double energy = 0.0;  // int_Omega |F|^2 e^{-phi} / den
  double rhs = 0.0;     // int_V |f|^2 e^{-phi} / den  (counting measure when V is a point)
  double ratio = 0.0;   // energy / rhs (0 when rhs == 0)
};

/// Minimal weighted L^2 extension in the truncated space subject to F|_V = f.
/// Throws ConditioningError when the normal equations are singular.
OtSolution ot_solve(const ExtensionProblem& p, const Denominator& den = {});

/// The trivial extension (pullback of f along the projection to V).
Section trivial_extension(const ExtensionProblem& p);

/// int_Omega |F|^2 e^{-phi} / den for any section of the extension space.
double extension_energy(const ExtensionProblem& p, const Section& F, const Denominator& den = {});

struct IterationStep {
  int k = 1;
  double A = 0.0;          // int |F_k|^{2/m} e^{-phi}
  double energy = 0.0;     // weighted L^2 energy of the solve producing F_k (k >= 2)
  double rhs = 0.0;
  double ratio = 0.0;      // measured L^2 ratio energy / rhs
  std::size_t floored = 0; // nodes where the denominator built from F_k was floored
  double holder_lhs = 0.0; // A_k
  double holder_rhs = 0.0; // (ratio_k * rhs_k)^{1/m} A_{k-1}^{(m-1)/m}
  bool holder_ok = true;
};

struct IterationTrace {
  double m = 1.0;
  double C0 = kPi;
  double limit = 0.0;      // C0 * int_V |f|^{2/m} e^{-phi}
  std::vector<IterationStep> steps;
  std::vector<Section> F;
  bool holder_all_ok = true;
  bool monotone = true;    // A_{k+1} <= A_k whenever A_k > limit
};

/// L^{2/m} extension iteration F_{k+1} = ot_solve(den = |F_k|^{2 - 2/m}),
/// starting from the trivial extension. m = 1 is a single ot_solve.
IterationTrace l2m_iterate(const ExtensionProblem& p, double m, int iters);

/// int_V |f|^{2/m} e^{-phi} (counting measure for the point case).
double boundary_l2m_integral(const ExtensionProblem& p, double m);

/// a (c0 / a)^{1/m}.
double recurrence_map(double a, double c0, double m);
/// Number of iterations until |a_k - c0| <= tol * c0 (max_iters + 1 if never).
int recurrence_iterations_to(double a0, double c0, double m, double tol, int max_iters = 10000);

struct MeanValueReport {
  double lhs = 0.0;    // |F(x)|^{2/m}
  double bound = 0.0;  // (pi r^2)^{-n} e^{sup phi / m} int_P |F|^{2/m} e^{-phi/m}
  bool holds = true;
};

/// Mean value bound on the polydisc of polyradius r centered at x (must lie in
/// the section's domain; std::out_of_range otherwise).
MeanValueReport mean_value_bound(const Section& F, const Point& x, double r, const Weight& w, double m);

void write_trace_csv(std::ostream& os, const IterationTrace& t);
nlohmann::json trace_json(const IterationTrace& t);

}  // namespace l2m
