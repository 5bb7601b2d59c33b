#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2m/grid.hpp"
#include "l2m/types.hpp"

namespace l2m {

/// Logarithmic singularity coef * log|z - p|^2 (point, any dims) or
/// coef * log|z_axis - p_axis|^2 (coordinate hyperplane, dims == 2).
/// The metric is e^{-phi}, so a tag with coef > 0 makes e^{-phi} blow up
/// like |z - p|^{-2 coef}.
struct LogTag {
  enum class Kind { point, hyperplane };
  Kind kind = Kind::point;
  Point where{};
  int axis = 0;
  double coef = 0.0;

  static LogTag point(cplx p, double coef) { return LogTag{Kind::point, Point{p, cplx{}}, 0, coef}; }
  static LogTag point2(const Point& p, double coef) { return LogTag{Kind::point, p, 0, coef}; }
  static LogTag hyperplane(int axis, cplx value, double coef) {
    Point w{};
    w[static_cast<std::size_t>(axis)] = value;
    return LogTag{Kind::hyperplane, w, axis, coef};
  }

  /// |z - p|^2 (point) or |z_axis - p_axis|^2.
  double dist2(const Point& z, int dims) const;
  double eval(const Point& z, int dims) const { return coef * std::log(dist2(z, dims)); }
};

/// Analytic smooth terms. abs2: Re(coef) * |z1^a z2^b|^2, psh when Re(coef) >= 0.
/// re: Re(coef * z1^a z2^b), pluriharmonic.
struct SmoothTerm {
  enum class Kind { abs2, re };
  Kind kind = Kind::abs2;
  cplx coef{1.0, 0.0};
  int a = 0;
  int b = 0;
};

/// A weight phi with metric e^{-phi}: smooth part plus log-tags.
///
/// Three representations share the interface. Polynomial weights (constant +
/// SmoothTerms + tags) serialize to JSON. Custom weights wrap an arbitrary
/// evaluator (mollified weights, envelopes, log det of a matrix field).
/// Sampled weights hold node values on one grid and cannot be evaluated off it.
class Weight {
 public:
  using Evaluator = std::function<double(const Point&)>;
  enum class Repr { polynomial, custom, sampled };

  Weight() = default;

  static Weight zero(int dims);
  static Weight constant(int dims, double c);
  static Weight polynomial(int dims, std::vector<SmoothTerm> terms, double constant = 0.0,
                           std::vector<LogTag> tags = {});
  static Weight custom(int dims, Evaluator smooth, std::string label, std::vector<LogTag> tags = {});
  static Weight sampled(const GridDomain& grid, std::vector<double> values, std::string label);

  // Common shapes.
  static Weight abs2(int dims, double c = 1.0) {  // c |z|^2 (sum over variables)
    std::vector<SmoothTerm> t{{SmoothTerm::Kind::abs2, c, 1, 0}};
    if (dims == 2) t.push_back({SmoothTerm::Kind::abs2, c, 0, 1});
    return polynomial(dims, std::move(t));
  }
  static Weight log_abs2(cplx p, double coef) {  // coef log|z - p|^2
    return polynomial(1, {}, 0.0, {LogTag::point(p, coef)});
  }

  int dims() const { return dims_; }
  Repr repr() const { return repr_; }
  const std::string& label() const { return label_; }
  const std::vector<LogTag>& tags() const { return tags_; }
  const std::vector<SmoothTerm>& terms() const { return terms_; }
  double constant_part() const { return constant_; }
  bool serializable() const { return repr_ == Repr::polynomial; }

  /// Smooth part only (tags excluded).
  double smooth(const Point& z) const;
  /// Full value including tags (-inf at a tag with coef > 0).
  double operator()(const Point& z) const;
  double operator()(cplx z) const { return (*this)(Point{z, cplx{}}); }

  /// Full values at the nodes of a grid.
  std::vector<double> sample(const GridDomain& grid) const;

  Weight with_tags(std::vector<LogTag> extra) const;
  Weight scaled(double s) const;
  Weight shifted(double c) const;  // phi + c  (metric scaled by e^{-c})
  Weight operator+(const Weight& o) const;

  /// Restriction phi(t, .) of a two-variable weight to the fiber over t
  /// (first variable frozen). Returns a one-variable weight.
  Weight slice_first(cplx t) const;

  nlohmann::json to_json() const;
  static Weight from_json(const nlohmann::json& j);

 private:
  int dims_ = 1;
  Repr repr_ = Repr::polynomial;
  std::string label_;
  double constant_ = 0.0;
  std::vector<SmoothTerm> terms_;
  std::vector<LogTag> tags_;
  std::shared_ptr<const Evaluator> fn_;
  std::shared_ptr<const std::vector<double>> values_;
  std::string grid_fingerprint_;
};

/// Value of sum of polynomial smooth terms at z.
double eval_terms(const std::vector<SmoothTerm>& terms, const Point& z);

}  // namespace l2m
