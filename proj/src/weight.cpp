#include "l2m/weight.hpp"

#include <cmath>
#include <limits>

#include "l2m/kernels.hpp"

namespace l2m {

using nlohmann::json;

double LogTag::dist2(const Point& z, int dims) const {
  if (kind == Kind::hyperplane) return std::norm(z[static_cast<std::size_t>(axis)] - where[static_cast<std::size_t>(axis)]);
  double d = std::norm(z[0] - where[0]);
  if (dims == 2) d += std::norm(z[1] - where[1]);
  return d;
}

double eval_terms(const std::vector<SmoothTerm>& terms, const Point& z) {
  double s = 0.0;
  for (const auto& t : terms) {
    cplx m{1.0, 0.0};
    for (int i = 0; i < t.a; ++i) m *= z[0];
    for (int i = 0; i < t.b; ++i) m *= z[1];
    s += t.kind == SmoothTerm::Kind::abs2 ? t.coef.real() * std::norm(m) : (t.coef * m).real();
  }
  return s;
}

Weight Weight::zero(int dims) { return constant(dims, 0.0); }


Weight Weight::constant(int dims, double c) { return polynomial(dims, {}, c); }

Weight Weight::polynomial(int dims, std::vector<SmoothTerm> terms, double constant, std::vector<LogTag> tags) {
  if (dims != 1 && dims != 2) throw std::invalid_argument("Weight: dims must be 1 or 2");
  for (const auto& t : terms)
    if (t.a < 0 || t.b < 0 || (dims == 1 && t.b != 0))
      throw std::invalid_argument("Weight: term exponent out of range for dims");
  for (const auto& g : tags)
    if (g.kind == LogTag::Kind::hyperplane && dims != 2)
      throw std::invalid_argument("Weight: hyperplane tags need dims == 2");
  Weight w;
  w.dims_ = dims;
  w.repr_ = Repr::polynomial;
  w.label_ = "polynomial";
  w.constant_ = constant;
  w.terms_ = std::move(terms);
  w.tags_ = std::move(tags);
  return w;
}

Weight Weight::custom(int dims, Evaluator smooth, std::string label, std::vector<LogTag> tags) {
  Weight w = polynomial(dims, {}, 0.0, std::move(tags));
  w.repr_ = Repr::custom;
  w.label_ = std::move(label);
  w.fn_ = std::make_shared<const Evaluator>(std::move(smooth));
  return w;
}

Weight Weight::sampled(const GridDomain& grid, std::vector<double> values, std::string label) {
  if (values.size() != grid.size()) throw std::invalid_argument("Weight::sampled: value count does not match grid");
  Weight w = polynomial(grid.dims(), {});
  w.repr_ = Repr::sampled;
  w.label_ = std::move(label);
  w.values_ = std::make_shared<const std::vector<double>>(std::move(values));
  w.grid_fingerprint_ = grid.fingerprint();
  return w;
}

double Weight::smooth(const Point& z) const {
  switch (repr_) {
    case Repr::polynomial:
      return constant_ + eval_terms(terms_, z);
    case Repr::custom:
      return (*fn_)(z);
    case Repr::sampled:
      break;
  }
  throw UnsupportedError("Weight '" + label_ + "' is sampled on a grid and has no off-grid evaluation");
}

double Weight::operator()(const Point& z) const {
  double v = smooth(z);
  for (const auto& t : tags_) v += t.eval(z, dims_);
  return v;
}

std::vector<double> Weight::sample(const GridDomain& grid) const {
  if (grid.dims() != dims_) throw std::invalid_argument("Weight::sample: dimension mismatch");
  if (repr_ == Repr::sampled) {
    if (grid.fingerprint() != grid_fingerprint_)
      throw std::invalid_argument("Weight::sample: sampled weight '" + label_ + "' lives on a different grid");
    return *values_;
  }
  std::vector<double> out;
  const auto& nodes = grid.nodes();
  kernels::map_nodes(grid.size(), out, [&](std::size_t i) { return (*this)(nodes[i]); });
  return out;
}

Weight Weight::with_tags(std::vector<LogTag> extra) const {
  if (repr_ == Repr::sampled) throw UnsupportedError("Weight::with_tags: sampled weight");
  Weight w = *this;
  for (auto& t : extra) {
    if (t.kind == LogTag::Kind::hyperplane && dims_ != 2)
      throw std::invalid_argument("Weight: hyperplane tags need dims == 2");
    w.tags_.push_back(t);
  }
  return w;
}

Weight Weight::scaled(double s) const {
  Weight w = *this;
  for (auto& t : w.tags_) t.coef *= s;
  switch (repr_) {
    case Repr::polynomial:
      w.constant_ *= s;
      for (auto& t : w.terms_) t.coef *= s;
      break;
    case Repr::custom: {
      auto fn = fn_;
      w.fn_ = std::make_shared<const Evaluator>([fn, s](const Point& z) { return s * (*fn)(z); });
      break;
    }
    case Repr::sampled: {
      auto v = *values_;
      for (double& x : v) x *= s;
      w.values_ = std::make_shared<const std::vector<double>>(std::move(v));
      break;
    }
  }
  return w;
}

Weight Weight::shifted(double c) const {
  Weight w = *this;
  switch (repr_) {
    case Repr::polynomial:
      w.constant_ += c;
      break;
    case Repr::custom: {
      auto fn = fn_;
      w.fn_ = std::make_shared<const Evaluator>([fn, c](const Point& z) { return (*fn)(z) + c; });
      break;
    }
    case Repr::sampled: {
      auto v = *values_;
      for (double& x : v) x += c;
      w.values_ = std::make_shared<const std::vector<double>>(std::move(v));
      break;
    }
  }
  return w;
}

Weight Weight::operator+(const Weight& o) const {
  if (o.dims_ != dims_) throw std::invalid_argument("Weight +: dimension mismatch");
  if (repr_ == Repr::sampled || o.repr_ == Repr::sampled) {
    if (repr_ != o.repr_ || grid_fingerprint_ != o.grid_fingerprint_ || !tags_.empty() || !o.tags_.empty())
      throw UnsupportedError("Weight +: sampled weights combine only with sampled weights on the same grid");
    Weight w = *this;
    auto v = *values_;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += (*o.values_)[i];
    w.values_ = std::make_shared<const std::vector<double>>(std::move(v));
    w.label_ = label_ + "+" + o.label_;
    return w;
  }
  std::vector<LogTag> tags = tags_;
  tags.insert(tags.end(), o.tags_.begin(), o.tags_.end());
  if (repr_ == Repr::polynomial && o.repr_ == Repr::polynomial) {
    std::vector<SmoothTerm> terms = terms_;
    terms.insert(terms.end(), o.terms_.begin(), o.terms_.end());
    return polynomial(dims_, std::move(terms), constant_ + o.constant_, std::move(tags));
  }
  Weight a = *this, b = o;
  a.tags_.clear();
  b.tags_.clear();
  return custom(dims_, [a, b](const Point& z) { return a.smooth(z) + b.smooth(z); }, label_ + "+" + o.label_,
                std::move(tags));
}

Weight Weight::slice_first(cplx t) const {
  if (dims_ != 2) throw std::invalid_argument("slice_first: two-variable weight expected");
  if (repr_ == Repr::sampled) throw UnsupportedError("slice_first: sampled weight");
  std::vector<LogTag> fiber_tags;
  double extra_constant = 0.0;
  std::vector<LogTag> smooth_point_tags;  // point tags off this fiber: smooth in z
  for (const auto& g : tags_) {
    if (g.kind == LogTag::Kind::hyperplane) {
      if (g.axis == 1)
        fiber_tags.push_back(LogTag::point(g.where[1], g.coef));
      else
        extra_constant += g.coef * std::log(std::norm(t - g.where[0]));
    } else if (t == g.where[0]) {
      fiber_tags.push_back(LogTag::point(g.where[1], g.coef));
    } else {
      smooth_point_tags.push_back(g);
    }
  }
  if (repr_ == Repr::polynomial && smooth_point_tags.empty()) {
    std::vector<SmoothTerm> terms;
    for (const auto& s : terms_) {
      cplx ta{1.0, 0.0};
      for (int i = 0; i < s.a; ++i) ta *= t;
      SmoothTerm f = s;
      f.a = s.b;  // fiber variable becomes the first slot
      f.b = 0;
      f.coef = s.kind == SmoothTerm::Kind::abs2 ? cplx{s.coef.real() * std::norm(ta), 0.0} : s.coef * ta;
      terms.push_back(f);
    }
    Weight w = polynomial(1, std::move(terms), constant_ + extra_constant, std::move(fiber_tags));
    return w;
  }
  Weight base = *this;
  base.tags_.clear();
  return custom(
      1,
      [base, t, extra_constant, smooth_point_tags](const Point& z) {
        const Point tz{t, z[0]};
        double v = base.smooth(tz) + extra_constant;
        for (const auto& g : smooth_point_tags) v += g.eval(tz, 2);
        return v;
      },
      label_ + "|fiber", std::move(fiber_tags));
}

// ---- JSON ------------------------------------------------------------------

namespace {

json cjson(cplx c) { return json::array({c.real(), c.imag()}); }

cplx parse_c(const json& j, const std::string& key) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw std::invalid_argument("weight: key '" + key + "' must be a number or [re, im]");
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw std::invalid_argument(where + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace

json Weight::to_json() const {
  if (!serializable())
    throw UnsupportedError("Weight '" + label_ + "' is not an analytic family and cannot be serialized");
  json j;
  j["dims"] = dims_;
  j["constant"] = constant_;
  j["terms"] = json::array();
  for (const auto& t : terms_) {
    json tj;
    tj["kind"] = t.kind == SmoothTerm::Kind::abs2 ? "abs2" : "re";
    tj["coef"] = cjson(t.coef);
    tj["exp"] = json::array({t.a, t.b});
    j["terms"].push_back(tj);
  }
  j["tags"] = json::array();
  for (const auto& g : tags_) {
    json gj;
    gj["coef"] = g.coef;
    if (g.kind == LogTag::Kind::point) {
      gj["kind"] = "point";
      gj["at"] = dims_ == 1 ? cjson(g.where[0]) : json::array({cjson(g.where[0]), cjson(g.where[1])});
    } else {
      gj["kind"] = "hyperplane";
      gj["axis"] = g.axis;
      gj["value"] = cjson(g.where[static_cast<std::size_t>(g.axis)]);
    }
    j["tags"].push_back(gj);
  }
  return j;
}

Weight Weight::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("weight: object expected");
  reject_unknown(j, {"dims", "constant", "terms", "tags"}, "weight");
  const int dims = j.value("dims", 1);
  if (dims != 1 && dims != 2) throw std::invalid_argument("weight: key 'dims' must be 1 or 2");
  const double c = j.value("constant", 0.0);
  std::vector<SmoothTerm> terms;
  for (const auto& tj : j.value("terms", json::array())) {
    reject_unknown(tj, {"kind", "coef", "exp"}, "weight.terms");
    SmoothTerm t;
    const std::string kind = tj.at("kind").get<std::string>();
    if (kind == "abs2")
      t.kind = SmoothTerm::Kind::abs2;
    else if (kind == "re")
      t.kind = SmoothTerm::Kind::re;
    else
      throw std::invalid_argument("weight.terms: unknown kind '" + kind + "'");
    t.coef = parse_c(tj.value("coef", json(1.0)), "coef");
    const auto e = tj.at("exp");
    if (!e.is_array() || e.empty() || e.size() > 2) throw std::invalid_argument("weight.terms: key 'exp' must be [a] or [a, b]");
    t.a = e[0].get<int>();
    t.b = e.size() == 2 ? e[1].get<int>() : 0;
    terms.push_back(t);
  }
  std::vector<LogTag> tags;
  for (const auto& gj : j.value("tags", json::array())) {
    reject_unknown(gj, {"kind", "at", "axis", "value", "coef"}, "weight.tags");
    const std::string kind = gj.value("kind", std::string("point"));
    const double coef = gj.at("coef").get<double>();
    if (kind == "point") {
      const auto& at = gj.at("at");
      if (dims == 2 && at.is_array() && at.size() == 2 && at[0].is_array())
        tags.push_back(LogTag::point2({parse_c(at[0], "at"), parse_c(at[1], "at")}, coef));
      else if (dims == 1)
        tags.push_back(LogTag::point(parse_c(at, "at"), coef));
      else
        throw std::invalid_argument("weight.tags: key 'at' must be [[re,im],[re,im]] for dims 2");
    } else if (kind == "hyperplane") {
      tags.push_back(LogTag::hyperplane(gj.at("axis").get<int>(), parse_c(gj.at("value"), "value"), coef));
    } else {
      throw std::invalid_argument("weight.tags: unknown kind '" + kind + "'");
    }
  }
  return polynomial(dims, std::move(terms), c, std::move(tags));
}

}  // namespace l2m
