#include "l2m/levi.hpp"

#include <cmath>
#include <limits>

#include "l2m/kernels.hpp"

namespace l2m {

double LeviMatrix::min_eig() const {
  if (dims == 1) return h11;
  const double mean = 0.5 * (h11 + h22);
  const double half = 0.5 * (h11 - h22);
  return mean - std::sqrt(half * half + std::norm(h12));
}

namespace {

Point offset(const Point& x, const Point& dir, double s) { return Point{x[0] + s * dir[0], x[1] + s * dir[1]}; }

double second_diff(const ScalarFn& f, const Point& x, double f0, const Point& dir, double h) {
  const double fp1 = f(offset(x, dir, h)), fm1 = f(offset(x, dir, -h));
  const double fp2 = f(offset(x, dir, 2 * h)), fm2 = f(offset(x, dir, -2 * h));
  return (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
}

// (1/4) * (D^2_v + D^2_{iv}) for a unit complex direction v.
double levi_along(const ScalarFn& f, const Point& x, double f0, const Point& v, double h) {
  const cplx i{0.0, 1.0};
  const Point iv{i * v[0], i * v[1]};
  return 0.25 * (second_diff(f, x, f0, v, h) + second_diff(f, x, f0, iv, h));
}

}  // namespace

LeviMatrix levi_matrix(const ScalarFn& f, int dims, const Point& x, double step) {
  const double f0 = f(x);
  LeviMatrix m;
  m.dims = dims;
  m.h11 = levi_along(f, x, f0, Point{1.0, 0.0}, step);
  if (dims == 1) return m;
  const double r = 1.0 / std::sqrt(2.0);
  m.h22 = levi_along(f, x, f0, Point{0.0, 1.0}, step);
  const double p = levi_along(f, x, f0, Point{r, r}, step);
  const double q = levi_along(f, x, f0, Point{r, cplx{0.0, r}}, step);
  const double mean = 0.5 * (m.h11 + m.h22);
  m.h12 = cplx{p - mean, q - mean};
  return m;
}

double levi_min_eig(const ScalarFn& f, int dims, const Point& x, double step) {
  return levi_matrix(f, dims, x, step).min_eig();
}

double default_step(const GridDomain& dom) { return 1e-3 * dom.min_radius(); }

double levi_min_eig(const Weight& w, const Point& x, double step, const GridDomain& dom) {
  if (!(step > 0.0)) throw std::invalid_argument("levi_min_eig: step must be positive");
  if (dom.boundary_distance(x) <= 2.0 * step) throw std::out_of_range("levi_min_eig: stencil exits the domain");
  for (const auto& t : w.tags())
    if (std::sqrt(t.dist2(x, w.dims())) <= 2.0 * step)
      throw std::out_of_range("levi_min_eig: stencil touches a log-tag");
  return levi_min_eig([&w](const Point& z) { return w(z); }, w.dims(), x, step);
}

namespace {

PshReport scan(const ScalarFn& f, const GridDomain& dom, const PshOptions& opts) {
  const double h = opts.step > 0.0 ? opts.step : default_step(dom);
  std::vector<std::size_t> idx;
  if (opts.nodes)
    idx = *opts.nodes;
  else {
    idx.resize(dom.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> vals;
  kernels::map_nodes(idx.size(), vals, [&](std::size_t k) {
    const std::size_t i = idx[k];
    const Point& x = dom.node(i);
    if (dom.boundary_distance(x) <= 2.0 * h) return nan;
    if (opts.skip && opts.skip(i)) return nan;
    return levi_min_eig(f, dom.dims(), x, h);
  });
  PshReport rep;
  rep.worst_value = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (std::isnan(vals[k])) {
      ++rep.skipped;
      continue;
    }
    ++rep.checked;
    if (vals[k] < rep.worst_value) {
      rep.worst_value = vals[k];
      rep.worst_node = idx[k];
    }
  }
  if (rep.checked == 0) {
    rep.worst_value = 0.0;
    rep.psh = true;
    return rep;
  }
  rep.worst_point = dom.node(rep.worst_node);
  rep.psh = rep.worst_value >= -opts.tol;
  return rep;
}

}  // namespace

PshReport is_psh_fn(const ScalarFn& f, const GridDomain& dom, const PshOptions& opts) {
  if (opts.tol < 0.0) throw std::invalid_argument("is_psh: tol must be >= 0");
  return scan(f, dom, opts);
}

PshReport is_psh(const Weight& w, const GridDomain& dom, const PshOptions& opts) {
  if (opts.tol < 0.0) throw std::invalid_argument("is_psh: tol must be >= 0");
  if (w.dims() != dom.dims()) throw std::invalid_argument("is_psh: dimension mismatch");
  // A negative-coefficient tag is +infinity at its locus: not psh there.
  for (const auto& t : w.tags()) {
    if (t.coef >= 0.0) continue;
    bool meets = false;
    if (t.kind == LogTag::Kind::point)
      meets = dom.boundary_distance(t.where) > 0.0;
    else
      meets = std::abs(t.where[static_cast<std::size_t>(t.axis)] - dom.axis(t.axis).center) < dom.axis(t.axis).radius;
    if (meets) {
      PshReport rep;
      rep.psh = false;
      rep.worst_value = -std::numeric_limits<double>::infinity();
      rep.worst_point = t.where;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < dom.size(); ++i) {
        const double d = t.dist2(dom.node(i), dom.dims());
        if (d < best) {
          best = d;
          rep.worst_node = i;
        }
      }
      return rep;
    }
  }
  // Stencils that touch a (psh) tag are skipped, as in levi_min_eig.
  const double h = opts.step > 0.0 ? opts.step : default_step(dom);
  PshOptions o = opts;
  o.skip = [&](std::size_t i) {
    if (opts.skip && opts.skip(i)) return true;
    for (const auto& t : w.tags())
      if (std::sqrt(t.dist2(dom.node(i), dom.dims())) <= 2.0 * h) return true;
    return false;
  };
  return scan([&w](const Point& z) { return w.smooth(z); }, dom, o);
}

}  // namespace l2m
