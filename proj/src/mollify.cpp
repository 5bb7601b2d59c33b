#include "l2m/mollify.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace l2m {

namespace {

struct KernelSamples {
  std::vector<Point> y;
  std::vector<double> rho;
};

std::shared_ptr<const KernelSamples> bump_samples(int dims) {
  const GridDomain unit = dims == 1 ? make_polydisc_grid({1.0}, {12, 16}) : make_polydisc_grid({1.0, 1.0}, {8, 8, 8, 8});
  auto ks = std::make_shared<KernelSamples>();
  double total = 0.0;
  for (std::size_t i = 0; i < unit.size(); ++i) {
    const Point& y = unit.node(i);
    double r = unit.weights()[i];
    for (int k = 0; k < dims; ++k) {
      const double s2 = std::norm(y[static_cast<std::size_t>(k)]);
      r *= s2 < 1.0 ? std::exp(-1.0 / (1.0 - s2)) : 0.0;
    }
    ks->y.push_back(y);
    ks->rho.push_back(r);
    total += r;
  }
  for (double& r : ks->rho) r /= total;
  return ks;
}

}  // namespace

Weight mollify(const Weight& w, double epsilon, const GridDomain& dom) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("mollify: epsilon must be positive");
  if (epsilon >= dom.min_radius()) throw std::invalid_argument("mollify: epsilon too large for the domain");
  if (w.dims() != dom.dims()) throw std::invalid_argument("mollify: dimension mismatch");
  if (w.repr() == Weight::Repr::sampled) throw UnsupportedError("mollify: sampled weight");
  auto ks = bump_samples(w.dims());
  return Weight::custom(
      w.dims(),
      [w, ks, epsilon](const Point& x) {
        double s = 0.0;
        for (std::size_t i = 0; i < ks->y.size(); ++i)
          s += ks->rho[i] * w(Point{x[0] - epsilon * ks->y[i][0], x[1] - epsilon * ks->y[i][1]});
        return s;
      },
      "mollified");
}

Weight reg_sup(const std::vector<Weight>& ws, const GridDomain& grid, const RegSupOptions& opts) {
  if (ws.empty()) throw std::invalid_argument("reg_sup: empty list");
  for (const auto& w : ws)
    if (w.dims() != grid.dims()) throw std::invalid_argument("reg_sup: weights must share the grid's dimension");
  if (opts.usc_radius < 0.0) throw std::invalid_argument("reg_sup: negative usc radius");

  const bool any_sampled =
      std::any_of(ws.begin(), ws.end(), [](const Weight& w) { return w.repr() == Weight::Repr::sampled; });
  if (any_sampled) {
    if (opts.usc_radius > 0.0) throw UnsupportedError("reg_sup: smoothing pass needs evaluable weights");
    if (ws.size() == 1) return ws.front();
    std::vector<double> best = ws.front().sample(grid);
    for (std::size_t k = 1; k < ws.size(); ++k) {
      const auto v = ws[k].sample(grid);
      for (std::size_t i = 0; i < best.size(); ++i) best[i] = std::max(best[i], v[i]);
    }
    return Weight::sampled(grid, std::move(best), "reg_sup");
  }

  Weight env = ws.size() == 1 ? ws.front()
                              : Weight::custom(
                                    grid.dims(),
                                    [ws](const Point& z) {
                                      double m = ws.front()(z);
                                      for (std::size_t k = 1; k < ws.size(); ++k) m = std::max(m, ws[k](z));
                                      return m;
                                    },
                                    "reg_sup");
  if (opts.usc_radius > 0.0) return mollify(env, opts.usc_radius, grid);
  return env;
}

}  // namespace l2m
