#include "l2m/family.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <random>

#include "l2m/bergman.hpp"
#include "l2m/field_io.hpp"
#include "l2m/kernels.hpp"
#include "l2m/mollify.hpp"
#include "l2m/shm.hpp"

namespace l2m {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Fiber problems keyed by exact t, local to one worker.
class FiberCache {
 public:
  FiberCache(const Family& fam) : fam_(fam) {}

  /// nullptr when the fiber weight is not integrable for any section.
  const RayleighProblem* get(cplx t) {
    for (const auto& [key, prob] : entries_)
      if (key == t) return prob.get();
    std::unique_ptr<RayleighProblem> p;
    try {
      p = std::make_unique<RayleighProblem>(fam_.fiber, fiber_weight(fam_, t), fam_.m);
    } catch (const NonFiniteIntegrand&) {
    } catch (const IntegrabilityError&) {
    }
    entries_.emplace_back(t, std::move(p));
    return entries_.back().second.get();
  }

 private:
  const Family& fam_;
  std::vector<std::pair<cplx, std::unique_ptr<RayleighProblem>>> entries_;
};

/// Memoized scalar function of a point (stencils revisit a few points).
class Memo {
 public:
  template <class F>
  double operator()(const Point& p, F&& f) {
    for (const auto& [q, v] : vals_)
      if (q == p) return v;
    const double v = f(p);
    vals_.emplace_back(p, v);
    return v;
  }

 private:
  std::vector<std::pair<Point, double>> vals_;
};

double safe_log(double v) { return v > 0.0 ? std::log(v) : kNaN; }

std::vector<std::size_t> interior_subset(const GridDomain& g, int rs, int as, double margin) {
  std::vector<std::size_t> out;
  for (std::size_t i : g.strided_subset(rs, as))
    if (g.boundary_distance(g.node(i)) > margin) out.push_back(i);
  return out;
}

}  // namespace

Family make_family(GridDomain base, SectionSpace fiber, Weight phi, int m, std::string label) {
  if (base.dims() != 1) throw std::invalid_argument("make_family: base must be a one-variable grid");
  if (fiber.dims() != 1) throw std::invalid_argument("make_family: fiber must be a one-variable space");
  if (phi.dims() != 2) throw std::invalid_argument("make_family: joint weight must have two variables (t, z)");
  if (m < 1) throw std::invalid_argument("make_family: m must be >= 1");
  return Family{std::move(base), std::move(fiber), std::move(phi), m, std::move(label)};
}

Weight fiber_weight(const Family& fam, cplx t) { return fam.phi.slice_first(t); }

GridDomain product_grid(const Family& fam) { return GridDomain({fam.base.axis(0), fam.fiber.domain().axis(0)}); }

PshReport family_psh_report(const Family& fam, double tol, int radial_stride, int angular_stride) {
  const GridDomain prod = product_grid(fam);
  const auto nodes = prod.strided_subset(radial_stride, angular_stride);
  PshOptions po;
  po.tol = tol;
  po.nodes = &nodes;
  return is_psh(fam.phi, prod, po);
}

void require_family_psh(const Family& fam, double tol) {
  const PshReport r = family_psh_report(fam, tol);
  if (!r.psh)
    throw PreconditionError("family weight is not jointly psh: Levi eigenvalue " + std::to_string(r.worst_value) +
                                " at product node " + std::to_string(r.worst_node),
                            r.worst_node, r.worst_value);
}

double tz_family_b1_at_origin(cplx t) {
  const double s = std::norm(t);
  if (s == 0.0) return 1.0 / kPi;
  return s / (kPi * -std::expm1(-s));
}

// ---- RelativeKernel ------------------------------------------------------------

RelativeKernel::RelativeKernel(const Family& fam, OptimizerOptions opts) : fam_(fam), opts_(opts) {}

double RelativeKernel::value(cplx t, cplx x) const {
  std::unique_ptr<RayleighProblem> p;
  try {
    p = std::make_unique<RayleighProblem>(fam_.fiber, fiber_weight(fam_, t), fam_.m);
  } catch (const NonFiniteIntegrand&) {
    return 0.0;
  } catch (const IntegrabilityError&) {
    return 0.0;
  }
  const Point px{x, cplx{}};
  return fam_.m == 1 ? p->closed_form_m1(px).value : p->maximize(px, opts_).value;
}

std::vector<double> RelativeKernel::field(cplx x) const {
  const auto& nodes = fam_.base.nodes();
  std::vector<double> out(nodes.size());
  kernels::for_each_dynamic(nodes.size(), [&](std::size_t i) { out[i] = value(nodes[i][0], x); });
  return out;
}

std::vector<double> relative_kernel(const Family& fam, cplx x_fiber, int restarts, std::uint64_t seed) {
  require_family_psh(fam);
  OptimizerOptions opts;
  opts.restarts = restarts;
  opts.seed = seed;
  return RelativeKernel(fam, opts).field(x_fiber);
}

// ---- psh of the relative kernel -------------------------------------------------

VariationReport psh_variation_check(const Family& fam, const VariationOptions& opts) {
  const double h = opts.step;
  if (!(h > 0.0)) throw std::invalid_argument("psh_variation_check: step must be positive");
  const double margin = 2.0 * h * (1.0 + 1e-9);
  const auto base_nodes = interior_subset(fam.base, opts.base_radial_stride, opts.base_angular_stride, margin);
  const auto fiber_nodes =
      interior_subset(fam.fiber.domain(), opts.fiber_radial_stride, opts.fiber_angular_stride, margin);

  struct BaseResult {
    double logB = kNaN;
    double joint_min = kNaN, t_min = kNaN;
    std::size_t joint_arg = 0, t_arg = 0;
    std::size_t checked = 0, skipped = 0;
  };
  std::vector<BaseResult> res(base_nodes.size());
  OptimizerOptions center = opts.optimizer;
  center.restarts = opts.center_restarts;

  kernels::for_each_dynamic(base_nodes.size(), [&](std::size_t b) {
    const cplx t0 = fam.base.node(base_nodes[b])[0];
    FiberCache cache(fam);
    BaseResult& r = res[b];
    auto kernel_at = [&](cplx t, cplx x) {
      const RayleighProblem* p = cache.get(t);
      if (!p) return 0.0;
      const Point px{x, cplx{}};
      return fam.m == 1 ? p->closed_form_m1(px).value : p->maximize(px, center).value;
    };
    r.logB = safe_log(kernel_at(t0, opts.x_report));

    for (std::size_t k = 0; k < fiber_nodes.size(); ++k) {
      const cplx x0 = fam.fiber.domain().node(fiber_nodes[k])[0];
      Memo memo;
      ScalarFn f;
      Eigen::VectorXcd warm;
      if (fam.m == 1) {
        f = [&](const Point& p) { return memo(p, [&](const Point& q) { return safe_log(kernel_at(q[0], q[1])); }); };
      } else {
        const RayleighProblem* p0 = cache.get(t0);
        if (!p0) {
          ++r.skipped;
          continue;
        }
        const auto sol = p0->maximize(Point{x0, cplx{}}, center);
        if (!(sol.value > 0.0)) {
          ++r.skipped;
          continue;
        }
        warm = sol.coef;
        const double logc = std::log(sol.value);
        f = [&, logc](const Point& p) {
          if (p[0] == t0 && p[1] == x0) return logc;
          return memo(p, [&](const Point& q) {
            const RayleighProblem* pq = cache.get(q[0]);
            return pq ? safe_log(pq->polish(Point{q[1], cplx{}}, warm, opts.optimizer).value) : kNaN;
          });
        };
      }
      const LeviMatrix L = levi_matrix(f, 2, Point{t0, x0}, h);
      const double e = L.min_eig();
      if (!std::isfinite(e) || !std::isfinite(L.h11)) {
        ++r.skipped;
        continue;
      }
      ++r.checked;
      if (std::isnan(r.joint_min) || e < r.joint_min) {
        r.joint_min = e;
        r.joint_arg = k;
      }
      if (std::isnan(r.t_min) || L.h11 < r.t_min) {
        r.t_min = L.h11;
        r.t_arg = k;
      }
    }
  });

  VariationReport rep;
  rep.worst_value = rep.worst_t_value = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < base_nodes.size(); ++b) {
    const BaseResult& r = res[b];
    const cplx t0 = fam.base.node(base_nodes[b])[0];
    rep.rows.push_back({t0, r.logB, r.joint_min});
    rep.checked += r.checked;
    rep.skipped += r.skipped;
    if (r.checked == 0) continue;
    if (r.joint_min < rep.worst_value) {
      rep.worst_value = r.joint_min;
      rep.worst_t = t0;
      rep.worst_x = fam.fiber.domain().node(fiber_nodes[r.joint_arg])[0];
    }
    if (r.t_min < rep.worst_t_value) {
      rep.worst_t_value = r.t_min;
      rep.worst_t_t = t0;
      rep.worst_t_x = fam.fiber.domain().node(fiber_nodes[r.t_arg])[0];
    }
  }
  if (rep.checked == 0) {
    rep.worst_value = rep.worst_t_value = 0.0;
    rep.psh = rep.t_subharmonic = false;  // nothing verified is not a pass
    return rep;
  }
  rep.psh = rep.worst_value >= -opts.tol;
  rep.t_subharmonic = rep.worst_t_value >= -opts.tol;
  return rep;
}

// ---- uniform bound ------------------------------------------------------------------

UniformBoundReport uniform_bound_check(const Family& fam, const std::vector<cplx>& xs, const OptimizerOptions& opts) {
  if (xs.empty()) throw std::invalid_argument("uniform_bound_check: empty bound region");
  UniformBoundReport rep;
  const RelativeKernel rk(fam, opts);
  for (cplx x : xs) {
    std::vector<double> B = rk.field(x);
    rep.C = std::max(rep.C, *std::max_element(B.begin(), B.end()));
    const double mx = *std::max_element(B.begin(), B.end());
    std::nth_element(B.begin(), B.begin() + static_cast<std::ptrdiff_t>(B.size() / 2), B.end());
    const double med = B[B.size() / 2];
    const double ratio = med > 0.0 ? mx / med : std::numeric_limits<double>::infinity();
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
  }
  rep.pass = rep.worst_ratio <= 2.0;
  return rep;
}

// ---- envelopes -------------------------------------------------------------------------

EnvelopeResult envelope_metric(const std::vector<std::pair<int, Weight>>& entries, const GridDomain& grid,
                               const PshOptions& psh_opts) {
  if (entries.empty()) throw std::invalid_argument("envelope_metric: empty list");
  std::vector<Weight> ws;
  for (const auto& [k, w] : entries) {
    if (k < 1) throw std::invalid_argument("envelope_metric: k must be >= 1");
    ws.push_back(k == 1 ? w : w.scaled(1.0 / k));
  }
  EnvelopeResult out{reg_sup(ws, grid), {}};
  out.psh = is_psh(out.weight, grid, psh_opts);
  return out;
}

// ---- direct-image Gram fields ----------------------------------------------------------

Eigen::MatrixXcd family_gram_at(const Family& fam, cplx t, const OptimizerOptions& opts) {
  const Weight w = fiber_weight(fam, t);
  return fam.m == 1 ? gram(fam.fiber, w) : ns_gram(fam.fiber, w, fam.m, opts);
}

FamilyGramReport family_ns_gram(const Family& fam, const FamilyGramOptions& opts) {
  const double h = opts.step;
  const std::size_t k = fam.fiber.dimension();
  FamilyGramReport rep;

  // Probes: basis duals and seeded random duals.
  std::vector<DualProbeVerdict> probes;
  for (std::size_t j = 0; j < k; ++j) {
    Eigen::VectorXcd xi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(k));
    xi(static_cast<Eigen::Index>(j)) = 1.0;
    probes.push_back({"dual_" + std::to_string(j), xi});
  }
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int r = 0; r < opts.random_probes; ++r) {
    Eigen::VectorXcd xi(static_cast<Eigen::Index>(k));
    for (Eigen::Index j = 0; j < xi.size(); ++j) xi(j) = cplx{nd(rng), nd(rng)};
    probes.push_back({"random_" + std::to_string(r), xi});
  }

  const std::size_t nb = fam.base.size();
  rep.G.resize(nb);
  struct NodeResult {
    bool singular = false;
    bool checked = false;
    std::vector<double> levi;  // per probe
  };
  std::vector<NodeResult> res(nb);
  const double margin = 2.0 * h * (1.0 + 1e-9);

  kernels::for_each_dynamic(nb, [&](std::size_t b) {
    const cplx t0 = fam.base.node(b)[0];
    std::vector<std::pair<cplx, std::shared_ptr<Eigen::LLT<Eigen::MatrixXcd>>>> facs;
    bool singular = false;
    auto factor = [&](cplx t) -> const Eigen::LLT<Eigen::MatrixXcd>* {
      for (const auto& [key, f] : facs)
        if (key == t) return f.get();
      std::shared_ptr<Eigen::LLT<Eigen::MatrixXcd>> f;
      try {
        const Eigen::MatrixXcd G = family_gram_at(fam, t, opts.optimizer);
        if (t == t0) rep.G[b] = G;
        f = std::make_shared<Eigen::LLT<Eigen::MatrixXcd>>(G);
        if (f->info() != Eigen::Success) f.reset();
      } catch (const IntegrabilityError&) {
      } catch (const NonFiniteIntegrand&) {
      }
      if (!f) singular = true;
      facs.emplace_back(t, f);
      return f.get();
    };
    NodeResult& r = res[b];
    const bool inside = fam.base.boundary_distance(Point{t0, cplx{}}) > margin;
    if (!factor(t0)) {
      r.singular = true;
      return;
    }
    if (!inside) return;
    for (const auto& pr : probes) {
      const auto f = [&](const Point& p) {
        const auto* L = factor(p[0]);
        if (!L) return kNaN;
        return safe_log(pr.xi.dot(L->solve(pr.xi)).real());
      };
      r.levi.push_back(levi_matrix(f, 1, Point{t0, cplx{}}, h).h11);
    }
    if (singular) {
      r.singular = true;
      r.levi.clear();
      return;
    }
    r.checked = true;
  });

  for (auto& p : probes) p.worst_value = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < nb; ++b) {
    if (res[b].singular) rep.singular_nodes.push_back(b);
    if (!res[b].checked) continue;
    ++rep.checked;
    for (std::size_t j = 0; j < probes.size(); ++j)
      if (res[b].levi[j] < probes[j].worst_value) {
        probes[j].worst_value = res[b].levi[j];
        probes[j].worst_t = fam.base.node(b)[0];
      }
  }
  for (auto& p : probes) {
    if (rep.checked == 0) {
      p.worst_value = 0.0;
      p.psh = false;
    } else {
      p.psh = std::isfinite(p.worst_value) && p.worst_value >= -opts.tol;
    }
  }
  rep.probes = std::move(probes);
  return rep;
}

LowerBoundScan gram_lower_bound_scan(const Family& fam, const std::vector<cplx>& path, double floor,
                                     const OptimizerOptions& opts) {
  if (path.empty()) throw std::invalid_argument("gram_lower_bound_scan: empty path");
  LowerBoundScan s;
  s.lambda_min.resize(path.size());
  kernels::for_each_dynamic(path.size(), [&](std::size_t i) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(family_gram_at(fam, path[i], opts), Eigen::EigenvaluesOnly);
    s.lambda_min[i] = es.eigenvalues().minCoeff();
  });
  s.inf_lambda_min = s.lambda_min[0];
  for (std::size_t i = 1; i < path.size(); ++i)
    if (s.lambda_min[i] < s.inf_lambda_min) {
      s.inf_lambda_min = s.lambda_min[i];
      s.argmin = i;
    }
  s.above_floor = s.inf_lambda_min > floor;
  return s;
}

// ---- export -----------------------------------------------------------------------------

void write_kernel_field_csv(std::ostream& os, const GridDomain& base, const std::vector<double>& B) {
  if (B.size() != base.size()) throw std::invalid_argument("write_kernel_field_csv: size mismatch");
  os << "t_re,t_im,B,logB\n";
  for (std::size_t i = 0; i < B.size(); ++i) {
    const cplx t = base.node(i)[0];
    os << io::fmt(t.real()) << ',' << io::fmt(t.imag()) << ',' << io::fmt(B[i]) << ','
       << io::fmt(B[i] > 0.0 ? std::log(B[i]) : -std::numeric_limits<double>::infinity()) << '\n';
  }
}

void write_gram_field_csv(std::ostream& os, const GridDomain& base, const std::vector<Eigen::MatrixXcd>& G) {
  if (G.size() != base.size()) throw std::invalid_argument("write_gram_field_csv: size mismatch");
  const Eigen::Index k = G.empty() ? 0 : G.front().rows();
  os << "t_re,t_im";
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) os << ",re(G_" << i << '_' << j << "),im(G_" << i << '_' << j << ')';
  os << '\n';
  for (std::size_t n = 0; n < G.size(); ++n) {
    const cplx t = base.node(n)[0];
    os << io::fmt(t.real()) << ',' << io::fmt(t.imag());
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) {
        const cplx v = G[n].size() ? G[n](i, j) : cplx{kNaN, kNaN};
        os << ',' << io::fmt(v.real()) << ',' << io::fmt(v.imag());
      }
    os << '\n';
  }
}

nlohmann::json family_descriptor(const Family& fam) {
  return nlohmann::json{{"label", fam.label},
                        {"m", fam.m},
                        {"base", grid_to_json(fam.base)},
                        {"fiber", {{"grid", grid_to_json(fam.fiber.domain())}, {"degree", fam.fiber.degree()}}},
                        {"weight", fam.phi.serializable() ? fam.phi.to_json() : nlohmann::json(fam.phi.label())}};
}

}  // namespace l2m
