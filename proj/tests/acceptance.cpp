// Acceptance gate. Prints one PASS/FAIL line per criterion with the measured
// quantities and pinned tolerances; exits nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "l2m/bergman.hpp"
#include "l2m/extend.hpp"
#include "l2m/family.hpp"
#include "l2m/mollify.hpp"
#include "l2m/shm.hpp"
#include "test_util.hpp"

using namespace l2m;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Point at(cplx z) { return Point{z, cplx{}}; }

// ---- 1: optimizer vs closed form at m = 1 ------------------------------------------

void oracle_equivalence(Outcome& o) {
  const GridDomain g = make_polydisc_grid({1.0}, {64, 64});
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    const int degree = c % 8;  // dimension 1..8
    const Weight w = Weight::polynomial(1, {{SmoothTerm::Kind::abs2, 2.0 * u(rng), 1, 0},
                                            {SmoothTerm::Kind::abs2, u(rng), 2, 0},
                                            {SmoothTerm::Kind::re, test::random_cplx(rng, 0.5), 1 + c % 3, 0}});
    const SectionSpace s = make_poly_space(g, degree, 1);
    const Point x = at(test::random_in_disc(rng, 0.8));
    const double cf = bergman_closed_form_m1(s, w, x);
    const double opt = bergman_optimize(s, w, 1, x, 8, 1000 + static_cast<std::uint64_t>(c)).value;
    worst = std::max(worst, test::rel_err(opt, cf));
  }
  o.detail << "50 cases, worst relative error " << worst << " (tol 1e-6)";
  o.require(worst <= 1e-6, "relative error <= 1e-6");
}

// ---- 2: classical disc kernel --------------------------------------------------------

void disc_kernel(Outcome& o) {
  const GridDomain g = make_polydisc_grid({1.0}, {256, 256});
  const double v = bergman_closed_form_m1(make_poly_space(g, 30, 1), Weight::zero(1), at(0.5));
  const double oracle = 1.0 / (kPi * 0.75 * 0.75);
  o.detail << "B1(0.5) = " << v << ", full-disc value " << oracle << ", |diff| " << std::abs(v - oracle) << " (tol 1e-3)";
  o.require(std::abs(v - oracle) <= 1e-3, "|B1(0.5) - 1/(pi (1-0.25)^2)| <= 1e-3");
}

// ---- 3: rank-2 metric with det |z|^4 ---------------------------------------------------------------

void det_z4_metric(Outcome& o) {
  const GridDomain g = make_polydisc_grid({1.0}, {64, 64});
  const MatrixMetric h = raufi_example(g);
  double det_err = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = std::norm(g.node(i)[0]);
    det_err = std::max(det_err, std::abs(h.at_node(i).determinant().real() - a * a));
  }
  const GriffithsReport gr = griffiths_negative_test(h, default_test_sections(2), {1e-5});

  const GridDomain ring = make_polydisc_grid({0.1}, {64, 16});
  const MatrixMetric d = dual_metric(raufi_example(ring));
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const double r = std::abs(ring.node(i)[0]);
    if (d.is_singular(i) || r < 1e-3 || r > 1e-1) continue;
    lx.push_back(std::log(r));
    ly.push_back(std::log(d.at_node(i)(1, 1).real()));
  }
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) mx += lx[k], my += ly[k];
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(ly.size());
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) sxy += (lx[k] - mx) * (ly[k] - my), sxx += (lx[k] - mx) * (lx[k] - mx);
  const double slope = sxy / sxx;

  const EigenBoundsReport eb = eigen_bounds_check(h, 2.0);
  o.detail << "max |det - |z|^4| " << det_err << " (tol 1e-12); Griffiths worst Levi " << gr.worst_value
           << " (tol 1e-5); dual (2,2) slope " << slope << " over " << lx.size() << " nodes (target -4 +- 0.1); eigen bounds C=2 "
           << (eb.ok() ? "hold" : "fail");
  o.require(det_err <= 1e-12, "det");
  o.require(gr.pass, "Griffiths negativity");
  o.require(std::abs(slope + 4.0) <= 0.1 && lx.size() >= 10, "slope");
  o.require(eb.ok(), "eigenvalue bounds");
}

// ---- 4: eigenvalue bounds on random fields ------------------------------------------

void eigen_suite(Outcome& o) {
  const GridDomain g = make_polydisc_grid({1.0}, {8, 8});
  std::mt19937_64 rng(4);
  int failures = 0, oracle_failures = 0;
  for (int t = 0; t < 1000; ++t) {
    const int r = 2 + t % 3;
    std::vector<HMatrix> s;
    for (std::size_t i = 0; i < g.size(); ++i) {
      HMatrix A(r, r);
      for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b) A(a, b) = test::random_cplx(rng);
      HMatrix h = A * A.adjoint();
      h = (0.5 * (h + h.adjoint())).eval();
      h /= h.cwiseAbs().maxCoeff();  // entries bounded by C = 1
      s.push_back(h);
    }
    const MatrixMetric h = MatrixMetric::from_samples(g, s);
    if (!eigen_bounds_check(h, 1.0).ok()) ++failures;
    for (const HMatrix& m : s) {
      Eigen::SelfAdjointEigenSolver<HMatrix> es(m);
      const double det = m.determinant().real();
      if (es.eigenvalues().maxCoeff() > r * (1 + 1e-12) || es.eigenvalues().minCoeff() < det / std::pow(r, r - 1) - 1e-12)
        ++oracle_failures;
    }
  }
  o.detail << "1000 fields: " << failures << " check failures, " << oracle_failures << " oracle failures";
  o.require(failures == 0 && oracle_failures == 0, "zero failures");
}

// ---- 5: extension constant ---------------------------------------------------------

void ot_constant(Outcome& o) {
  const OtSolution disc = ot_solve(make_extension_problem(make_polydisc_grid({1.0}, {64, 64}), Polynomial::constant(1.0), Weight::zero(1), 8));
  const OtSolution bi = ot_solve(make_extension_problem(make_polydisc_grid({1.0, 1.0}, {16, 16, 16, 16}), Polynomial::monomial(1),
                                                        Weight::zero(2), 3));
  o.detail << "disc ratio - pi = " << disc.ratio - kPi << " (tol 1e-8); bidisc ratio - pi = " << bi.ratio - kPi << " (tol 1e-6)";
  o.require(std::abs(disc.ratio - kPi) <= 1e-8, "disc");
  o.require(std::abs(bi.ratio - kPi) <= 1e-6, "bidisc");
}

// ---- 6: iteration and recurrence ---------------------------------------------------

void iteration(Outcome& o) {
  int max_iters = 0;
  for (double m : {2.0, 3.0, 5.0})
    for (double a0 : {0.1, 10.0, 100.0}) {
      const int n = recurrence_iterations_to(a0, 1.0, m, 1e-9);
      max_iters = std::max(max_iters, n);
      o.require(n <= 10000, "recurrence converges");
    }
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int traces = 0, steps = 0, violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < 6; ++c) {
    const int dims = 1 + c % 2;
    std::vector<SmoothTerm> terms{{SmoothTerm::Kind::abs2, 0.2 + u(rng), 1, 0},
                                  {SmoothTerm::Kind::re, test::random_cplx(rng, 0.4), 1, 0}};
    if (dims == 2) terms.push_back({SmoothTerm::Kind::abs2, 0.2 + u(rng), 0, 1});
    const GridDomain dom = dims == 1 ? make_polydisc_grid({1.0}, {48, 48}) : make_polydisc_grid({1.0, 1.0}, {12, 16, 12, 16});
    const Polynomial f = dims == 1 ? Polynomial::constant(1.0) : Polynomial::univariate({1.0, test::random_cplx(rng, 0.5)});
    const ExtensionProblem p = make_extension_problem(dom, f, Weight::polynomial(dims, terms), dims == 1 ? 10 : 4);
    const double m = c < 2 ? 2.0 : (c < 4 ? 3.0 : 2.5);
    const IterationTrace t = l2m_iterate(p, m, 15);
    ++traces;
    for (const auto& s : t.steps) {
      if (s.k < 2) continue;
      ++steps;
      worst = std::max(worst, s.holder_lhs / s.holder_rhs - 1.0);
      if (!s.holder_ok) ++violations;
    }
  }
  o.detail << "recurrence: 9 starts converge within 1e-9 (max " << max_iters << " iterations); live traces: " << traces
           << " traces, " << steps << " steps, worst A_{k+1}/bound - 1 = " << worst << " (tol 1e-8), violations " << violations;
  o.require(violations == 0 && worst <= 1e-8, "Holder step");
}

// ---- 7, 8: families ---------------------------------------------------------------

struct FamilySpec {
  std::string name;
  Weight phi;
};

std::vector<FamilySpec> families() {
  std::vector<FamilySpec> f{{"|tz|^2", Weight::polynomial(2, {{SmoothTerm::Kind::abs2, 1.0, 1, 1}})}};
  for (std::uint64_t seed : {71u, 72u}) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.2, 1.5);
    std::uniform_int_distribution<int> e(0, 2);
    std::vector<SmoothTerm> terms{{SmoothTerm::Kind::abs2, u(rng), 1 + e(rng) % 2, 1 + e(rng) % 2}};
    for (int k = 0; k < 2; ++k) {
      int a = e(rng), b = e(rng);
      if (a == 0 && b == 0) b = 1;
      terms.push_back({SmoothTerm::Kind::abs2, u(rng), a, b});
    }
    std::ostringstream name;
    name << "seeded(" << seed << "):";
    for (const auto& t : terms) name << " " << t.coef.real() << "|t|^" << 2 * t.a << "|z|^" << 2 * t.b;
    f.push_back({name.str(), Weight::polynomial(2, terms)});
  }
  return f;
}

const GridDomain& base_grid() {
  static const GridDomain g = make_polydisc_grid({1.0}, {48, 48});
  return g;
}
const GridDomain& fiber_grid() {
  static const GridDomain g = make_polydisc_grid({1.0}, {64, 64});
  return g;
}

void family_psh(Outcome& o) {
  bool closed_form_done = false;
  for (const auto& spec : families()) {
    const auto t0 = std::chrono::steady_clock::now();
    const Family f1 = make_family(base_grid(), make_poly_space(fiber_grid(), 2, 1), spec.phi, 1, spec.name);
    require_family_psh(f1);
    VariationOptions v1;
    v1.tol = 1e-4;
    v1.base_radial_stride = v1.base_angular_stride = 1;
    v1.fiber_radial_stride = v1.fiber_angular_stride = 4;
    const VariationReport r1 = psh_variation_check(f1, v1);

    const Family f2 = make_family(base_grid(), make_poly_space(fiber_grid(), 2, 2), spec.phi, 2, spec.name);
    VariationOptions v2;
    v2.tol = 1e-3;
    v2.base_radial_stride = v2.base_angular_stride = 4;
    v2.fiber_radial_stride = v2.fiber_angular_stride = 16;
    v2.center_restarts = 8;
    const VariationReport r2 = psh_variation_check(f2, v2);
    const double secs = seconds_since(t0);

    o.detail << "\n    " << spec.name << ": m=1 worst Levi " << r1.worst_value << " / t-subharmonic " << r1.worst_t_value
             << " over " << r1.checked << " (tol 1e-4); m=2 worst Levi " << r2.worst_value << " / " << r2.worst_t_value
             << " over " << r2.checked << " (tol 1e-3); " << secs << " s (limit 120 s)";
    o.require(r1.pass() && r1.checked > 0, spec.name + " m=1 log-psh");
    o.require(r2.pass() && r2.checked > 0, spec.name + " m=2 log-psh");
    o.require(secs < 120.0, spec.name + " runtime < 120 s");

    if (!closed_form_done) {
      const auto B = relative_kernel(f1, 0.0);
      double worst = 0.0;
      for (std::size_t i = 0; i < base_grid().size(); ++i)
        worst = std::max(worst, test::rel_err(B[i], tz_family_b1_at_origin(base_grid().node(i)[0])));
      double oracle_worst = 0.0;  // closed form vs an independent radial integral
      for (std::size_t i = 0; i < base_grid().size(); i += 97) {
        const double a = std::norm(base_grid().node(i)[0]);
        const double I = test::radial_integral([a](double r) { return std::exp(-a * r * r); });
        oracle_worst = std::max(oracle_worst, test::rel_err(tz_family_b1_at_origin(base_grid().node(i)[0]), 1.0 / I));
      }
      o.detail << "\n    closed form B1(t,0): worst relative error " << worst << ", radial oracle " << oracle_worst << " (tol 1e-5)";
      o.require(worst <= 1e-5 && oracle_worst <= 1e-5, "closed form");
      closed_form_done = true;
    }
  }
}

void family_gram(Outcome& o) {
  for (const auto& spec : families()) {
    const Family f = make_family(base_grid(), make_poly_space(fiber_grid(), 2, 1), spec.phi, 1, spec.name);
    FamilyGramOptions go;
    go.tol = 1e-4;
    go.random_probes = 16;
    const FamilyGramReport r = family_ns_gram(f, go);
    double worst = std::numeric_limits<double>::infinity(), gram_err = 0.0;
    for (const auto& p : r.probes) worst = std::min(worst, p.worst_value);
    // Oracle: direct quadrature of int z^j conj(z^k) e^{-phi(t, z)} on the fiber grid.
    const GridDomain& fg = fiber_grid();
    const int k = static_cast<int>(f.fiber.dimension());
    for (std::size_t i = 0; i < base_grid().size(); i += 7) {
      const cplx t = base_grid().node(i)[0];
      Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(k, k);
      for (std::size_t n = 0; n < fg.size(); ++n) {
        const cplx z = fg.node(n)[0];
        const double e = fg.weights()[n] * std::exp(-spec.phi(Point{t, z}));
        for (int a = 0; a < k; ++a)
          for (int b = 0; b < k; ++b) G(a, b) += e * std::pow(z, a) * std::conj(std::pow(z, b));
      }
      gram_err = std::max(gram_err, (r.G[i] - G).cwiseAbs().maxCoeff() / G.cwiseAbs().maxCoeff());
    }
    o.detail << "\n    " << spec.name << ": " << r.probes.size() << " dual probes, worst Levi " << worst << " (tol 1e-4); max relative |G - direct quadrature| "
             << gram_err << " (tol 1e-8)";
    o.require(r.pass() && r.probes.size() >= 16 + f.fiber.dimension(), spec.name + " dual probes");
    o.require(gram_err <= 1e-8, spec.name + " Gram identity");
  }
}

// ---- 9: scale laws -----------------------------------------------------------------

void scale_laws(Outcome& o) {
  const GridDomain g = make_polydisc_grid({1.0}, {24, 24});
  const Weight w = Weight::polynomial(1, {{SmoothTerm::Kind::abs2, 0.8, 1, 0}, {SmoothTerm::Kind::re, cplx{0.3, 0.1}, 1, 0}});
  const std::vector<Point> xs{at(0.0), at(cplx{0.3, -0.2}), at(0.6)};
  double worst_b = 0.0, worst_g = 0.0;
  for (int m : {1, 2, 3}) {
    const SectionSpace s = make_poly_space(g, 2, m);
    OptimizerOptions oo;
    oo.restarts = 4;
    const Eigen::MatrixXcd G1 = ns_gram(s, w, m, oo);
    std::vector<double> b1;
    for (const auto& x : xs) b1.push_back(bergman_kernel(s, w, m, x, 8).value);
    for (double c : {0.1, 1.0, 7.0}) {
      const Weight wc = w.shifted(-std::log(c));  // metric c e^{-phi}
      for (std::size_t k = 0; k < xs.size(); ++k)
        worst_b = std::max(worst_b, test::rel_err(bergman_kernel(s, wc, m, xs[k], 8).value, b1[k] / c));
      const Eigen::MatrixXcd Gc = ns_gram(s, wc, m, oo);
      worst_g = std::max(worst_g, (Gc - c * G1).cwiseAbs().maxCoeff() / (c * G1.cwiseAbs().maxCoeff()));
    }
  }
  o.detail << "worst relative deviation: B_m -> B_m/c " << worst_b << ", ns_gram -> c ns_gram " << worst_g << " (tol 1e-8)";
  o.require(worst_b <= 1e-8 && worst_g <= 1e-8, "scale laws");
}

// ---- 10: monotone regularization ---------------------------------------------------

void monotone_regularization(Outcome& o) {
  const GridDomain g = make_polydisc_grid({1.0}, {32, 32});
  const std::vector<double> eps{0.2, 0.1, 0.05, 0.025, 0.0125};
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.3, 1.5);
  double worst = 0.0, last_gap = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Weight w = Weight::polynomial(1, {{SmoothTerm::Kind::abs2, u(rng), 1, 0},
                                            {SmoothTerm::Kind::abs2, u(rng), 2, 0},
                                            {SmoothTerm::Kind::abs2, u(rng), 1 + c, 0},
                                            {SmoothTerm::Kind::re, test::random_cplx(rng, 0.3), 1, 0}});
    const SectionSpace s = make_poly_space(g, 4, 1);
    auto logB = [&](const Weight& wt) {
      std::vector<double> b = kernel_field(s, wt, 1);
      for (double& v : b) v = std::log(v);
      return b;
    };
    const std::vector<double> limit = logB(w);
    std::vector<double> prev = logB(mollify(w, eps[0], g));
    for (std::size_t i = 0; i < prev.size(); ++i) worst = std::max(worst, limit[i] - prev[i]);
    for (std::size_t k = 1; k < eps.size(); ++k) {
      const std::vector<double> cur = logB(mollify(w, eps[k], g));
      for (std::size_t i = 0; i < cur.size(); ++i) {
        worst = std::max(worst, cur[i] - prev[i]);   // must not increase as epsilon shrinks
        worst = std::max(worst, limit[i] - cur[i]);  // stays above the unmollified value
      }
      prev = cur;
    }
    for (std::size_t i = 0; i < prev.size(); ++i) last_gap = std::max(last_gap, prev[i] - limit[i]);
  }
  o.detail << "3 weights, epsilon 0.2 -> 0.0125: worst monotonicity violation " << worst
           << " (tol 1e-6); remaining gap at the smallest epsilon " << last_gap;
  o.require(worst <= 1e-6, "monotone in epsilon");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "m=1 optimizer equals closed form", oracle_equivalence},
      {2, "disc kernel at degree 30", disc_kernel},
      {3, "rank-2 example with det |z|^4", det_z4_metric},
      {4, "eigenvalue bounds on 1000 random fields", eigen_suite},
      {5, "extension constant pi", ot_constant},
      {6, "L^{2/m} iteration and recurrence", iteration},
      {7, "log-psh of the relative kernel", family_psh},
      {8, "direct-image Gram positivity", family_gram},
      {9, "metric scale laws", scale_laws},
      {10, "monotone regularization", monotone_regularization},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::printf("criterion %2d %s: %s -- %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.str().c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
