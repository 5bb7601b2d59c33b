#include <doctest.h>

#include <limits>

#include "l2m/bergman.hpp"
#include "l2m/optimizer.hpp"
#include "test_util.hpp"

using namespace l2m;

namespace {

const GridDomain& disc() {
  static const GridDomain g = make_polydisc_grid({1.0}, {40, 40});
  return g;
}

Point at(cplx z) { return Point{z, cplx{}}; }

Section random_section(std::mt19937_64& rng, const SectionSpace& s) {
  Eigen::VectorXcd c(static_cast<Eigen::Index>(s.dimension()));
  for (Eigen::Index k = 0; k < c.size(); ++k) c(k) = test::random_cplx(rng);
  return Section(s, c);
}

double rayleigh(const Section& u, const Weight& w, int m, const Point& x) {
  const double n = pseudo_norm(u, w, m);
  return std::norm(evaluate(u, x)) / (n * n);
}

/// Oracle for B_m on a space of dimension <= 3: exhaustive grid over the
/// non-constant coefficients (constant fixed to 1, so u(0) = 1 at x = 0 or
/// rescaled otherwise), followed by a shrinking-pattern refinement.
double grid_search_kernel(const SectionSpace& s, const Weight& w, int m, const Point& x) {
  const auto dim = static_cast<int>(s.dimension());
  const int nparams = 2 * (dim - 1);
  auto value = [&](const std::vector<double>& p) {
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(dim);
    c(0) = 1.0;
    for (int k = 1; k < dim; ++k) c(k) = cplx{p[2 * (k - 1)], p[2 * (k - 1) + 1]};
    const Section u(s, c);
    if (std::abs(evaluate(u, x)) == 0.0) return 0.0;
    return rayleigh(u, w, m, x);
  };
  std::vector<double> best(nparams, 0.0);
  double vbest = value(best);
  // Coarse exhaustive grid on [-1.5, 1.5]^nparams, step 0.5.
  std::vector<int> idx(nparams, 0);
  const int n = 7;
  for (;;) {
    std::vector<double> p(nparams);
    for (int k = 0; k < nparams; ++k) p[k] = -1.5 + 0.5 * idx[k];
    const double v = value(p);
    if (v > vbest) vbest = v, best = p;
    int k = 0;
    while (k < nparams && ++idx[k] == n) idx[k++] = 0;
    if (k == nparams) break;
  }
  // Pattern refinement.
  for (double step = 0.25; step > 1e-6; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (int k = 0; k < nparams; ++k)
        for (double d : {step, -step}) {
          std::vector<double> p = best;
          p[k] += d;
          const double v = value(p);
          if (v > vbest) vbest = v, best = p, moved = true;
        }
    }
  }
  return vbest;
}

}  // namespace

TEST_SUITE("pseudo_norm") {
  TEST_CASE("examples") {
    const SectionSpace s = make_poly_space(disc(), 2, 2);
    const Section one = Section::basis_element(s, 0);
    CHECK(std::abs(pseudo_norm(one, Weight::zero(1), 2) - kPi) <= 1e-6);
    CHECK(std::abs(pseudo_norm(one, Weight::zero(1), 1) - std::sqrt(kPi)) <= 1e-6);
    std::mt19937_64 rng(4);
    const Section v = random_section(rng, s);
    for (int m : {1, 2, 3}) CHECK(test::rel_err(pseudo_norm(v.scaled(2.0), Weight::abs2(1), m), 2.0 * pseudo_norm(v, Weight::abs2(1), m)) <= 1e-10);
    CHECK(pseudo_norm(Section::zero(s), Weight::zero(1), 2) == 0.0);
  }

  TEST_CASE("u = z, phi = |z|^2, m = 3: radial integral oracle") {
    const SectionSpace s = make_poly_space(disc(), 1, 3);
    const double I = test::radial_integral([](double r) { return std::pow(r, 2.0 / 3.0) * std::exp(-r * r / 3.0); });
    const double oracle = std::pow(I, 1.5);
    CHECK(test::rel_err(pseudo_norm(Section::basis_element(s, 1), Weight::abs2(1), 3), oracle) <= 1e-5);
  }

  TEST_CASE("non-integrable against a pole") {
    const SectionSpace s = make_poly_space(disc(), 1, 1);
    CHECK_THROWS_AS(pseudo_norm(Section::basis_element(s, 0), Weight::log_abs2(0.0, 1.0), 1), IntegrabilityError);
    CHECK_NOTHROW(pseudo_norm(Section::basis_element(s, 1), Weight::log_abs2(0.0, 1.0), 1));
  }
}

TEST_SUITE("j_m_integrable") {
  TEST_CASE("exponent arithmetic") {
    const SectionSpace s = make_poly_space(disc(), 2, 1);
    const Section one = Section::basis_element(s, 0), z = Section::basis_element(s, 1);
    CHECK(j_m_integrable(one, Weight::zero(1), 1));
    CHECK_FALSE(j_m_integrable(z, Weight::log_abs2(0.0, 2.0), 1));
    CHECK(j_m_integrable(z, Weight::log_abs2(0.0, 1.0), 1));
    // m = 2: (2/2) * 1 - 2a > -2 iff a < 1.5
    CHECK(j_m_integrable(z, Weight::log_abs2(0.0, 1.4), 2));
    CHECK_FALSE(j_m_integrable(z, Weight::log_abs2(0.0, 1.6), 2));
    // The pole elsewhere does not care about vanishing at 0.
    CHECK_FALSE(j_m_integrable(z, Weight::log_abs2(0.5, 1.0), 1));
  }

  TEST_CASE("oracle: radial integral of r^(2k/m - 2a) diverges exactly at the threshold") {
    // int_eps^1 r^e r dr stays bounded as eps -> 0 iff e > -2.
    auto tail = [](double e, double eps) { return test::simpson([e](double r) { return std::pow(r, e + 1.0); }, eps, 1.0, 200000); };
    CHECK(tail(0.0, 1e-8) < 1.0);            // u = z, a = 1, m = 1
    CHECK(tail(-2.0, 1e-8) > 5.0);           // u = z, a = 2, m = 1: logarithmic growth
    CHECK(tail(-1.8, 1e-8) < tail(-1.8, 1e-4) * 10.0);
  }
}

TEST_SUITE("kernel_m1") {
  TEST_CASE("closed-form examples") {
    CHECK(std::abs(bergman_closed_form_m1(make_poly_space(disc(), 0, 1), Weight::zero(1), at(0.3)) - 1.0 / kPi) <= 1e-10);
    CHECK(std::abs(bergman_closed_form_m1(make_poly_space(disc(), 1, 1), Weight::zero(1), at(0.5)) - 1.5 / kPi) <= 1e-8);
    for (int d : {0, 3, 8}) CHECK(std::abs(bergman_kernel(make_poly_space(disc(), d, 1), Weight::zero(1), 1, at(0.0)).value - 1.0 / kPi) <= 1e-8);
  }

  TEST_CASE("degree 30 at x = 0.5 approaches the full disc kernel") {
    double series = 0.0;
    for (int k = 0; k <= 30; ++k) series += (k + 1) * std::pow(0.25, k) / kPi;
    const double v = bergman_closed_form_m1(make_poly_space(disc(), 30, 1), Weight::zero(1), at(0.5));
    CHECK(std::abs(v - series) <= 1e-8);
    CHECK(std::abs(v - 1.0 / (kPi * 0.75 * 0.75)) <= 1e-3);
  }

  TEST_CASE("optimizer equals the closed form on 50 seeded cases") {
    std::mt19937_64 rng(50);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
      const int d = t % 4;
      const Weight w = Weight::polynomial(1, {{SmoothTerm::Kind::abs2, 2.0 * ud(rng), 1, 0},
                                              {SmoothTerm::Kind::re, test::random_cplx(rng, 0.3), 1 + t % 3, 0}});
      const SectionSpace s = make_poly_space(disc(), d, 1);
      const Point x = at(test::random_in_disc(rng, 0.8));
      const double cf = bergman_closed_form_m1(s, w, x);
      const double opt = bergman_optimize(s, w, 1, x, 4, 1 + t).value;
      CHECK(test::rel_err(opt, cf) <= 1e-6);
    }
  }

  TEST_CASE("kernel field at m = 1 matches the closed form nodewise; deterministic") {
    const GridDomain g = make_polydisc_grid({1.0}, {16, 16});
    const SectionSpace s = make_poly_space(g, 3, 1);
    const auto f = kernel_field(s, Weight::abs2(1), 1);
    CHECK(f == kernel_field(s, Weight::abs2(1), 1));
    for (std::size_t i = 0; i < g.size(); i += 7) CHECK(test::rel_err(f[i], bergman_closed_form_m1(s, Weight::abs2(1), g.node(i))) <= 1e-10);
  }
}

TEST_SUITE("kernel_m_ge_2") {
  TEST_CASE("flat disc at 0: constant candidate not beaten") {
    const SectionSpace s = make_poly_space(disc(), 2, 2);
    const BergmanResult r = bergman_kernel(s, Weight::zero(1), 2, at(0.0));
    CHECK(r.value >= 1.0 / (kPi * kPi) - 1e-8);
    const double gs = grid_search_kernel(s, Weight::zero(1), 2, at(0.0));
    CHECK(std::abs(gs - 1.0 / (kPi * kPi)) <= 1e-8);
    CHECK(std::abs(r.value - gs) <= 1e-8);
  }

  TEST_CASE("grid-search cross-check, dimension <= 3") {
    struct Case {
      int degree;
      int m;
      Weight w;
      cplx x;
    };
    const std::vector<Case> cases{{1, 2, Weight::abs2(1), 0.3},
                                  {2, 2, Weight::abs2(1), cplx{0.2, 0.4}},
                                  {2, 3, Weight::abs2(1, 2.0), 0.5},
                                  {2, 2, Weight::polynomial(1, {{SmoothTerm::Kind::re, 0.8, 1, 0}}), cplx{-0.3, 0.1}}};
    for (const auto& c : cases) {
      const SectionSpace s = make_poly_space(disc(), c.degree, c.m);
      const double opt = bergman_kernel(s, c.w, c.m, at(c.x), 16).value;
      const double gs = grid_search_kernel(s, c.w, c.m, at(c.x));
      CHECK(opt >= gs * (1.0 - 1e-8));
      CHECK(opt <= gs * (1.0 + 1e-6));
    }
  }

  TEST_CASE("extremal section attains the value; 100 probes satisfy the bound") {
    const SectionSpace s = make_poly_space(disc(), 3, 2);
    const Point x = at(0.4);
    const BergmanResult r = bergman_kernel(s, Weight::abs2(1), 2, x);
    REQUIRE(r.extremal.has_value());
    CHECK(std::abs(pseudo_norm(*r.extremal, Weight::abs2(1), 2) - 1.0) <= 1e-8);
    CHECK(test::rel_err(std::norm(evaluate(*r.extremal, x)), r.value) <= 1e-8);
    std::mt19937_64 rng(100);
    std::vector<Section> probes{Section::zero(s), *r.extremal};
    for (int k = 0; k < 100; ++k) probes.push_back(random_section(rng, s));
    const ExtremalReport rep = extremal_bound_check(s, Weight::abs2(1), 2, probes, {x}, {r.value});
    CHECK(rep.pass);
    CHECK(rep.worst_ratio <= 1.0 + 1e-8);
    CHECK(rep.worst_ratio >= 1.0 - 1e-8);  // attained by the extremal probe
  }

  TEST_CASE("Rayleigh quotient is scale invariant") {
    std::mt19937_64 rng(12);
    const SectionSpace s = make_poly_space(disc(), 3, 2);
    for (int k = 0; k < 10; ++k) {
      const Section u = random_section(rng, s);
      const cplx lam = test::random_cplx(rng, 3.0);
      CHECK(test::rel_err(rayleigh(u.scaled(lam), Weight::abs2(1), 2, at(0.2)), rayleigh(u, Weight::abs2(1), 2, at(0.2))) <= 1e-12);
    }
  }

  TEST_CASE("restarts are deterministic per seed") {
    const SectionSpace s = make_poly_space(disc(), 3, 2);
    const auto a = bergman_kernel(s, Weight::abs2(1), 2, at(0.4), 8, 5), b = bergman_kernel(s, Weight::abs2(1), 2, at(0.4), 8, 5);
    CHECK(a.value == b.value);
    CHECK(a.gap == b.gap);
    CHECK(a.restarts == 8);
  }

  TEST_CASE("empty admissible evaluation gives zero") {
    const SectionSpace s = make_poly_space(disc(), 1, 1);
    const Weight pole = Weight::log_abs2(0.0, 1.0);
    for (int m : {1, 2}) {
      // Pole coefficient m: int |u|^{2/m} |z|^{-2} forces u(0) = 0.
      const SectionSpace sm = make_poly_space(disc(), 1, m);
      const BergmanResult r = bergman_kernel(sm, Weight::log_abs2(0.0, m), m, at(0.0), 4);
      CHECK(r.zero);
      CHECK(r.value == 0.0);
      CHECK_FALSE(r.extremal.has_value());
    }
    // Away from the pole only z survives: B_1(0.5) = 0.25 / int |z|^2 |z|^-2 = 0.25 / pi.
    CHECK(std::abs(bergman_kernel(s, pole, 1, at(0.5)).value - 0.25 / kPi) <= 1e-8);
    // A weaker pole is integrable at m = 2: the constant gives int |z|^{-1} = 2 pi.
    const BergmanResult r2 = bergman_kernel(make_poly_space(disc(), 1, 2), pole, 2, at(0.0), 4);
    CHECK(r2.value >= 1.0 / (4.0 * kPi * kPi) * (1.0 - 1e-3));
  }
}

TEST_SUITE("twisted") {
  TEST_CASE("weight arithmetic") {
    const GridDomain g = make_polydisc_grid({1.0}, {8, 8});
    const std::vector<double> ones(g.size(), 1.0), fours(g.size(), 4.0), zeros(g.size(), 0.0);
    const auto s1 = twisted_weight_h_m_minus_1(g, ones, Weight::abs2(1), 1).sample(g);
    const auto ref = Weight::abs2(1).sample(g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(s1[i] == ref[i]);
    for (double v : twisted_weight_h_m_minus_1(g, ones, Weight::zero(1), 2).sample(g)) CHECK(v == 0.0);
    for (double v : twisted_weight_h_m_minus_1(g, fours, Weight::zero(1), 2).sample(g)) CHECK(std::abs(v - std::log(2.0)) <= 1e-15);
    for (double v : twisted_weight_h_m_minus_1(g, zeros, Weight::zero(1), 2).sample(g)) CHECK(v == -std::numeric_limits<double>::infinity());
  }

  TEST_CASE("NS gram: m = 1 equals the Gram matrix; degree 0 flat disc at m = 2") {
    const GridDomain g = make_polydisc_grid({1.0}, {24, 24});
    const SectionSpace s1 = make_poly_space(g, 3, 1);
    CHECK((ns_gram(s1, Weight::abs2(1), 1) - gram(s1, Weight::abs2(1))).cwiseAbs().maxCoeff() <= 1e-8);
    // B_2 = pi^-2 everywhere, phi_1 = (1/2) log B_2 = -log pi, g_2(1,1) = pi * pi.
    const Eigen::MatrixXcd G = ns_gram(make_poly_space(g, 0, 2), Weight::zero(1), 2);
    CHECK(std::abs(G(0, 0) - kPi * kPi) <= 1e-6);
  }

  TEST_CASE("Hölder chain at every node for every basis section") {
    const GridDomain g = make_polydisc_grid({1.0}, {16, 16});
    for (int m : {2, 3}) {
      const SectionSpace s = make_poly_space(g, 2, m);
      const auto B = kernel_field(s, Weight::abs2(1), m, {8});
      CHECK(holder_chain_worst_ratio(s, Weight::abs2(1), m, B) <= 1.0 + 1e-8);
    }
  }
}

TEST_SUITE("scale_laws") {
  TEST_CASE("c e^{-phi}: B_m -> B_m / c, ns_gram -> c ns_gram") {
    const GridDomain g = make_polydisc_grid({1.0}, {16, 16});
    for (int m : {1, 2}) {
      const SectionSpace s = make_poly_space(g, 2, m);
      for (double c : {0.1, 7.0}) {
        const Weight w = Weight::abs2(1), wc = w.shifted(-std::log(c));
        const double b = bergman_kernel(s, w, m, at(0.3), 8).value, bc = bergman_kernel(s, wc, m, at(0.3), 8).value;
        CHECK(test::rel_err(bc, b / c) <= 1e-8);
        const Eigen::MatrixXcd G = ns_gram(s, w, m, {8}), Gc = ns_gram(s, wc, m, {8});
        CHECK((Gc - c * G).cwiseAbs().maxCoeff() <= 1e-8 * c * G.cwiseAbs().maxCoeff());
      }
    }
  }

  TEST_CASE("m = 3: extremal settles on a cusp minimum independent of the metric scale") {
    // At m > 1 the discrete objective has cusps where u vanishes at a node; the
    // best optimum pins both zeros of a degree-2 section to nodes, and perturbing
    // the scale must not move the result to a neighbouring cusp.
    const GridDomain g = make_polydisc_grid({1.0}, {24, 24});
    const Weight w = Weight::polynomial(1, {{SmoothTerm::Kind::abs2, 0.8, 1, 0}, {SmoothTerm::Kind::re, cplx{0.3, 0.1}, 1, 0}});
    const SectionSpace s = make_poly_space(g, 2, 3);
    for (std::size_t node : {311u, 325u}) {
      const BergmanResult r = bergman_kernel(s, w, 3, g.node(node), 4);
      const Eigen::VectorXcd u = s.basis_matrix() * r.extremal->coef();
      const double umax = u.cwiseAbs2().maxCoeff();
      int pinned = 0;
      for (Eigen::Index i = 0; i < u.size(); ++i) pinned += std::norm(u(i)) < 1e-20 * umax;
      CHECK(pinned == 2);
      for (double c : {0.1, 1.0000001, 7.0})
        CHECK(test::rel_err(bergman_kernel(s, w.shifted(-std::log(c)), 3, g.node(node), 4).value * c, r.value) <= 1e-10);
    }
  }
}
