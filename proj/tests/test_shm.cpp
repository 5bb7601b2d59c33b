#include <doctest.h>

#include <limits>
#include <sstream>

#include "l2m/levi.hpp"
#include "l2m/shm.hpp"
#include "test_util.hpp"

using namespace l2m;

namespace {

HMatrix diag2(double a, double b) {
  HMatrix h = HMatrix::Zero(2, 2);
  h(0, 0) = a;
  h(1, 1) = b;
  return h;
}

/// Random Hermitian PSD matrix A A^H scaled so that its largest entry modulus is `bound`.
HMatrix random_psd(std::mt19937_64& rng, int r, double bound = 1.0) {
  HMatrix A(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) A(i, j) = test::random_cplx(rng);
  HMatrix h = A * A.adjoint();
  h = 0.5 * (h + h.adjoint()).eval();
  return h * (bound / h.cwiseAbs().maxCoeff());
}

MatrixMetric random_field(std::mt19937_64& rng, const GridDomain& g, int r) {
  std::vector<HMatrix> s;
  for (std::size_t i = 0; i < g.size(); ++i) s.push_back(random_psd(rng, r));
  return MatrixMetric::from_samples(g, std::move(s));
}

MatrixMetric scalar_metric(const GridDomain& g, double sign) {
  return MatrixMetric(g, 1, [sign](const Point& z) {
    HMatrix h(1, 1);
    h(0, 0) = std::exp(sign * std::norm(z[0]));
    return h;
  });
}

/// Dual of the example metric, (h^{-1})^T, from the closed-form adjugate divided by det = |z|^4.
HMatrix det_z4_dual_oracle(cplx z) {
  const double a = std::norm(z);
  HMatrix d(2, 2);
  d << a, -z, -std::conj(z), 1.0 + a;
  return d / (a * a);
}

}  // namespace

TEST_SUITE("det_z4_example") {
  const GridDomain g = make_polydisc_grid({1.0}, {32, 32});

  TEST_CASE("det = |z|^4 at every node; entries by substitution") {
    const MatrixMetric h = raufi_example(g);
    CHECK(h.rank() == 2);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r2 = std::norm(g.node(i)[0]);
      CHECK(std::abs(h.at_node(i).determinant().real() - r2 * r2) <= 1e-12);
    }
    const HMatrix h0 = h.at(Point{});
    CHECK(h0(0, 0) == cplx{1.0});
    CHECK(std::abs(h0(0, 1)) == 0.0);
    CHECK(std::abs(h0(1, 1)) == 0.0);
    Eigen::FullPivLU<HMatrix> lu(h0);
    CHECK(lu.rank() == 1);
    CHECK(h.at(Point{std::polar(1.0, 0.3), cplx{}})(0, 0).real() == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_FALSE(h.singular_nodes().empty());
  }

  TEST_CASE("Griffiths negative with default sections; dual positive") {
    const MatrixMetric h = raufi_example(g);
    const GriffithsReport neg = griffiths_negative_test(h, default_test_sections(2), {1e-5});
    CHECK(neg.pass);
    CHECK(neg.note.find("necessary") != std::string::npos);
    const GriffithsReport pos = griffiths_positive_test(dual_metric(h), default_test_sections(2), {1e-5});
    CHECK(pos.pass);
  }

  TEST_CASE("dual entry (2,2) matches the adjugate oracle; log-log slope -4") {
    const GridDomain ring = make_polydisc_grid({0.1}, {48, 16});
    const MatrixMetric d = dual_metric(raufi_example(ring));
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      if (d.is_singular(i)) continue;
      const cplx z = ring.node(i)[0];
      const HMatrix o = det_z4_dual_oracle(z);
      CHECK(std::abs(d.at_node(i)(1, 1) - o(1, 1)) <= 1e-8 * std::abs(o(1, 1)));
      if (std::abs(z) >= 1e-3 && std::abs(z) <= 1e-1) {
        lx.push_back(std::log(std::abs(z)));
        ly.push_back(std::log(d.at_node(i)(1, 1).real()));
      }
    }
    REQUIRE(lx.size() > 10);
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) mx += lx[k], my += ly[k];
    mx /= lx.size();
    my /= ly.size();
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) sxy += (lx[k] - mx) * (ly[k] - my), sxx += (lx[k] - mx) * (lx[k] - mx);
    CHECK(std::abs(sxy / sxx + 4.0) <= 0.1);
  }

  TEST_CASE("eigen bounds with C = 2 and automatic C") {
    const MatrixMetric h = raufi_example(g);
    const EigenBoundsReport a = eigen_bounds_check(h, 2.0);
    CHECK(a.ok());
    CHECK(a.C == 2.0);
    const EigenBoundsReport b = eigen_bounds_check(h);
    CHECK(b.ok());
    CHECK(b.C <= 2.0);
  }

  TEST_CASE("entry Cauchy-Schwarz") { CHECK(entry_cauchy_schwarz_check(raufi_example(g))); }

  TEST_CASE("orientation: the Hermitian form has cross term 2 Re(conj(z) v1 conj(v2))") {
    const HMatrix h = raufi_example(g).at(Point{cplx{0.3, 0.4}, cplx{}});
    Eigen::VectorXcd v(2);
    v << cplx{1.0, -0.5}, cplx{0.2, 0.7};
    const cplx z{0.3, 0.4};
    const double oracle = 1.25 * std::norm(v(0)) + 2.0 * std::real(std::conj(z) * v(0) * std::conj(v(1))) + 0.25 * std::norm(v(1));
    CHECK(hnorm2(h, v) == doctest::Approx(oracle).epsilon(1e-14));
  }

  TEST_CASE("det weight: 2 log|z|^2, psh") {
    const MatrixMetric h = raufi_example(g);
    const Weight w = det_weight(h);
    for (std::size_t i = 0; i < g.size(); i += 11) {
      if (h.is_singular(i)) continue;
      CHECK(w(g.node(i)) == doctest::Approx(2.0 * std::log(std::norm(g.node(i)[0]))).epsilon(1e-10));
    }
    PshOptions po;
    po.tol = 1e-5;
    const PshReport r = det_weight_psh(h, po);
    CHECK(r.psh);
    CHECK(r.checked > g.size() / 2);
    // Rounding filter: relative determinant error eps * perm|h| / det ~ 2 eps / |z|^2 here.
    const double a = std::norm(g.node(g.size() / 2)[0]);
    CHECK(det_rounding(h.at_node(g.size() / 2)) == doctest::Approx(std::numeric_limits<double>::epsilon() * (2.0 + a) / a).epsilon(1e-6));
  }

  TEST_CASE("restriction to span(e2) is |z|^2 and stays negative") {
    const MatrixMetric h = raufi_example(g);
    HMatrix e2 = HMatrix::Zero(2, 1);
    e2(1, 0) = 1.0;
    const MatrixMetric s = restrict_sub(h, e2);
    for (std::size_t i = 0; i < g.size(); i += 13)
      CHECK(std::abs(s.at_node(i)(0, 0) - std::norm(g.node(i)[0])) <= 1e-15);
    std::mt19937_64 rng(3);
    HMatrix F(2, 1);
    F << test::random_cplx(rng), test::random_cplx(rng);
    CHECK(griffiths_negative_test(restrict_sub(h, F), default_test_sections(1), {1e-5}).pass);
  }

  TEST_CASE("pullback by w -> w/2: det = |w|^4 / 16") {
    const MatrixMetric h = raufi_example(g);
    const MatrixMetric p = pullback_metric(h, Polynomial::monomial(1, 0, 0.5), g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r2 = std::norm(g.node(i)[0]);
      CHECK(std::abs(p.at_node(i).determinant().real() - r2 * r2 / 16.0) <= 1e-10);
    }
    CHECK(griffiths_negative_test(p, default_test_sections(2), {1e-5}).pass);
  }

  TEST_CASE("tautological metric at |z| = 0.5 over 64 random unit lines") {
    const GridDomain ring = make_polydisc_grid({1.0}, {32, 32});
    const MatrixMetric h = raufi_example(ring);
    std::size_t node = 0;
    for (std::size_t i = 0; i < ring.size(); ++i)
      if (std::abs(std::abs(ring.node(i)[0]) - 0.5) < std::abs(std::abs(ring.node(node)[0]) - 0.5)) node = i;
    const HMatrix hstar = det_z4_dual_oracle(ring.node(node)[0]);
    Eigen::SelfAdjointEigenSolver<HMatrix> es(hstar);
    const double lmin = es.eigenvalues().minCoeff();
    std::mt19937_64 rng(64);
    std::vector<Eigen::VectorXcd> lines;
    for (int k = 0; k < 64; ++k) {
      Eigen::VectorXcd v(2);
      v << test::random_cplx(rng), test::random_cplx(rng);
      v.normalize();
      lines.push_back(v);
      CHECK(taut_metric(h, v, node) >= lmin - 1e-10);
    }
    const TautBoundReport rep = taut_bound_check(h, {node}, lines);
    CHECK(rep.pass);
  }
}

TEST_SUITE("duality") {
  const GridDomain g = make_polydisc_grid({1.0}, {8, 8});

  TEST_CASE("identity and diagonal") {
    const MatrixMetric id = MatrixMetric::constant(g, HMatrix::Identity(3, 3));
    CHECK((dual_metric(id).at_node(5) - HMatrix::Identity(3, 3)).norm() <= 1e-15);
    const MatrixMetric d = dual_metric(MatrixMetric::constant(g, diag2(2.0, 0.5)));
    CHECK((d.at_node(0) - diag2(0.5, 2.0)).norm() <= 1e-15);
  }

  TEST_CASE("involution and determinant multiplicativity on random PD fields") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const MatrixMetric h = random_field(rng, g, 2 + trial % 2);
      const MatrixMetric dd = dual_metric(dual_metric(h));
      const std::vector<double> wh = det_weight(h).sample(g), wd = det_weight(dual_metric(h)).sample(g);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (h.is_singular(i)) continue;
        CHECK((dd.at_node(i) - h.at_node(i)).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, h.at_node(i).norm()));
        CHECK(std::abs(wd[i] + wh[i]) <= 1e-10 * std::max(1.0, std::abs(wh[i])));
      }
    }
  }

  TEST_CASE("zero determinant moves to singular nodes") {
    const MatrixMetric h = MatrixMetric::constant(g, diag2(1.0, 0.0));
    CHECK(h.singular_nodes().size() == g.size());
    const MatrixMetric d = dual_metric(h);
    CHECK(d.singular_nodes().size() == g.size());
  }

  TEST_CASE("det weight examples") {
    const Weight z = det_weight(MatrixMetric::constant(g, HMatrix::Identity(2, 2)));
    for (std::size_t i = 0; i < g.size(); i += 3) CHECK(std::abs(z(g.node(i))) <= 1e-15);
    const MatrixMetric e(g, 2, [](const Point& p) {
      HMatrix h = HMatrix::Identity(2, 2) * std::exp(std::norm(p[0]));
      return h;
    });
    const Weight w = det_weight(e);
    for (std::size_t i = 0; i < g.size(); i += 3) CHECK(w(g.node(i)) == doctest::Approx(2.0 * std::norm(g.node(i)[0])));
    CHECK(is_psh(w, g, {1e-6}).psh);
  }

  TEST_CASE("non-Hermitian samples are rejected") {
    HMatrix bad(2, 2);
    bad << 1.0, 0.5, 0.2, 1.0;
    CHECK_THROWS_AS(MatrixMetric::constant(g, bad), std::invalid_argument);
  }
}

TEST_SUITE("eigen_bounds") {
  TEST_CASE("identity rank 2") {
    const GridDomain g = make_polydisc_grid({1.0}, {8, 8});
    const EigenBoundsReport r = eigen_bounds_check(MatrixMetric::constant(g, HMatrix::Identity(2, 2)));
    CHECK(r.C == 1.0);
    CHECK(r.ok());
    CHECK(r.worst_max_margin == doctest::Approx(1.0));  // 2C - lambda_max
    CHECK(r.worst_min_margin == doctest::Approx(0.5));  // lambda_min - det / (2C)
  }

  TEST_CASE("1000 seeded bounded-entry PSD fields: zero failures") {
    const GridDomain g = make_polydisc_grid({1.0}, {8, 8});
    std::mt19937_64 rng(1000);
    int failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int r = 2 + trial % 3;
      const MatrixMetric h = random_field(rng, g, r);
      // Oracle: direct eigendecomposition.
      for (std::size_t i = 0; i < g.size(); ++i) {
        Eigen::SelfAdjointEigenSolver<HMatrix> es(h.at_node(i));
        const double C = 1.0, lmax = es.eigenvalues().maxCoeff(), lmin = es.eigenvalues().minCoeff();
        if (lmax > r * C * (1 + 1e-12) || lmin < h.at_node(i).determinant().real() / std::pow(r * C, r - 1) - 1e-12)
          ++failures;
      }
      if (!eigen_bounds_check(h, 1.0).ok()) ++failures;
    }
    CHECK(failures == 0);
  }
}

TEST_SUITE("griffiths") {
  const GridDomain g = make_polydisc_grid({1.0}, {16, 16});

  TEST_CASE("scalar metrics") {
    CHECK(griffiths_negative_test(scalar_metric(g, +1.0), default_test_sections(1), {1e-6}).pass);
    CHECK_FALSE(griffiths_negative_test(scalar_metric(g, -1.0), default_test_sections(1), {1e-6}).pass);
    CHECK(griffiths_positive_test(scalar_metric(g, -1.0), default_test_sections(1), {1e-6}).pass);
  }

  TEST_CASE("flat metric passes both") {
    const MatrixMetric id = MatrixMetric::constant(g, HMatrix::Identity(2, 2));
    CHECK(griffiths_negative_test(id, default_test_sections(2), {1e-6}).pass);
    CHECK(griffiths_positive_test(id, default_test_sections(2), {1e-6}).pass);
  }

  TEST_CASE("degenerate section is an error; sample-only metric unsupported") {
    const MatrixMetric id = MatrixMetric::constant(g, HMatrix::Identity(1, 1));
    std::vector<SectionSample> zero{{Polynomial::constant(0.0)}};
    CHECK_THROWS_AS(griffiths_negative_test(id, zero), DegenerateError);
    const MatrixMetric s = MatrixMetric::from_samples(g, std::vector<HMatrix>(g.size(), HMatrix::Identity(1, 1)));
    CHECK_THROWS_AS(griffiths_negative_test(s, default_test_sections(1)), UnsupportedError);
  }

  TEST_CASE("default section list: constants, sums, i-sums, seeded randoms") {
    const auto a = default_test_sections(3, 7, 8), b = default_test_sections(3, 7, 8);
    CHECK(a.size() == 3 + 3 + 3 + 8);
    for (std::size_t k = 0; k < a.size(); ++k)
      for (std::size_t c = 0; c < 3; ++c) CHECK(a[k][c](cplx{0.3, 0.1}) == b[k][c](cplx{0.3, 0.1}));
  }

  TEST_CASE("pullback of e^{|z|^2} by w -> w^2 stays negative") {
    const MatrixMetric p = pullback_metric(scalar_metric(g, +1.0), Polynomial::monomial(2), make_polydisc_grid({0.9}, {16, 16}));
    CHECK(griffiths_negative_test(p, default_test_sections(1), {1e-6}).pass);
    CHECK(std::abs(p.at(Point{cplx{0.5, 0.2}, cplx{}})(0, 0).real() - std::exp(std::pow(std::norm(cplx{0.5, 0.2}), 2))) <=
          1e-12);
    CHECK_THROWS_AS(pullback_metric(scalar_metric(g, +1.0), Polynomial::monomial(1, 0, 2.0), g), std::out_of_range);
  }
}

TEST_SUITE("functoriality") {
  const GridDomain g = make_polydisc_grid({1.0}, {8, 8});

  TEST_CASE("sub and quotient examples") {
    const MatrixMetric id = MatrixMetric::constant(g, HMatrix::Identity(2, 2));
    HMatrix e1 = HMatrix::Zero(2, 1);
    e1(0, 0) = 1.0;
    CHECK(std::abs(restrict_sub(id, e1).at_node(0)(0, 0) - 1.0) <= 1e-15);
    const double a = 3.0, b = 0.25;
    HMatrix v(2, 1);
    v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    CHECK(std::abs(restrict_sub(MatrixMetric::constant(g, diag2(a, b)), v).at_node(0)(0, 0) - (a + b) / 2) <= 1e-14);
    HMatrix P(1, 2);
    P << 1.0, 0.0;
    CHECK(std::abs(quotient_metric(id, P).at_node(0)(0, 0) - 1.0) <= 1e-14);
    CHECK(std::abs(quotient_metric(MatrixMetric::constant(g, diag2(a, b)), P).at_node(0)(0, 0) - a) <= 1e-13);
    HMatrix dep(2, 2);
    dep << 1.0, 2.0, 2.0, 4.0;
    CHECK_THROWS_AS(restrict_sub(id, dep), std::invalid_argument);
  }

  TEST_CASE("quotient equals the Schur complement of the minimal-norm lift") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
      HMatrix h = random_psd(rng, 3) + 0.1 * HMatrix::Identity(3, 3);
      // |v|^2 = v^T h conj(v) = v^H H v with H = h^T; projecting onto the first
      // coordinate leaves the Schur complement of H's lower block, transposed back.
      const HMatrix H = h.transpose();
      const cplx schur = H(0, 0) - (H.block(0, 1, 1, 2) * H.block(1, 1, 2, 2).inverse() * H.block(1, 0, 2, 1))(0, 0);
      HMatrix P = HMatrix::Zero(1, 3);
      P(0, 0) = 1.0;
      const MatrixMetric q = quotient_metric(MatrixMetric::constant(g, h), P);
      CHECK(std::abs(q.at_node(0)(0, 0) - schur) <= 1e-10 * std::abs(schur));
    }
  }

  TEST_CASE("symmetric powers") {
    const MatrixMetric id = MatrixMetric::constant(g, HMatrix::Identity(2, 2));
    CHECK((sym_power_metric(id, 1).at_node(0) - HMatrix::Identity(2, 2)).norm() <= 1e-15);
    HMatrix d3 = HMatrix::Zero(3, 3);
    d3.diagonal() << 1.0, 2.0, 1.0;
    CHECK((sym_power_matrix(HMatrix::Identity(2, 2), 2) - d3).norm() <= 1e-15);
    const double a = 1.5, b = 0.4;
    d3.diagonal() << a * a, 2 * a * b, b * b;
    CHECK((sym_power_matrix(diag2(a, b), 2) - d3).norm() <= 1e-14);
    CHECK_THROWS_AS(sym_power_metric(MatrixMetric::constant(g, HMatrix::Identity(3, 3)), 2), UnsupportedError);
  }

  TEST_CASE("symmetric power norm of v^m equals |v|^(2m) (tensor-contraction oracle)") {
    std::mt19937_64 rng(9);
    for (int m = 1; m <= 4; ++m) {
      const HMatrix h = random_psd(rng, 2) + 0.2 * HMatrix::Identity(2, 2);
      const HMatrix S = sym_power_matrix(h, m);
      const cplx x = test::random_cplx(rng), y = test::random_cplx(rng);
      Eigen::VectorXcd v(2), u(m + 1);
      v << x, y;
      for (int k = 0; k <= m; ++k) u(k) = std::pow(x, m - k) * std::pow(y, k);
      const double lhs = hnorm2(S, u), rhs = std::pow(hnorm2(h, v), m);
      CHECK(std::abs(lhs - rhs) <= 1e-10 * rhs);
    }
  }

  TEST_CASE("tautological metric examples") {
    const MatrixMetric id = MatrixMetric::constant(g, HMatrix::Identity(2, 2));
    Eigen::VectorXcd l(2);
    l << 0.6, cplx{0.0, 0.8};
    CHECK(taut_metric(id, l, 0) == doctest::Approx(1.0));
    Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(2);
    e1(0) = 1.0;
    CHECK(taut_metric(MatrixMetric::constant(g, diag2(2.0, 0.5)), e1, 0) == doctest::Approx(0.5));
  }

  TEST_CASE("Cauchy-Schwarz: identity passes, non-PSD fails") {
    CHECK(entry_cauchy_schwarz_check(MatrixMetric::constant(g, HMatrix::Identity(2, 2))));
    HMatrix bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    std::vector<HMatrix> s(g.size(), bad);
    CHECK_FALSE(entry_cauchy_schwarz_check(MatrixMetric::from_samples(g, s)));
  }
}

TEST_SUITE("shm_io") {
  TEST_CASE("CSV + descriptor round trip") {
    const GridDomain g = make_polydisc_grid({1.0}, {8, 8});
    const MatrixMetric h = raufi_example(g);
    std::stringstream ss;
    write_metric_csv(ss, h);
    const MatrixMetric back = read_metric(ss, metric_descriptor(h));
    CHECK(back.rank() == 2);
    CHECK(back.singular_nodes() == h.singular_nodes());
    for (std::size_t i = 0; i < g.size(); ++i) CHECK((back.at_node(i) - h.at_node(i)).norm() == 0.0);
    CHECK(grid_from_json(grid_to_json(g)).fingerprint() == g.fingerprint());
  }
}
