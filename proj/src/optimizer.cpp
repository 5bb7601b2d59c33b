#include "l2m/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "l2m/kernels.hpp"

namespace l2m {

namespace {

/// Orthonormal basis of {c : a^T c = 0}.
Eigen::MatrixXcd constraint_null_space(const Eigen::VectorXcd& a) {
  const Eigen::Index k = a.size();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Eigen::MatrixXcd(a.conjugate()));
  const Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(k, k);
  return Q.rightCols(k - 1);
}

/// M = B^H diag(w) B from BT = B^T (column i holds node i's basis values),
/// accumulated node by node (upper triangle, then mirrored).
Eigen::MatrixXcd weighted_normal_matrix(const Eigen::MatrixXcd& BT, const std::vector<double>& w) {
  // Plain real arithmetic: std::complex products go through the Annex G
  // NaN-recovery path, which dominates this loop otherwise.
  const Eigen::Index k = BT.rows();
  std::vector<double> re(static_cast<std::size_t>(k * k), 0.0), im(static_cast<std::size_t>(k * k), 0.0);
  for (Eigen::Index i = 0; i < BT.cols(); ++i) {
    const double wi = w[static_cast<std::size_t>(i)];
    const cplx* b = BT.col(i).data();
    for (Eigen::Index a = 0; a < k; ++a) {
      const double ar = wi * b[a].real(), ai = -wi * b[a].imag();  // wi * conj(b_a)
      double* rr = re.data() + a * k;
      double* ii = im.data() + a * k;
      for (Eigen::Index c = a; c < k; ++c) {
        const double br = b[c].real(), bi = b[c].imag();
        rr[c] += ar * br - ai * bi;
        ii[c] += ar * bi + ai * br;
      }
    }
  }
  Eigen::MatrixXcd M(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    M(a, a) = re[static_cast<std::size_t>(a * k + a)];
    for (Eigen::Index c = a + 1; c < k; ++c) {
      M(a, c) = cplx{re[static_cast<std::size_t>(a * k + c)], im[static_cast<std::size_t>(a * k + c)]};
      M(c, a) = std::conj(M(a, c));
    }
  }
  return M;
}

/// Minimizer of c^H M c subject to a^T c = 1.
Eigen::VectorXcd constrained_quadratic_min(const Eigen::MatrixXcd& M, const Eigen::VectorXcd& a) {
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(M);
  const Eigen::VectorXcd y = ldlt.solve(Eigen::VectorXcd(a.conjugate()));
  const cplx d = a.transpose() * y;
  return y / d;
}

/// s^e with fast paths for the exponents met at m = 2 and m = 1.
inline double pow_fast(double s, double e) {
  if (e == 1.0) return s;
  if (e == 0.5) return std::sqrt(s);
  if (e == -0.5) return 1.0 / std::sqrt(s);
  return std::pow(s, e);
}

}  // namespace

Eigen::MatrixXcd admissible_subspace(const SectionSpace& space, const std::vector<LogTag>& poles, double m) {
  const auto k = static_cast<Eigen::Index>(space.dimension());
  std::vector<Eigen::RowVectorXcd> rows;
  for (const auto& t : poles) {
    const int codim = locus_codim(t, space.dims());
    const double bound = t.coef - m * codim / 2.0;  // need order > bound
    if (bound < 0.0) continue;
    const int order = static_cast<int>(std::floor(bound)) + 1;
    std::vector<Polynomial> shifted;
    for (Eigen::Index j = 0; j < k; ++j) {
      Point s{};
      if (t.kind == LogTag::Kind::point) s = t.where;
      else s[static_cast<std::size_t>(t.axis)] = t.where[static_cast<std::size_t>(t.axis)];
      shifted.push_back(space.basis_polynomial(static_cast<std::size_t>(j)).shifted(s));
    }
    const int d = space.degree();
    for (int a = 0; a <= d; ++a)
      for (int b = 0; a + b <= d; ++b) {
        if (space.dims() == 1 && b > 0) continue;
        const int e = t.kind == LogTag::Kind::point ? a + b : (t.axis == 0 ? a : b);
        if (e >= order) continue;
        Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(k);
        for (Eigen::Index j = 0; j < k; ++j)
          for (const auto& term : shifted[static_cast<std::size_t>(j)].terms())
            if (term.exp.a == a && term.exp.b == b) row(j) += term.coef;
        rows.push_back(row);
      }
  }
  if (rows.empty()) return Eigen::MatrixXcd::Identity(k, k);
  Eigen::MatrixXcd K(static_cast<Eigen::Index>(rows.size()), k);
  for (std::size_t i = 0; i < rows.size(); ++i) K.row(static_cast<Eigen::Index>(i)) = rows[i];
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(K, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv.maxCoeff() : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * smax) ++rank;
  return svd.matrixV().rightCols(k - rank);
}

RayleighProblem::RayleighProblem(const SectionSpace& space, const Weight& w, double m) : space_(space), m_(m) {
  if (w.dims() != space.dims()) throw std::invalid_argument("RayleighProblem: weight and fiber dimension differ");
  setup(w.sample(space.domain()), pole_loci(w));
}

RayleighProblem::RayleighProblem(const SectionSpace& space, const std::vector<double>& phi, double m,
                                 const std::vector<LogTag>& poles)
    : space_(space), m_(m) {
  setup(phi, poles);
}

void RayleighProblem::setup(const std::vector<double>& phi, const std::vector<LogTag>& poles) {
  if (!(m_ >= 1.0)) throw std::invalid_argument("RayleighProblem: m must be >= 1");
  const GridDomain& g = space_.domain();
  if (phi.size() != g.size()) throw std::invalid_argument("RayleighProblem: sample count does not match the fiber grid");
  mu_.resize(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    mu_[i] = g.weights()[i] * std::exp(-phi[i] / m_);
    if (!std::isfinite(mu_[i])) throw NonFiniteIntegrand(i, mu_[i]);
  }
  Z_ = admissible_subspace(space_, poles, m_);
  if (Z_.cols() == static_cast<Eigen::Index>(space_.dimension()) && Z_.isIdentity(0.0))
    BZ_ = space_.basis_matrix();
  else
    BZ_ = space_.basis_matrix() * Z_;
  BZT_ = BZ_.transpose();
  if (m_ == 1.0 && Z_.cols() > 0) {
    auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXcd>>(weighted_normal_matrix(BZT_, mu_));
    if (llt->info() == Eigen::Success) llt_ = llt;
  }
}

double RayleighProblem::reduced_integral(const Eigen::VectorXcd& c) const {
  const Eigen::VectorXcd u = BZ_ * c;
  const double q = 1.0 / m_;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double s = std::norm(u(i));
    acc += mu_[static_cast<std::size_t>(i)] * pow_fast(s, q);
  }
  return acc;
}

double RayleighProblem::integral(const Eigen::VectorXcd& c) const {
  const Eigen::VectorXcd u = space_.basis_matrix() * c;
  const double q = 1.0 / m_;
  std::vector<double> f(static_cast<std::size_t>(u.size()));
  for (Eigen::Index i = 0; i < u.size(); ++i) f[static_cast<std::size_t>(i)] = std::pow(std::norm(u(i)), q);
  return kernels::weighted_sum_serial(f, mu_);
}

RayleighProblem::Local RayleighProblem::run_local(const Eigen::VectorXcd& a, Eigen::VectorXcd c,
                                                  const OptimizerOptions& opts) const {
  return descend(BZ_, BZT_, {}, a, std::move(c), opts);
}

double RayleighProblem::basis_integral(const Eigen::MatrixXcd& B, const std::vector<char>& pinned,
                                       const Eigen::VectorXcd& c) const {
  const Eigen::VectorXcd u = B * c;
  const double q = 1.0 / m_;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!pinned.empty() && pinned[static_cast<std::size_t>(i)]) continue;
    acc += mu_[static_cast<std::size_t>(i)] * pow_fast(std::norm(u(i)), q);
  }
  return acc;
}

RayleighProblem::Local RayleighProblem::descend(const Eigen::MatrixXcd& B, const Eigen::MatrixXcd& BT,
                                                const std::vector<char>& pinned, const Eigen::VectorXcd& a,
                                                Eigen::VectorXcd c, const OptimizerOptions& opts) const {
  const double q = 1.0 / m_;
  const auto nodes = static_cast<std::size_t>(B.rows());
  auto is_pinned = [&](std::size_t i) { return !pinned.empty() && pinned[i] != 0; };
  double I = basis_integral(B, pinned, c);
  std::vector<double> omega(nodes);

  // Majorize-minimize: s^q <= s0^q + q s0^{q-1} (s - s0) for q <= 1.
  for (int it = 0; it < opts.irls_iters; ++it) {
    const Eigen::VectorXcd u = B * c;
    double smax = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) smax = std::max(smax, std::norm(u(static_cast<Eigen::Index>(i))));
    const double floor = std::max(smax * 1e-24, std::numeric_limits<double>::min());
    for (std::size_t i = 0; i < nodes; ++i)
      omega[i] = is_pinned(i) ? 0.0 : mu_[i] * (q == 1.0 ? 1.0 : pow_fast(std::max(std::norm(u(static_cast<Eigen::Index>(i))), floor), q - 1.0));
    const Eigen::VectorXcd next = constrained_quadratic_min(weighted_normal_matrix(BT, omega), a);
    const double In = basis_integral(B, pinned, next);
    if (!(In <= I)) break;  // no progress (rounding level)
    const double dec = I - In;
    c = next;
    I = In;
    if (q == 1.0 || dec <= opts.irls_tol * I) break;
  }

  // Damped Newton on the real parametrization c + N y of the constraint set.
  const Eigen::Index kr = B.cols();
  if (kr > 1 && q != 1.0) {
    const Eigen::MatrixXcd N = constraint_null_space(a);
    const Eigen::Index h = kr - 1, n = 2 * h;
    // Real parameters y_j = Re, y_{h+j} = Im of the null-space coordinates:
    // column a of [J, iJ] is the complex direction in which u moves.
    // Column i holds node i's directions; a coefficient-wise product beats
    // blocked GEMM for these thin shapes.
    const Eigen::MatrixXcd JT = N.transpose().lazyProduct(BT);
    std::vector<cplx> dir(static_cast<std::size_t>(n));
    std::vector<double> ds(static_cast<std::size_t>(n));
    for (int it = 0; it < opts.newton_iters; ++it) {
      // s_i = |u_i|^2 and I = sum mu s^q; ds_a = 2 Re(conj(u) dir_a).
      const Eigen::VectorXcd u = B * c;
      Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
      for (std::size_t i = 0; i < nodes; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        const double s = std::norm(u(ii));
        if (!(s > 0.0) || is_pinned(i)) continue;
        const double sq1 = mu_[i] * q * pow_fast(s, q - 1.0);
        const double c2 = sq1 * (q - 1.0) / s;
        const cplx ub = std::conj(u(ii));
        const cplx* Ji = JT.col(ii).data();
        for (Eigen::Index j = 0; j < h; ++j) {
          dir[static_cast<std::size_t>(j)] = Ji[j];
          dir[static_cast<std::size_t>(h + j)] = cplx{-Ji[j].imag(), Ji[j].real()};
        }
        for (Eigen::Index a = 0; a < n; ++a) {
          const auto sa = static_cast<std::size_t>(a);
          ds[sa] = 2.0 * (ub.real() * dir[sa].real() - ub.imag() * dir[sa].imag());
          g(a) += sq1 * ds[sa];
        }
        for (Eigen::Index a = 0; a < n; ++a) {
          const auto sa = static_cast<std::size_t>(a);
          for (Eigen::Index b = a; b < n; ++b) {
            const auto sb = static_cast<std::size_t>(b);
            const double re = dir[sa].real() * dir[sb].real() + dir[sa].imag() * dir[sb].imag();
            H(a, b) += 2.0 * sq1 * re + c2 * ds[sa] * ds[sb];
          }
        }
      }
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a + 1; b < n; ++b) H(b, a) = H(a, b);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (H + H.transpose()));
      Eigen::VectorXd lam = es.eigenvalues();
      const double lmax = std::max(lam.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
      for (Eigen::Index j = 0; j < n; ++j) lam(j) = std::max(std::abs(lam(j)), 1e-10 * lmax);
      const Eigen::VectorXd d = -(es.eigenvectors() * ((es.eigenvectors().transpose() * g).cwiseQuotient(lam)));
      const double slope = g.dot(d);
      // Stop once the predicted decrease is at rounding level: the line search
      // cannot resolve it and would only burn backtracking steps.
      if (!(slope < 0.0) || -slope <= 1e-13 * I) break;
      auto step_to = [&](double t) {
        Eigen::VectorXcd y(h);
        for (Eigen::Index j = 0; j < h; ++j) y(j) = cplx{t * d(j), t * d(h + j)};
        return Eigen::VectorXcd(c + N * y);
      };
      double t = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt, t *= 0.5) {
        const Eigen::VectorXcd cn = step_to(t);
        const double In = basis_integral(B, pinned, cn);
        if (In <= I + 1e-4 * t * slope) {
          moved = In < I;
          if (moved) {
            c = cn;
            I = In;
          }
          break;
        }
      }
      if (!moved) break;
    }
  }
  return Local{c, I};
}


RayleighProblem::Local RayleighProblem::snap_zeros(const Eigen::VectorXcd& a, Local best,
                                                   const OptimizerOptions& opts) const {
  // For q < 1 the discrete objective has a cusp wherever u vanishes at a node,
  // and those cusps are local minima the smooth descent only approaches. Pin
  // near-zero nodes to exact zeros (greedily, best candidate first) and descend
  // in the remaining subspace while that lowers the integral.
  const Eigen::Index kr = BZ_.cols();
  const auto nodes = static_cast<std::size_t>(BZ_.rows());
  if (m_ == 1.0 || opts.snap_candidates <= 0 || kr < 2) return best;
  std::vector<std::size_t> pinned_nodes;
  Local current = best;
  Eigen::VectorXcd full = best.c;
  while (static_cast<Eigen::Index>(pinned_nodes.size()) + 1 < kr) {
    const Eigen::VectorXcd u = BZ_ * full;
    std::vector<std::size_t> order;
    double smax = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) smax = std::max(smax, std::norm(u(static_cast<Eigen::Index>(i))));
    for (std::size_t i = 0; i < nodes; ++i)
      if (std::find(pinned_nodes.begin(), pinned_nodes.end(), i) == pinned_nodes.end() &&
          std::norm(u(static_cast<Eigen::Index>(i))) < opts.snap_threshold * smax)
        order.push_back(i);
    const auto take = std::min(order.size(), static_cast<std::size_t>(opts.snap_candidates));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t x, std::size_t y) {
                        return std::norm(u(static_cast<Eigen::Index>(x))) < std::norm(u(static_cast<Eigen::Index>(y)));
                      });
    bool improved = false;
    Local next;
    std::size_t next_node = 0;
    for (std::size_t t = 0; t < take; ++t) {
      std::vector<std::size_t> trial = pinned_nodes;
      trial.push_back(order[t]);
      Eigen::MatrixXcd K(static_cast<Eigen::Index>(trial.size()), kr);
      for (std::size_t r = 0; r < trial.size(); ++r) K.row(static_cast<Eigen::Index>(r)) = BZ_.row(static_cast<Eigen::Index>(trial[r]));
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(K, Eigen::ComputeFullV);
      const Eigen::MatrixXcd P = svd.matrixV().rightCols(kr - static_cast<Eigen::Index>(trial.size()));
      const Eigen::VectorXcd ap = P.transpose() * a;
      if (!(ap.norm() > 1e-12 * a.norm())) continue;  // pinning would force u(x) = 0
      Eigen::VectorXcd y = P.adjoint() * full;
      const cplx d = ap.transpose() * y;
      if (std::abs(d) > 1e-12 * ap.norm() * y.norm()) y /= d;
      else y = ap.conjugate() / ap.squaredNorm();
      std::vector<char> mask(nodes, 0);
      for (std::size_t j : trial) mask[j] = 1;
      const Eigen::MatrixXcd B = BZ_ * P;
      const Local loc = descend(B, B.transpose(), mask, ap, y, opts);
      const Eigen::VectorXcd c = P * loc.c;
      const double I = reduced_integral(c);  // pinned nodes contribute their rounding-level values
      // Pinning a node the descent already sits on leaves I unchanged up to
      // rounding; accept that too so later rounds can pin the next zero.
      if (I <= current.I * (1.0 + 1e-12) && (!improved || I < next.I)) {
        next = Local{c, I};
        next_node = order[t];
        improved = true;
      }
    }
    if (!improved) break;
    current = next;
    if (current.I < best.I) best = current;
    full = current.c;
    pinned_nodes.push_back(next_node);
  }
  return best;
}

RayleighProblem::Solution RayleighProblem::maximize(const Point& x, const OptimizerOptions& opts) const {
  Solution sol;
  const Eigen::VectorXcd v = space_.basis_at(x);
  if (Z_.cols() == 0) return sol;
  const Eigen::VectorXcd a = Z_.transpose() * v;
  if (!(a.norm() > 1e-12 * std::max(1.0, v.norm()))) return sol;

  const int total = std::max(1, opts.restarts);
  std::vector<Local> results(static_cast<std::size_t>(total));
  kernels::for_each_dynamic(static_cast<std::size_t>(total), [&](std::size_t r) {
    Eigen::VectorXcd c0 = a.conjugate() / a.squaredNorm();
    if (r > 0) {
      std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                        static_cast<std::uint32_t>(r)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> nd(0.0, 1.0);
      for (int attempt = 0; attempt < 16; ++attempt) {
        Eigen::VectorXcd cr(a.size());
        for (Eigen::Index j = 0; j < a.size(); ++j) cr(j) = cplx{nd(rng), nd(rng)};
        const cplx d = a.transpose() * cr;
        if (std::abs(d) > 1e-6 * a.norm() * cr.norm()) {
          c0 = cr / d;
          break;
        }
      }
    }
    results[r] = run_local(a, c0, opts);
  });

  std::vector<double> Is;
  std::size_t best = 0;
  for (std::size_t r = 0; r < results.size(); ++r) {
    Is.push_back(results[r].I);
    if (results[r].I < results[best].I) best = r;
  }
  std::sort(Is.begin(), Is.end());
  const Local top = snap_zeros(a, results[best], opts);
  sol.integral = top.I;
  sol.value = std::pow(sol.integral, -m_);
  sol.coef = Z_ * top.c;
  sol.restarts = total;
  for (double I : Is)
    if (I > sol.integral * (1.0 + 1e-9)) {
      sol.gap = sol.value - std::pow(I, -m_);
      break;
    }
  return sol;
}

RayleighProblem::Solution RayleighProblem::polish(const Point& x, const Eigen::VectorXcd& warm,
                                                  const OptimizerOptions& opts) const {
  Solution sol;
  const Eigen::VectorXcd v = space_.basis_at(x);
  if (Z_.cols() == 0) return sol;
  const Eigen::VectorXcd a = Z_.transpose() * v;
  if (!(a.norm() > 1e-12 * std::max(1.0, v.norm()))) return sol;
  // Project the warm start onto the admissible subspace, then onto u(x) = 1.
  Eigen::VectorXcd c = Z_.adjoint() * warm;
  const cplx d = a.transpose() * c;
  if (std::abs(d) > 1e-12 * a.norm() * c.norm())
    c /= d;
  else
    c = a.conjugate() / a.squaredNorm();
  // The warm start is already near a local optimum: a few majorize-minimize
  // steps for robustness, then Newton does the rest.
  OptimizerOptions o = opts;
  o.irls_iters = std::min(opts.irls_iters, 1);
  const Local loc = run_local(a, c, o);
  sol.integral = loc.I;
  sol.value = std::pow(loc.I, -m_);
  sol.coef = Z_ * loc.c;
  sol.restarts = 1;
  return sol;
}

RayleighProblem::Solution RayleighProblem::closed_form_m1(const Point& x) const {
  if (m_ != 1.0) throw std::invalid_argument("closed_form_m1: problem was built for m != 1");
  Solution sol;
  const Eigen::VectorXcd v = space_.basis_at(x);
  if (Z_.cols() == 0) return sol;
  const Eigen::VectorXcd a = Z_.transpose() * v;
  if (!llt_) throw ConditioningError("closed_form_m1: Gram matrix is not positive definite");
  const Eigen::VectorXcd y = llt_->solve(Eigen::VectorXcd(a.conjugate()));
  const double B = (a.transpose() * y)(0).real();
  sol.value = std::max(B, 0.0);
  sol.restarts = 0;
  if (B > 0.0) {
    sol.coef = Z_ * (y / B);
    sol.integral = 1.0 / B;
  }
  return sol;
}

std::vector<double> RayleighProblem::closed_form_m1(const std::vector<Point>& xs) const {
  if (m_ != 1.0) throw std::invalid_argument("closed_form_m1: problem was built for m != 1");
  std::vector<double> out(xs.size(), 0.0);
  if (Z_.cols() == 0) return out;
  if (!llt_) throw ConditioningError("closed_form_m1: Gram matrix is not positive definite");
  const auto& llt = *llt_;
  kernels::map_nodes(xs.size(), out, [&](std::size_t i) {
    const Eigen::VectorXcd a = Z_.transpose() * space_.basis_at(xs[i]);
    const Eigen::VectorXcd y = llt.solve(Eigen::VectorXcd(a.conjugate()));
    return std::max((a.transpose() * y)(0).real(), 0.0);
  });
  return out;
}

}  // namespace l2m
