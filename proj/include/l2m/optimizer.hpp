#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "l2m/sections.hpp"
#include "l2m/weight.hpp"

namespace l2m {

struct OptimizerOptions {
  int restarts = 32;
  std::uint64_t seed = 1;
  int irls_iters = 100;
  double irls_tol = 1e-7;  // relative decrease that hands over to Newton
  int newton_iters = 60;
  int snap_candidates = 4;      // near-zero nodes tried per pinning round on the best restart (0 disables)
  double snap_threshold = 1e-2; // |u|^2 / max |u|^2 below which a node is a pinning candidate
};

/// The m-Bergman extremal problem on one fiber:
///   minimize I(c) = int |u_c|^{2/m} e^{-phi/m}  subject to u_c(x) = 1,
/// so that B_m(x) = I_min^{-m}. Coefficients are restricted to the admissible
/// subspace of sections whose pseudo-norm is finite at the weight's poles.
class RayleighProblem {
 public:
  RayleighProblem(const SectionSpace& space, const Weight& w, double m);
  /// From weight samples on the space's grid; `poles` are the pole loci used
  /// for the admissibility conditions (may be empty).
  RayleighProblem(const SectionSpace& space, const std::vector<double>& phi, double m,
                  const std::vector<LogTag>& poles = {});

  double m() const { return m_; }
  const SectionSpace& space() const { return space_; }
  /// Basis of the admissible subspace (dimension x k'); k' == 0 means no
  /// section has finite pseudo-norm.
  const Eigen::MatrixXcd& admissible() const { return Z_; }

  /// I(c) for full coefficients c.
  double integral(const Eigen::VectorXcd& c) const;

  struct Solution {
    double value = 0.0;          // B_m(x)
    Eigen::VectorXcd coef;       // extremal coefficients with u(x) = 1 (empty when value == 0)
    int restarts = 0;
    double gap = 0.0;            // best - second best distinct local optimum (in B units)
    double integral = 0.0;       // I at the extremal
  };

  /// Multi-start maximization of the Rayleigh quotient at x.
  Solution maximize(const Point& x, const OptimizerOptions& opts) const;
  /// Single local solve from a warm start (full coefficients, rescaled to u(x) = 1).
  Solution polish(const Point& x, const Eigen::VectorXcd& warm, const OptimizerOptions& opts) const;

  /// Closed-form m = 1 solution (reproducing kernel on the admissible subspace).
  Solution closed_form_m1(const Point& x) const;
  /// Closed-form m = 1 values at many points (one factorization).
  std::vector<double> closed_form_m1(const std::vector<Point>& xs) const;

 private:
  struct Local {
    Eigen::VectorXcd c;  // reduced coefficients
    double I = 0.0;
  };
  Local run_local(const Eigen::VectorXcd& a, Eigen::VectorXcd c, const OptimizerOptions& opts) const;
  double reduced_integral(const Eigen::VectorXcd& c) const;
  /// Integral with reduced basis values B on the nodes, skipping pinned nodes.
  double basis_integral(const Eigen::MatrixXcd& B, const std::vector<char>& pinned, const Eigen::VectorXcd& c) const;
  /// Majorize-minimize then Newton in the coefficient space of B (BT = B^T)
  /// under a^T c = 1; pinned nodes are held at u = 0 and left out.
  Local descend(const Eigen::MatrixXcd& B, const Eigen::MatrixXcd& BT, const std::vector<char>& pinned,
                const Eigen::VectorXcd& a, Eigen::VectorXcd c, const OptimizerOptions& opts) const;
  /// Greedy pinning of near-zero nodes to exact zeros (cusp minima for m > 1).
  Local snap_zeros(const Eigen::VectorXcd& a, Local best, const OptimizerOptions& opts) const;

  void setup(const std::vector<double>& phi, const std::vector<LogTag>& poles);

  SectionSpace space_;
  double m_ = 1.0;
  Eigen::MatrixXcd Z_;        // admissible basis
  Eigen::MatrixXcd BZ_;       // basis values on nodes, reduced (nodes x k')
  Eigen::MatrixXcd BZT_;      // its transpose (node-contiguous)
  std::vector<double> mu_;    // quadrature weight * e^{-phi/m}
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXcd>> llt_;  // m = 1 normal matrix factorization
};

/// Minimal-order vanishing conditions at the weight's poles for finiteness of
/// int |u|^{2/m} e^{-phi/m}; returns the admissible coefficient subspace basis.
Eigen::MatrixXcd admissible_subspace(const SectionSpace& space, const std::vector<LogTag>& poles, double m);

}  // namespace l2m
