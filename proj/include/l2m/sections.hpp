#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "l2m/grid.hpp"
#include "l2m/polynomial.hpp"
#include "l2m/weight.hpp"

namespace l2m {

/// Truncated monomial basis of holomorphic sections over a fiber domain.
/// Basis order: by total degree, then by increasing power of the second
/// variable. `twist` is the pluricanonical level m the space models; sections
/// are chart scalars u' with u = u' (dz)^{m}.
class SectionSpace {
 public:
  SectionSpace() = default;
  SectionSpace(GridDomain domain, int degree, int twist);

  const GridDomain& domain() const { return data_->domain; }
  int dims() const { return data_->domain.dims(); }
  int degree() const { return data_->degree; }
  int twist() const { return data_->twist; }
  std::size_t dimension() const { return data_->basis.size(); }
  const std::vector<Monomial>& basis() const { return data_->basis; }

  /// Values of all basis elements at z.
  Eigen::VectorXcd basis_at(const Point& z) const;
  /// Basis evaluated at every grid node (nodes x dimension).
  const Eigen::MatrixXcd& basis_matrix() const { return data_->at_nodes; }
  /// Basis element k as a polynomial.
  Polynomial basis_polynomial(std::size_t k) const;

 private:
  struct Data {
    GridDomain domain;
    int degree = 0;
    int twist = 1;
    std::vector<Monomial> basis;
    Eigen::MatrixXcd at_nodes;
  };
  std::shared_ptr<const Data> data_;
};

/// Element of a SectionSpace given by its coefficient vector.
class Section {
 public:
  Section(SectionSpace space, Eigen::VectorXcd coef);
  static Section zero(const SectionSpace& space);
  static Section basis_element(const SectionSpace& space, std::size_t k);

  const SectionSpace& space() const { return space_; }
  const Eigen::VectorXcd& coef() const { return coef_; }
  Polynomial polynomial() const;
  Section scaled(cplx s) const { return Section(space_, coef_ * s); }
  /// Values at every node of the space's domain.
  Eigen::VectorXcd at_nodes() const { return space_.basis_matrix() * coef_; }

 private:
  SectionSpace space_;
  Eigen::VectorXcd coef_;
};

SectionSpace make_poly_space(const GridDomain& dom, int degree, int m);

/// Horner evaluation of u at x.
cplx evaluate(const Section& u, const Point& x);

/// Effective singular loci of a weight: tags at the same location are merged
/// with their coefficients summed. Only loci with positive total coefficient
/// (poles of e^{-phi}) are kept.
std::vector<LogTag> pole_loci(const Weight& w);

/// Vanishing order of a polynomial along the locus of a tag (point order for
/// point tags, multiplicity of the hyperplane factor otherwise).
int order_along(const Polynomial& p, const LogTag& locus);

/// Real codimension of a tag locus inside the domain (2 for points in one
/// variable and for hyperplanes, 4 for points in two variables).
int locus_codim(const LogTag& locus, int dims);

/// Weighted Gram matrix G(j, k) = int b_j conj(b_k) e^{-phi}. Throws
/// IntegrabilityError naming the first non-integrable pair.
Eigen::MatrixXcd gram(const SectionSpace& space, const Weight& w);
Eigen::MatrixXcd gram_serial(const SectionSpace& space, const Weight& w);

/// Gram matrix from precomputed weight samples (no integrability check).
Eigen::MatrixXcd gram_from_samples(const SectionSpace& space, const std::vector<double>& phi);

/// Canonical L^2 norm (int |u|^2 e^{-phi})^{1/2}.
double l2_norm(const Section& u, const Weight& w);

/// Gram export: complex entries as re,im pairs, plus a JSON descriptor.
void write_gram_csv(std::ostream& os, const Eigen::MatrixXcd& g);
nlohmann::json gram_descriptor(const SectionSpace& space, const Weight& w);

}  // namespace l2m
