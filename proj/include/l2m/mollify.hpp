#pragma once

#include <vector>

#include "l2m/grid.hpp"
#include "l2m/weight.hpp"

namespace l2m {

/// Convolution with a normalized radial bump exp(-1/(1-|y|^2)) of radius
/// epsilon (a product of such bumps for two variables). Psh inputs give
/// mollify(w, e) >= w and monotone growth in e. The input must be free of
/// log-tags within epsilon of where the result is evaluated.
/// Throws std::invalid_argument unless 0 < epsilon < smallest domain radius.
Weight mollify(const Weight& w, double epsilon, const GridDomain& dom);

struct RegSupOptions {
  /// Radius of the smoothing pass applied after the pointwise max; 0 keeps the
  /// exact max, which is already upper semicontinuous for finitely many usc inputs.
  double usc_radius = 0.0;
};

/// Regularized upper envelope of finitely many weights on a common grid.
Weight reg_sup(const std::vector<Weight>& ws, const GridDomain& grid, const RegSupOptions& opts = {});

}  // namespace l2m
