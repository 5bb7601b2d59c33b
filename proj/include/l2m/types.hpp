#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace l2m {

using cplx = std::complex<double>;

/// A point of C^1 or C^2. One-variable domains leave the second slot at 0.
using Point = std::array<cplx, 2>;

inline constexpr double kPi = 3.14159265358979323846;

// ---- error types -----------------------------------------------------------
// Argument and range problems use std::invalid_argument / std::out_of_range.
// The numerical failure modes below carry enough context to locate the node.

class NonFiniteIntegrand : public std::runtime_error {
 public:
  NonFiniteIntegrand(std::size_t node, double value)
      : std::runtime_error("non-finite integrand at node " + std::to_string(node) +
                           " (value " + std::to_string(value) + ")"),
        node_(node) {}
  std::size_t node() const { return node_; }

 private:
  std::size_t node_;
};

class IntegrabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NearSingularError : public std::runtime_error {
 public:
  NearSingularError(const std::string& what, std::vector<std::size_t> nodes)
      : std::runtime_error(what), nodes_(std::move(nodes)) {}
  const std::vector<std::size_t>& nodes() const { return nodes_; }

 private:
  std::vector<std::size_t> nodes_;
};

class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InconsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public std::runtime_error {
 public:
  PreconditionError(const std::string& what, std::size_t node, double value)
      : std::runtime_error(what), node_(node), value_(value) {}
  std::size_t node() const { return node_; }
  double value() const { return value_; }

 private:
  std::size_t node_;
  double value_;
};

}  // namespace l2m
