#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "l2m/grid.hpp"

namespace l2m::io {

/// Shortest round-trip decimal form of a double.
std::string fmt(double v);

/// Scalar field in node order with header re(z),im(z)[,re(w),im(w)],value.
void write_scalar_field(std::ostream& os, const GridDomain& grid, const std::vector<double>& values);
/// Reads values back; the node columns must match the grid to 1e-12.
std::vector<double> read_scalar_field(std::istream& is, const GridDomain& grid);

/// Complex matrix as CSV rows of re,im pairs.
void write_complex_matrix(std::ostream& os, const Eigen::MatrixXcd& m);
Eigen::MatrixXcd read_complex_matrix(std::istream& is);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace l2m::io
