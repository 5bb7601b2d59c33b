#include "l2m/field_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace l2m::io {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

namespace {
double parse_d(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("csv: bad number '" + s + "'");
  return v;
}
}  // namespace

void write_scalar_field(std::ostream& os, const GridDomain& grid, const std::vector<double>& values) {
  if (values.size() != grid.size()) throw std::invalid_argument("write_scalar_field: size mismatch");
  os << "re(z),im(z)";
  if (grid.dims() == 2) os << ",re(w),im(w)";
  os << ",value\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point& p = grid.node(i);
    os << fmt(p[0].real()) << ',' << fmt(p[0].imag());
    if (grid.dims() == 2) os << ',' << fmt(p[1].real()) << ',' << fmt(p[1].imag());
    os << ',' << fmt(values[i]) << '\n';
  }
}

std::vector<double> read_scalar_field(std::istream& is, const GridDomain& grid) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("read_scalar_field: empty input");
  const std::size_t cols = grid.dims() == 2 ? 5 : 3;
  if (split_csv_line(line).size() != cols) throw std::invalid_argument("read_scalar_field: header does not match dims");
  std::vector<double> out;
  std::size_t i = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != cols || i >= grid.size()) throw std::invalid_argument("read_scalar_field: malformed row " + std::to_string(i + 2));
    const Point& p = grid.node(i);
    double dev = std::abs(parse_d(f[0]) - p[0].real()) + std::abs(parse_d(f[1]) - p[0].imag());
    if (grid.dims() == 2) dev += std::abs(parse_d(f[2]) - p[1].real()) + std::abs(parse_d(f[3]) - p[1].imag());
    if (dev > 1e-12) throw std::invalid_argument("read_scalar_field: node mismatch at row " + std::to_string(i + 2));
    out.push_back(parse_d(f.back()));
    ++i;
  }
  if (out.size() != grid.size()) throw std::invalid_argument("read_scalar_field: row count does not match grid");
  return out;
}

void write_complex_matrix(std::ostream& os, const Eigen::MatrixXcd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << fmt(m(i, j).real()) << ',' << fmt(m(i, j).imag());
    }
    os << '\n';
  }
}

Eigen::MatrixXcd read_complex_matrix(std::istream& is) {
  std::vector<std::vector<std::complex<double>>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() % 2) throw std::invalid_argument("read_complex_matrix: odd column count");
    std::vector<std::complex<double>> r;
    for (std::size_t k = 0; k < f.size(); k += 2) r.emplace_back(parse_d(f[k]), parse_d(f[k + 1]));
    if (!rows.empty() && r.size() != rows.front().size()) throw std::invalid_argument("read_complex_matrix: ragged rows");
    rows.push_back(std::move(r));
  }
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

}  // namespace l2m::io
