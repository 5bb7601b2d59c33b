#include "l2m/kernels.hpp"

#include <cmath>
#include <omp.h>

namespace l2m::kernels {

double weighted_sum(std::span<const double> f, std::span<const double> w) {
  const std::size_t n = f.size();
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(blocks, 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(n, lo + kBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f[i] * w[i];
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

double weighted_sum_serial(std::span<const double> f, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * w[i];
  return s;
}

std::size_t first_non_finite(std::span<const double> f) {
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!std::isfinite(f[i])) return i;
  return f.size();
}

Eigen::MatrixXcd gram(const Eigen::MatrixXcd& basis, std::span<const double> w) {
  const Eigen::Index d = basis.cols();
  const Eigen::Index n = basis.rows();
  Eigen::MatrixXcd g(d, d);
  // Column-weighted copy, then one dot product per upper-triangle entry.
  Eigen::MatrixXcd wb(n, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < n; ++i) wb(i, j) = w[static_cast<std::size_t>(i)] * basis(i, j);
  const Eigen::Index pairs = d * (d + 1) / 2;
#pragma omp parallel for schedule(static)
  for (Eigen::Index p = 0; p < pairs; ++p) {
    Eigen::Index j = 0, rem = p;
    while (rem >= d - j) {
      rem -= d - j;
      ++j;
    }
    const Eigen::Index k = j + rem;
    // sum_i w b_j conj(b_k)
    const std::complex<double> s = basis.col(k).dot(wb.col(j));
    g(j, k) = s;
    g(k, j) = std::conj(s);
  }
  for (Eigen::Index j = 0; j < d; ++j) g(j, j) = g(j, j).real();
  return g;
}

Eigen::MatrixXcd gram_serial(const Eigen::MatrixXcd& basis, std::span<const double> w) {
  const Eigen::Index d = basis.cols();
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(d, d);
  for (Eigen::Index i = 0; i < basis.rows(); ++i) {
    const double wi = w[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k) g(j, k) += wi * basis(i, j) * std::conj(basis(i, k));
  }
  return g;
}

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace l2m::kernels
