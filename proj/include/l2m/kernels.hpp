#pragma once

// Data-parallel inner loops. Every OpenMP kernel has a plain serial twin that
// the tests compare against; the parallel versions use a fixed block
// partition so results do not depend on the thread count.

#include <cstddef>
#include <exception>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace l2m::kernels {

inline constexpr std::size_t kBlock = 1024;

/// sum_i f[i] * w[i]
double weighted_sum(std::span<const double> f, std::span<const double> w);
double weighted_sum_serial(std::span<const double> f, std::span<const double> w);

/// Index of the first non-finite entry, or f.size() when all are finite.
std::size_t first_non_finite(std::span<const double> f);

/// G(j, k) = sum_i w[i] * B(i, j) * conj(B(i, k)); B is nodes x basis.
Eigen::MatrixXcd gram(const Eigen::MatrixXcd& basis, std::span<const double> w);
Eigen::MatrixXcd gram_serial(const Eigen::MatrixXcd& basis, std::span<const double> w);

/// Collects the first exception thrown inside a parallel loop so it can be
/// rethrown on the calling thread (exceptions must not escape OpenMP regions).
class ExceptionTrap {
 public:
  template <class F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
#pragma omp critical(l2m_exception_trap)
      if (!first_) first_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (first_) std::rethrow_exception(first_);
  }

 private:
  std::exception_ptr first_;
};

/// out[i] = f(i) for i in [0, n).
template <class F>
void map_nodes(std::size_t n, std::vector<double>& out, F&& f) {
  out.resize(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
  ExceptionTrap trap;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i)
    trap.run([&] { out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i)); });
  trap.rethrow();
}

template <class F>
void map_nodes_serial(std::size_t n, std::vector<double>& out, F&& f) {
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
}

/// Dynamic-schedule loop for uneven per-item work (optimizer calls, fibers).
template <class F>
void for_each_dynamic(std::size_t n, F&& f) {
  const auto count = static_cast<std::ptrdiff_t>(n);
  ExceptionTrap trap;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) trap.run([&] { f(static_cast<std::size_t>(i)); });
  trap.rethrow();
}

/// Sets the OpenMP thread count (<= 0 keeps the runtime default).
void set_threads(int n);
int max_threads();

}  // namespace l2m::kernels
