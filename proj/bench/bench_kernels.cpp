// Serial reference kernels against their OpenMP counterparts.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "l2m/grid.hpp"
#include "l2m/kernels.hpp"
#include "l2m/levi.hpp"
#include "l2m/weight.hpp"

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

Eigen::MatrixXcd random_basis(Eigen::Index nodes, Eigen::Index k) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXcd B(nodes, k);
  for (Eigen::Index i = 0; i < nodes; ++i)
    for (Eigen::Index j = 0; j < k; ++j) B(i, j) = l2m::cplx{nd(rng), nd(rng)};
  return B;
}

template <bool Parallel>
void BM_weighted_sum(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto f = random_vector(n, 1), w = random_vector(n, 2);
  for (auto _ : state) {
    const double s = Parallel ? l2m::kernels::weighted_sum(f, w) : l2m::kernels::weighted_sum_serial(f, w);
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}

template <bool Parallel>
void BM_gram(benchmark::State& state) {
  const Eigen::MatrixXcd B = random_basis(state.range(0), state.range(1));
  const auto w = random_vector(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) {
    Eigen::MatrixXcd G = Parallel ? l2m::kernels::gram(B, w) : l2m::kernels::gram_serial(B, w);
    benchmark::DoNotOptimize(G.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}

template <bool Parallel>
void BM_levi_scan(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const l2m::GridDomain g = l2m::make_polydisc_grid({1.0}, {n, n});
  const l2m::Weight w = l2m::Weight::polynomial(1, {{l2m::SmoothTerm::Kind::abs2, 1.0, 1, 0},
                                                    {l2m::SmoothTerm::Kind::abs2, 0.5, 2, 0}});
  const double step = l2m::default_step(g);
  const l2m::ScalarFn f = [&w](const l2m::Point& z) { return w(z); };
  std::vector<double> out;
  for (auto _ : state) {
    auto eval = [&](std::size_t i) { return l2m::levi_min_eig(f, 1, g.node(i), step); };
    if (Parallel)
      l2m::kernels::map_nodes(g.size(), out, eval);
    else
      l2m::kernels::map_nodes_serial(g.size(), out, eval);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(g.size()));
}

}  // namespace

BENCHMARK(BM_weighted_sum<false>)->Name("weighted_sum/serial")->RangeMultiplier(16)->Range(1 << 12, 1 << 20);
BENCHMARK(BM_weighted_sum<true>)->Name("weighted_sum/openmp")->RangeMultiplier(16)->Range(1 << 12, 1 << 20);
BENCHMARK(BM_gram<false>)->Name("gram/serial")->Args({4096, 6})->Args({16384, 15})->Args({65536, 28});
BENCHMARK(BM_gram<true>)->Name("gram/openmp")->Args({4096, 6})->Args({16384, 15})->Args({65536, 28});
BENCHMARK(BM_levi_scan<false>)->Name("levi_scan/serial")->Arg(32)->Arg(64)->Arg(128);
BENCHMARK(BM_levi_scan<true>)->Name("levi_scan/openmp")->Arg(32)->Arg(64)->Arg(128);

BENCHMARK_MAIN();
