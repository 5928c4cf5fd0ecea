// Serial reference vs OpenMP kernels at training and sampling batch sizes.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "gacem/kernels.hpp"

namespace {

namespace k = gacem::kernels;

std::vector<double> random_vec(std::size_t n, double lo, double hi, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

struct LinearFixture {
  k::LinearShape s;
  std::vector<double> x, w, b, y, mask;
  explicit LinearFixture(std::size_t batch)
      : s{batch, 100, 100},
        x(random_vec(batch * 100, -1, 1, 1)),
        w(random_vec(100 * 100, -0.1, 0.1, 2)),
        b(100, 0.0),
        y(batch * 100),
        mask(100 * 100, 1.0) {}
};

template <bool Omp>
void BM_LinearForward(benchmark::State& state) {
  LinearFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Omp) k::omp::linear_forward(f.s, f.x, f.w, f.b, f.y);
    else k::serial::linear_forward(f.s, f.x, f.w, f.b, f.y);
    benchmark::DoNotOptimize(f.y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Omp>
void BM_LinearBackwardParams(benchmark::State& state) {
  LinearFixture f(static_cast<std::size_t>(state.range(0)));
  std::vector<double> dw(100 * 100), db(100);
  for (auto _ : state) {
    if constexpr (Omp) k::omp::linear_backward_params(f.s, f.y, f.x, f.mask, dw, db);
    else k::serial::linear_backward_params(f.s, f.y, f.x, f.mask, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct MixtureFixture {
  k::MixtureShape s;
  std::vector<double> logits, mu, sigma, lp, u;
  std::vector<int> bins;
  explicit MixtureFixture(std::size_t batch)
      : s{batch, 40, 100},
        logits(random_vec(batch * 40, -1, 1, 3)),
        mu(random_vec(batch * 40, -1, 1, 4)),
        sigma(batch * 40, 0.05),
        lp(batch),
        u(random_vec(2 * batch, 0, 1, 5)),
        bins(batch) {
    std::mt19937 rng(6);
    for (int& b : bins) b = static_cast<int>(rng() % 100);
  }
};

template <bool Omp>
void BM_MixtureLogProb(benchmark::State& state) {
  MixtureFixture f(static_cast<std::size_t>(state.range(0)));
  std::vector<double> dl(f.logits.size()), dm(f.logits.size()), ds(f.logits.size());
  const k::MixtureJacobian jac{dl, dm, ds};
  for (auto _ : state) {
    if constexpr (Omp) k::omp::mixture_log_prob(f.s, f.logits, f.mu, f.sigma, f.bins, f.lp, &jac);
    else k::serial::mixture_log_prob(f.s, f.logits, f.mu, f.sigma, f.bins, f.lp, &jac);
    benchmark::DoNotOptimize(f.lp.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Omp>
void BM_MixtureSample(benchmark::State& state) {
  MixtureFixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Omp) k::omp::mixture_sample(f.s, f.logits, f.mu, f.sigma, f.u, f.bins);
    else k::serial::mixture_sample(f.s, f.logits, f.mu, f.sigma, f.u, f.bins);
    benchmark::DoNotOptimize(f.bins.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_LinearForward<false>)->Arg(16)->Arg(1000)->Name("linear_forward/serial");
BENCHMARK(BM_LinearForward<true>)->Arg(16)->Arg(1000)->Name("linear_forward/omp");
BENCHMARK(BM_LinearBackwardParams<false>)->Arg(16)->Arg(1000)->Name("linear_backward_params/serial");
BENCHMARK(BM_LinearBackwardParams<true>)->Arg(16)->Arg(1000)->Name("linear_backward_params/omp");
BENCHMARK(BM_MixtureLogProb<false>)->Arg(16)->Arg(1000)->Name("mixture_log_prob/serial");
BENCHMARK(BM_MixtureLogProb<true>)->Arg(16)->Arg(1000)->Name("mixture_log_prob/omp");
BENCHMARK(BM_MixtureSample<false>)->Arg(25)->Arg(5000)->Name("mixture_sample/serial");
BENCHMARK(BM_MixtureSample<true>)->Arg(25)->Arg(5000)->Name("mixture_sample/omp");

BENCHMARK_MAIN();
