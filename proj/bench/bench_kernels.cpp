// Parallel dense kernels against the serial reference versions, at the
// shapes a PPO update sees: a 64-wide hidden layer over a minibatch, and over
// a whole rollout batch when the buffer is prepared.

#include <benchmark/benchmark.h>

#include <vector>

#include "coaching/kernels.hpp"
#include "coaching/rng.hpp"

namespace k = coaching::kernels;

namespace {

constexpr std::size_t kWidth = 64;

struct Shapes {
  std::size_t batch;
  std::vector<double> x, w, b, y, dy, dx, dw, db;

  explicit Shapes(std::size_t n)
      : batch(n), x(n * kWidth), w(kWidth * kWidth), b(kWidth), y(n * kWidth), dy(n * kWidth),
        dx(n * kWidth), dw(kWidth * kWidth), db(kWidth) {
    coaching::CounterRng rng(1);
    for (auto* v : {&x, &w, &b, &dy}) {
      for (double& e : *v) e = rng.uniform(-1.0, 1.0);
    }
  }
};

template <bool Parallel>
void BM_DenseForward(benchmark::State& state) {
  Shapes s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::dense_forward(s.x, s.w, s.b, s.y, s.batch, kWidth, kWidth);
    } else {
      k::reference::dense_forward(s.x, s.w, s.b, s.y, s.batch, kWidth, kWidth);
    }
    benchmark::DoNotOptimize(s.y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.batch));
}

template <bool Parallel>
void BM_DenseBackward(benchmark::State& state) {
  Shapes s(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::dense_backward_input(s.dy, s.w, s.dx, s.batch, kWidth, kWidth);
      k::dense_backward_params(s.x, s.dy, s.dw, s.db, s.batch, kWidth, kWidth);
    } else {
      k::reference::dense_backward_input(s.dy, s.w, s.dx, s.batch, kWidth, kWidth);
      k::reference::dense_backward_params(s.x, s.dy, s.dw, s.db, s.batch, kWidth, kWidth);
    }
    benchmark::DoNotOptimize(s.dx.data());
    benchmark::DoNotOptimize(s.dw.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.batch));
}

}  // namespace

BENCHMARK(BM_DenseForward<false>)->Name("dense_forward/reference")->Arg(64)->Arg(4096)->Arg(20000);
BENCHMARK(BM_DenseForward<true>)->Name("dense_forward/parallel")->Arg(64)->Arg(4096)->Arg(20000);
BENCHMARK(BM_DenseBackward<false>)->Name("dense_backward/reference")->Arg(64)->Arg(4096)->Arg(20000);
BENCHMARK(BM_DenseBackward<true>)->Name("dense_backward/parallel")->Arg(64)->Arg(4096)->Arg(20000);

BENCHMARK_MAIN();
