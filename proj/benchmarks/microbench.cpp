#include <benchmark/benchmark.h>

#include <random>

#include "dparse/autodiff.hpp"
#include "dparse/decode.hpp"
#include "dparse/model.hpp"
#include "dparse/tensor.hpp"

using namespace dparse;

namespace {

Tensor random_matrix(int r, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t({r, c});
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

void BM_matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  Tensor a = random_matrix(n, n, rng), b = random_matrix(n, n, rng);
  for (auto _ : state) {
    Tensor c = matmul(a, b);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2ll * n * n * n);
}

void BM_lstm_step(benchmark::State& state) {
  // one batched LSTM step at the full model's hidden size
  const int batch = static_cast<int>(state.range(0));
  const int in = 400, hidden = 200;
  std::mt19937_64 rng(2);
  std::vector<ParamTensor> w;
  w.emplace_back("wx", random_matrix(in, 4 * hidden, rng));
  w.emplace_back("wh", random_matrix(hidden, 4 * hidden, rng));
  w.emplace_back("b", random_matrix(1, 4 * hidden, rng));
  Tensor x = random_matrix(batch, in, rng);
  Tensor h0 = random_matrix(batch, hidden, rng);
  Tensor c0 = random_matrix(batch, hidden, rng);
  for (auto _ : state) {
    Graph g;
    LstmWeights lw{g.param(w[0]), g.param(w[1]), g.param(w[2])};
    auto [h, c] = lstm_cell(g, g.input(x), g.input(h0), g.input(c0), lw);
    benchmark::DoNotOptimize(g.value(h).data());
    benchmark::DoNotOptimize(g.value(c).data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}

void BM_chu_liu_edmonds(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  Tensor scores = random_matrix(n, n + 1, rng);
  for (auto _ : state) {
    auto heads = chu_liu_edmonds(scores, true);
    benchmark::DoNotOptimize(heads.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(BM_matmul)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_lstm_step)->Arg(1)->Arg(32)->Arg(256);
BENCHMARK(BM_chu_liu_edmonds)->Arg(10)->Arg(40)->Arg(160);

BENCHMARK_MAIN();
