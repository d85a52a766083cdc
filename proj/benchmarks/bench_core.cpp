#include <benchmark/benchmark.h>

#include "optinet/structures.hpp"
#include "optinet/train.hpp"
#include "optinet/verify.hpp"

using namespace optinet;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngStream rng(1);
  const Matrix a = random_matrix(n, n, rng);
  const Matrix b = random_matrix(n, 64, rng);
  Matrix out(n, 64);
  for (auto _ : state) {
    gemm(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * 64));
}
BENCHMARK(BM_Gemm)->Arg(8)->Arg(32)->Arg(128);

void BM_Sigmoid(benchmark::State& state) {
  RngStream rng(2);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  for (double& v : x) v = 4 * rng.normal();
  std::vector<double> y(x.size());
  const Activation act = Activation::sigmoid();
  for (auto _ : state) {
    act.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Sigmoid)->Arg(2048);

void BM_SymEig(benchmark::State& state) {
  RngStream rng(3);
  const Matrix w = random_spd(static_cast<std::size_t>(state.range(0)), 0.05, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(sym_eig(w));
}
BENCHMARK(BM_SymEig)->Arg(4)->Arg(16)->Arg(32);

StructureSpec bench_spec(StructureKind kind, std::size_t depth) {
  StructureSpec s;
  s.kind = kind;
  s.depth = depth;
  s.width = 32;
  return s;
}

void BM_ForwardBackward(benchmark::State& state) {
  const auto kind = static_cast<StructureKind>(state.range(0));
  const StructureSpec s = bench_spec(kind, static_cast<std::size_t>(state.range(1)));
  RngStream rng(4);
  const StructureParams p = init_params(s, rng);
  const Matrix x = random_matrix(32, 64, rng);
  const Matrix f = random_matrix(32, 64, rng);
  for (auto _ : state) benchmark::DoNotOptimize(mse_gradient(s, p, x, f));
  state.SetLabel(std::string(structure_name(kind)));
}
BENCHMARK(BM_ForwardBackward)
    ->ArgsProduct({{static_cast<long>(StructureKind::feedforward), static_cast<long>(StructureKind::hb_net),
                    static_cast<long>(StructureKind::agd_net), static_cast<long>(StructureKind::agd2_net),
                    static_cast<long>(StructureKind::admm_net)},
                   {10, 30}});

void BM_Race(benchmark::State& state) {
  const double kappa = static_cast<double>(state.range(0));
  for (auto _ : state) {
    RngStream rng(5);
    benchmark::DoNotOptimize(convergence_race(kappa, 32, 1e-6, rng));
  }
}
BENCHMARK(BM_Race)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  retain_freed_memory();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
