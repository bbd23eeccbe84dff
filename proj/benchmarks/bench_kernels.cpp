#include <benchmark/benchmark.h>

#include "mpcc/metrics.hpp"
#include "mpcc/model.hpp"
#include "mpcc/ops.hpp"
#include "mpcc/rng.hpp"
#include "mpcc/ssm.hpp"
#include "mpcc/synth.hpp"
#include "mpcc/zorder.hpp"

using namespace mpcc;

namespace {

Tensor randn(Shape shape, Rng& rng, double s = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = s * rng.normal();
  return Tensor::from(std::move(shape), std::move(v));
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
  return c;
}

void BM_SelectiveScan(benchmark::State& state) {
  const std::size_t L = state.range(0), Di = 64, N = 16;
  Rng rng(1);
  const Tensor x = randn({1, L, Di}, rng);
  const Tensor delta = ops::softplus(randn({1, L, Di}, rng));
  const Tensor a = ops::neg(ops::exp(randn({Di, N}, rng, 0.5)));
  const Tensor b = randn({1, L, N}, rng), c = randn({1, L, N}, rng), skip = randn({Di}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(ssm::selective_scan(x, delta, a, b, c, skip).data().data());
  state.SetComplexityN(static_cast<benchmark::IterationCount>(L));
}
BENCHMARK(BM_SelectiveScan)->RangeMultiplier(2)->Range(128, 1024)->Complexity(benchmark::oN);

void BM_MambaBlock(benchmark::State& state) {
  const std::size_t G = state.range(0), D = 64;
  Rng rng(2);
  const auto params = ssm::init_block({D, 2 * D, 16, 4}, rng);
  const Tensor x = randn({1, G, D}, rng);
  autograd::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(ssm::mamba_block(x, params).data().data());
  state.SetComplexityN(static_cast<benchmark::IterationCount>(G));
}
BENCHMARK(BM_MambaBlock)->RangeMultiplier(2)->Range(64, 512)->Complexity(benchmark::oN);

void BM_Serialize(benchmark::State& state) {
  const PointCloud c = random_cloud(state.range(0), 3);
  const auto grid = zorder::own_grid(c);
  for (auto _ : state) benchmark::DoNotOptimize(zorder::serialize(c, grid).order.data());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Serialize)->RangeMultiplier(4)->Range(512, 32768)->Complexity(benchmark::oNLogN);

void BM_ChamferGrid(benchmark::State& state) {
  const PointCloud p = random_cloud(state.range(0), 4), q = random_cloud(state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::chamfer(p, q));
}
BENCHMARK(BM_ChamferGrid)->RangeMultiplier(4)->Range(512, 8192);

void BM_ChamferBrute(benchmark::State& state) {
  const PointCloud p = random_cloud(state.range(0), 4), q = random_cloud(state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::chamfer_brute(p, q));
}
BENCHMARK(BM_ChamferBrute)->RangeMultiplier(4)->Range(512, 2048);

void BM_ModelInfer(benchmark::State& state) {
  ModelConfig cfg;
  cfg.G = state.range(0);
  const Model model(cfg);
  const PointCloud c = synth::gen_pair({synth::Category::box, cfg.n_points, 7}, synth::DomainSpec::target_default()).partial;
  autograd::NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(model.forward_infer({&c}).completed.data());
}
BENCHMARK(BM_ModelInfer)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
