#include <random>

#include <benchmark/benchmark.h>

#include "hack/assignment.hpp"
#include "hack/density.hpp"
#include "hack/nn.hpp"
#include "hack/packing.hpp"

using namespace hack;

namespace {

std::vector<BallPoint> points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  std::vector<BallPoint> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(u(rng), u(rng));
  return out;
}

void BM_HypDistance(benchmark::State& state) {
  const auto pts = points(1024, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(hyp_distance(pts[i & 1023], pts[(i * 7 + 3) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_HypDistance);

void BM_Hungarian(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  CostMatrix c(b);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) c(i, j) = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(hungarian(c).total);
}
BENCHMARK(BM_Hungarian)->Arg(16)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_PackingEnergy(benchmark::State& state) {
  PackingSpec spec;
  spec.n = static_cast<std::size_t>(state.range(0));
  const auto pts = points(spec.n, 3);
  const double r_n = per_particle_radius(spec, BallParams::from_curvature(1.0));
  std::vector<Vec2> grad(spec.n);
  for (auto _ : state) benchmark::DoNotOptimize(packing_energy(pts, r_n, spec, grad).total());
}
BENCHMARK(BM_PackingEnergy)->Arg(100)->Arg(2000)->Unit(benchmark::kMicrosecond);

void BM_Pack100(benchmark::State& state) {
  PackingSpec spec;
  for (auto _ : state) benchmark::DoNotOptimize(pack(spec, BallParams::from_curvature(1.0)).final_loss);
}
BENCHMARK(BM_Pack100)->Unit(benchmark::kMillisecond);

void BM_EncoderLossGrad(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const EncoderParams p = EncoderParams::init(MlpSpec{{dim, 256, 64, 2}, 4});
  const Eigen::MatrixXd xs = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(dim), 128).cwiseAbs();
  const auto targets = points(128, 5);
  const BallParams ball = BallParams::from_curvature(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(hyperbolic_loss_grad(p, xs, targets, ball, 0.76).loss);
}
BENCHMARK(BM_EncoderLossGrad)->Arg(256)->Arg(784)->Unit(benchmark::kMicrosecond);

void BM_KnnDensity(benchmark::State& state) {
  const auto pts = points(static_cast<std::size_t>(state.range(0)), 6);
  for (auto _ : state) benchmark::DoNotOptimize(knn_density(pts, DensitySpec{}).density.data());
}
BENCHMARK(BM_KnnDensity)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
