#include <benchmark/benchmark.h>

#include <random>

#include "splatfit/kdtree.hpp"
#include "splatfit/metrics.hpp"
#include "splatfit/scene.hpp"

using namespace splatfit;

namespace {

PointCloud cloud_of(int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> u(-1.0, 1.0);
  PointCloud c;
  c.points.resize(n);
  for (Vec3& p : c.points) p = {u(rng), u(rng), u(rng)};
  return c;
}

}  // namespace

static void ChamferIndexed(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const PointCloud a = cloud_of(n, 1), b = cloud_of(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(chamfer_cm(a, b));
  state.SetComplexityN(n);
}
BENCHMARK(ChamferIndexed)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

static void KdTreeBuild(benchmark::State& state) {
  const PointCloud a = cloud_of(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) {
    KdTree3 tree(a.points);
    benchmark::DoNotOptimize(&tree);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(KdTreeBuild)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

static void SceneSdfGrid(benchmark::State& state) {
  const CapsuleScene scene = default_humanoid(rest_pose_skeleton());
  for (auto _ : state) {
    Real acc = 0;
    const int n = 32;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        acc += scene_sdf(scene, {i / 16.0 - 1.0, j / 16.0 - 1.0, 0.2}).distance;
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(SceneSdfGrid);

static void SsimImage(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  Image a(128, 128, 3), b(128, 128, 3);
  for (Real& v : a.data) v = u(rng);
  for (Real& v : b.data) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(SsimImage);

BENCHMARK_MAIN();
