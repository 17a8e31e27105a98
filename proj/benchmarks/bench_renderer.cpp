#include <benchmark/benchmark.h>

#include "splatfit/harness.hpp"
#include "splatfit/renderer.hpp"

using namespace splatfit;

static void ForwardRender(benchmark::State& state) {
  const GaussianSet set =
      random_gaussian_set(7, static_cast<int>(state.range(0)));
  const Camera cam = gradcheck_camera(128);
  RenderConfig cfg;
  for (auto _ : state) {
    RenderedImage img = render(set, cam, cfg);
    benchmark::DoNotOptimize(img.rgb.data.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(ForwardRender)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

static void BackwardRender(benchmark::State& state) {
  const GaussianSet set =
      random_gaussian_set(7, static_cast<int>(state.range(0)));
  const Camera cam = gradcheck_camera(128);
  RenderConfig cfg;
  const PreparedView prepared = prepare_view(set, cam, cfg);
  const Image grad_rgb(128, 128, 3, 1e-3), grad_alpha(128, 128, 1, 1e-3);
  for (auto _ : state) {
    GaussianGrads grads = render_backward_prepared(prepared, grad_rgb, grad_alpha);
    benchmark::DoNotOptimize(grads.per_gaussian.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BackwardRender)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

static void PrepareView(benchmark::State& state) {
  const GaussianSet set =
      random_gaussian_set(7, static_cast<int>(state.range(0)));
  const Camera cam = gradcheck_camera(128);
  RenderConfig cfg;
  for (auto _ : state) {
    PreparedView prepared = prepare_view(set, cam, cfg);
    benchmark::DoNotOptimize(prepared.splats.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(PrepareView)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

BENCHMARK_MAIN();
