#include <benchmark/benchmark.h>

#include <random>

#include "unroll/ensemble.hpp"
#include "unroll/flow.hpp"
#include "unroll/interp.hpp"
#include "unroll/merge_net.hpp"
#include "unroll/patch_index.hpp"
#include "unroll/refine.hpp"
#include "unroll/synth.hpp"

using namespace unroll;

namespace {

PairedSample sample(int size, int frames) {
  static const PairedSample cached = make_pair(random_scene(MotionFamily::affine, 1, {size, size, frames, 3}), 1, false);
  return cached;
}

void BM_SampleRs(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const SpaceTimeVolume vol = render_volume(random_scene(MotionFamily::rotation, 2, {size, size, 2, 3}), 2);
  for (auto _ : state) benchmark::DoNotOptimize(sample_rs(vol, 1));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_SampleRs)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FlowPair(benchmark::State& state) {
  const PairedSample p = sample(128, 4);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_flow_pair(p.rs.frames[0], p.rs.frames[1]));
}
BENCHMARK(BM_FlowPair)->Unit(benchmark::kMillisecond);

void BM_ComposePair(benchmark::State& state) {
  const PairedSample p = sample(128, 4);
  const BuiltinInterpolator interp;
  const auto pair = interp.prepare(p.rs.frames[0], p.rs.frames[1], {0, 1, {}});
  for (auto _ : state) benchmark::DoNotOptimize(compose_pair(*pair, 128, 128, 3, 128, Augmentation{}));
}
BENCHMARK(BM_ComposePair)->Unit(benchmark::kMillisecond);

void BM_MergeForward(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  MergeWeights w = zero_weights(3, 64);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-0.05f, 0.05f);
  for (ConvLayer& l : w.layers)
    for (float& v : l.kernel) v = u(rng);
  const MergeNet net(w);
  std::vector<Image> props;
  for (int i = 0; i < 16; ++i) {
    Image img(size, size, 3);
    for (float& v : img.pixels()) v = 0.5f + u(rng);
    props.push_back(img);
  }
  for (auto _ : state) benchmark::DoNotOptimize(net.residual(props));
  state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_MergeForward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_PatchIndexBuild(benchmark::State& state) {
  const PairedSample p = sample(128, 4);
  const PatchSet set(clip_luma(p.rs));
  for (auto _ : state) benchmark::DoNotOptimize(PatchIndex(set).distinct());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(set.size()));
}
BENCHMARK(BM_PatchIndexBuild)->Unit(benchmark::kMillisecond);

void BM_PatchIndexQuery(benchmark::State& state) {
  const double eps = static_cast<double>(state.range(0)) / 100.0;
  const PairedSample p = sample(128, 4);
  const PatchIndex index{PatchSet(clip_luma(p.rs))};
  const PatchSet queries(clip_luma(p.gs));
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.nearest(queries.patch(q), eps));
    q = (q + 97) % queries.size();
  }
  state.SetLabel(eps == 0.0 ? "exact" : "approx");
}
BENCHMARK(BM_PatchIndexQuery)->Arg(0)->Arg(5);

void BM_RefineIteration(benchmark::State& state) {
  const PairedSample p = make_pair(random_scene(MotionFamily::translation, 4, {64, 64, 6, 3}), 4, false);
  RefineConfig cfg;
  cfg.iterations = 1;
  for (auto _ : state) benchmark::DoNotOptimize(refine(p.gs, p.rs, cfg));
}
BENCHMARK(BM_RefineIteration)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
