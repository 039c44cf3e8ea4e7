#include <benchmark/benchmark.h>

#include <random>

#include "xtal/backbone.hpp"
#include "xtal/io.hpp"
#include "xtal/periodic_graph.hpp"
#include "xtal/sampler.hpp"
#include "xtal/verify.hpp"

using namespace xtal;

namespace {

Material perovskite() { return synth_perovskite_corpus(1, 0.02, 1).front(); }

BackboneConfig bench_backbone(int hidden) {
  BackboneConfig c;
  c.layer_count = 3;
  c.hidden_size = hidden;
  c.rbf_count = 16;
  c.cutoff = 4.5;
  c.noise_level_count = 5;
  return c;
}

}  // namespace

// Range: cutoff in tenths of an angstrom.
static void BM_BuildMultigraph(benchmark::State& state) {
  const Material m = perovskite();
  const double cutoff = state.range(0) / 10.0;
  std::size_t edges = 0;
  for (auto _ : state) {
    const MultiGraph g = build_multigraph(m, cutoff);
    edges = g.edge_count();
    benchmark::DoNotOptimize(edges);
  }
  state.counters["edges"] = static_cast<double>(edges);
}
BENCHMARK(BM_BuildMultigraph)->Arg(45)->Arg(60)->Arg(80);

static void BM_BuildMultigraphRandom(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const Material m = verify::random_material(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_multigraph(m, 6.0).edge_count());
}
BENCHMARK(BM_BuildMultigraphRandom)->Arg(5)->Arg(20);

// Range: hidden width.
static void BM_BackboneEdgeScores(benchmark::State& state) {
  const Material m = perovskite();
  const MultiGraph g = build_multigraph(m, 4.5);
  const Backbone net(bench_backbone(static_cast<int>(state.range(0))), "score.");
  const Parameters p = verify::randomized_parameters(net, 4);
  for (auto _ : state) benchmark::DoNotOptimize(edge_scores(net, p, g, m.atom_types(), 3).values);
  state.counters["edges"] = static_cast<double>(g.edge_count());
}
BENCHMARK(BM_BackboneEdgeScores)->Arg(32)->Arg(128);

// One noise level of annealed Langevin with a network score; range: steps.
static void BM_LangevinLevel(benchmark::State& state) {
  const Material m = perovskite();
  const Backbone net(bench_backbone(32), "score.");
  const Parameters p = verify::randomized_parameters(net, 5);
  const ScoreModel model{net, NoiseSchedule::geometric(1.0, 0.1, 5), EdgeStd{{0.8, 0.5, 0.3, 0.2, 0.1}},
                         ScoreMatchingMode::Distance, 4.5};
  const ScoreSource score = network_score_source(model, p);
  SamplerConfig c;
  c.schedule = NoiseSchedule({0.1});
  c.steps_per_level = static_cast<int>(state.range(0));
  std::mt19937_64 rng(6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(langevin_generate(m.atom_types(), m.lattice(), c, score, rng).coords);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LangevinLevel)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
