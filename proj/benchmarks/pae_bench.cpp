#include <benchmark/benchmark.h>

#include <vector>

#include "pae/models.hpp"
#include "pae/refine.hpp"
#include "pae/rng.hpp"
#include "pae/scene.hpp"

namespace {

using namespace pae;

const sim::SceneSpec& scene() {
  static const sim::SceneSpec s = sim::generate_scene(0, 48, 10.0);
  return s;
}

const std::vector<Pose>& poses() {
  static const std::vector<Pose> p = sim::sample_poses(scene(), 400, 1, sim::SamplingMode::kOrbitShell);
  return p;
}

const refine::PoseDatabase& database() {
  static const refine::PoseDatabase db(poses(), std::vector<int>(poses().size(), 0));
  return db;
}

const models::PaeModel& pae_model() {
  static const models::PaeModel m = [] {
    models::PaeConfig c;
    c.fourier_levels = 3;
    c.position_scale = 25.0;
    return models::PaeModel(c, 1);
  }();
  return m;
}

void BM_Knn(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  SplitMix64 rng(2);
  for (auto _ : state) {
    const Vec3 q{rng.uniform(15, 25), rng.uniform(-10, 10), rng.uniform(2, 12)};
    benchmark::DoNotOptimize(database().knn(q, k));
  }
}
BENCHMARK(BM_Knn)->Arg(3)->Arg(10);

void BM_Render(benchmark::State& state) {
  const auto res = static_cast<std::size_t>(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sim::render(scene(), poses()[i++ % poses().size()], res));
}
BENCHMARK(BM_Render)->Arg(32)->Arg(64);

void BM_AprForward(benchmark::State& state) {
  const models::AprModel apr(models::AprConfig{}, 1);
  const sim::Image img = sim::render(scene(), poses()[0], 32);
  for (auto _ : state) benchmark::DoNotOptimize(apr.forward(img.pixels));
}
BENCHMARK(BM_AprForward)->Unit(benchmark::kMicrosecond);

void BM_PaeForward(benchmark::State& state) {
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(pae_model().forward(poses()[i++ % poses().size()]));
}
BENCHMARK(BM_PaeForward)->Unit(benchmark::kMicrosecond);

// Neighbour retrieval, encoding and the weight solve for one query.
void BM_RefinePosition(benchmark::State& state) {
  refine::RefineConfig cfg;
  cfg.closed_form = state.range(0) != 0;
  std::size_t i = 0;
  for (auto _ : state) {
    const Pose& p = poses()[i++ % poses().size()];
    const Vec3 guess = p.x + Vec3{0.5, -0.3, 0.2};
    const auto nb = database().knn(guess, cfg.k);
    benchmark::DoNotOptimize(
        refine::refine_position(pae_model().forward(Pose::make(guess, p.q)), nb, database(), pae_model(), cfg));
  }
}
BENCHMARK(BM_RefinePosition)->Arg(0)->Arg(1)->ArgNames({"closed_form"})->Unit(benchmark::kMillisecond);

void BM_SolveAffineWeights(benchmark::State& state) {
  SplitMix64 rng(3);
  refine::Encodings cols(3, std::vector<double>(128));
  for (auto& c : cols) {
    for (double& v : c) v = rng.normal();
  }
  std::vector<double> z(128);
  for (double& v : z) v = rng.normal();
  refine::RefineConfig cfg;
  cfg.closed_form = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(refine::solve_affine_weights(z, cols, cfg));
}
BENCHMARK(BM_SolveAffineWeights)->Arg(0)->Arg(1)->ArgNames({"closed_form"})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
