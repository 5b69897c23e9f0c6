#include "msdelay/cox.hpp"
#include "msdelay/nonparametric.hpp"
#include "msdelay/simulate.hpp"

#include <benchmark/benchmark.h>

using namespace msdelay;

namespace {

IntensitySpec spec(int missions) {
  IntensitySpec s;
  s.n_missions = missions;
  s.seed = 7;
  s.initial = {0.8, 0.15, 0.05};
  auto constant = [](double r) {
    Baseline b;
    b.rate = r;
    return b;
  };
  s.transitions = {{{0, 1}, constant(0.03), {{"boarded", 0.4}, {"adverse_weather", 0.2}}, {}},
                   {{0, 2}, constant(0.005), {}, {}},
                   {{1, 0}, constant(0.04), {}, {}},
                   {{1, 2}, constant(0.02), {{"boarded", 0.2}}, {}},
                   {{2, 1}, constant(0.03), {}, {}},
                   {{2, 0}, constant(0.005), {}, {}}};
  return s;
}

const Simulation& simulation(int missions) {
  static std::map<int, Simulation> cache;
  auto it = cache.find(missions);
  if (it == cache.end()) it = cache.emplace(missions, simulate(spec(missions))).first;
  return it->second;
}

void BM_BuildEpisodes(benchmark::State& state) {
  const auto traj = panel_trajectories(simulation(static_cast<int>(state.range(0))));
  const auto space = StateSpace::three_state();
  for (auto _ : state) benchmark::DoNotOptimize(build_episodes(traj, space));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(traj.size()));
}
BENCHMARK(BM_BuildEpisodes)->Arg(500)->Arg(4000);

void BM_NelsonAalen(benchmark::State& state) {
  const auto eps = latent_episodes(simulation(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(nelson_aalen(eps, {0, 1}));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(eps.size()));
}
BENCHMARK(BM_NelsonAalen)->Arg(500)->Arg(4000);

void BM_AalenJohansen(benchmark::State& state) {
  const auto eps = latent_episodes(simulation(static_cast<int>(state.range(0))));
  const auto hs = estimate_hazards(eps, StateSpace::three_state(), {});
  for (auto _ : state) benchmark::DoNotOptimize(aalen_johansen(hs, 0.0, 130.0));
}
BENCHMARK(BM_AalenJohansen)->Arg(500)->Arg(4000);

void BM_FitCox(benchmark::State& state) {
  const auto eps = latent_episodes(simulation(static_cast<int>(state.range(0))));
  const auto model = temporal_model();
  for (auto _ : state) benchmark::DoNotOptimize(fit_cox(eps, {0, 1}, model));
}
BENCHMARK(BM_FitCox)->Arg(500)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
