#include <benchmark/benchmark.h>

#include "evoem/evolution.hpp"
#include "evoem/learning.hpp"
#include "evoem/model.hpp"
#include "evoem/state_set.hpp"
#include "evoem/synthetic.hpp"

namespace {

evoem::ModelKind kind_arg(int64_t k) { return static_cast<evoem::ModelKind>(k); }

// Random parameters for a model of H latents over D observables.
evoem::ModelParams bench_params(evoem::ModelKind kind, std::size_t H, std::size_t D) {
  auto rng = evoem::make_stream(1, evoem::StreamTag::kInitParams);
  evoem::RowMatrix Y(64, static_cast<Eigen::Index>(D));
  for (Eigen::Index i = 0; i < Y.size(); ++i)
    Y.data()[i] = kind == evoem::ModelKind::kNoisyOr ? (evoem::uniform01(rng) < 0.2 ? 1.0 : 0.0)
                                                     : evoem::standard_normal(rng);
  return evoem::init_params(kind, evoem::DataSet(Y), H, rng);
}

evoem::BinaryState sparse_state(std::size_t H, std::size_t active, evoem::Rng& rng) {
  evoem::BinaryState s(H);
  while (s.count() < active) s.set(evoem::uniform_index(rng, H));
  return s;
}

// lpj of one state with `range(2)` active units on a D=64, H=range(1) model.
void BM_Lpj(benchmark::State& state) {
  const auto kind = kind_arg(state.range(0));
  const auto H = static_cast<std::size_t>(state.range(1));
  const auto active = static_cast<std::size_t>(state.range(2));
  const std::size_t D = 64;
  const auto params = bench_params(kind, H, D);
  auto rng = evoem::make_stream(2, evoem::StreamTag::kSample);
  const auto drawn = evoem::sample(params, 1, rng);
  std::vector<evoem::BinaryState> states;
  for (int i = 0; i < 64; ++i) states.push_back(sparse_state(H, active, rng));
  evoem::with_model(params, [&](const auto& model) {
    std::size_t i = 0;
    for (auto _ : state) {
      benchmark::DoNotOptimize(model.lpj(states[i++ & 63], drawn.data.row(0)));
    }
  });
  state.SetLabel(std::string(evoem::to_string(kind)));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Lpj)
    ->ArgNames({"model", "H", "active"})
    ->ArgsProduct({{0, 1, 2}, {64, 256}, {2, 8}});

// One call of the evolutionary search (N_g generations) on a K-set of S=60
// states with a cheap stand-in lpj, isolating the genetic operators.
void BM_Evolve(benchmark::State& state) {
  const auto H = static_cast<std::size_t>(state.range(0));
  const bool cross = state.range(1) != 0;
  auto ea = evoem::EaConfig::from_tag(cross ? "fitparents-cross-sparseflips" : "fitparents-randflips");
  ea.n_parents = 6;
  ea.n_mutations = 5;
  auto rng = evoem::make_stream(3, evoem::StreamTag::kEvolve);
  evoem::LatentStateSet set(H);
  while (set.size() < 60) {
    const auto s = sparse_state(H, 1 + evoem::uniform_index(rng, 6), rng);
    set.insert(s, -static_cast<double>(s.count()));
  }
  auto lpj = [](evoem::StateView s) { return -static_cast<double>(s.count()); };
  for (auto _ : state) {
    auto out = evoem::evolve_with(set, lpj, ea, 3.0, rng);
    benchmark::DoNotOptimize(out.candidates.size());
  }
  state.SetLabel(ea.tag());
}
BENCHMARK(BM_Evolve)->ArgNames({"H", "cross"})->ArgsProduct({{64, 512}, {0, 1}});

// One full EM iteration (E-step for every datapoint plus M-step) on bars data.
void BM_EemStep(benchmark::State& state) {
  const auto kind = kind_arg(state.range(0));
  auto spec = evoem::BarsSpec::defaults(kind);
  auto rng = evoem::make_stream(4, evoem::StreamTag::kBars);
  const auto bars = evoem::generate_bars_dataset(spec, 1000, rng);
  evoem::EemConfig eem;
  eem.S = 20;
  const auto ea = evoem::EaConfig::from_tag("fitparents-cross-sparseflips");
  auto start = evoem::eem_start(bars.data, evoem::init_params(kind, bars.data, 10, 5), eem);
  for (auto _ : state) {
    state.PauseTiming();
    auto s = start;
    state.ResumeTiming();
    benchmark::DoNotOptimize(evoem::eem_step(s, bars.data, eem, ea).free_energy);
  }
  state.SetLabel(std::string(evoem::to_string(kind)));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_EemStep)->ArgName("model")->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
