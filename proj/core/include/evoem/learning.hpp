#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "evoem/dataset.hpp"
#include "evoem/evolution.hpp"
#include "evoem/params.hpp"
#include "evoem/rng.hpp"
#include "evoem/state_set.hpp"

namespace evoem {

// Settings of the outer EM loop.
struct EemConfig {
  std::size_t S = 20;               // states per datapoint
  std::size_t iterations = 300;     // EM iterations
  std::uint64_t seed = 0;           // master seed
  std::size_t parallel_degree = 1;  // worker threads; 0 = hardware concurrency
  std::size_t log_every = 1;        // trace stride; the last iteration is always logged
  bool early_stop = false;          // stop once |dF/N| < early_stop_tol for early_stop_window iterations
  double early_stop_tol = 1e-8;
  std::size_t early_stop_window = 10;
  MStepOptions mstep;

  void validate() const;
};

struct TracePoint {
  std::size_t iteration = 0;
  double free_energy_per_datapoint = 0.0;
};

// Free energy per datapoint after each logged EM iteration.
class FreeEnergyTrace {
 public:
  // Throws Error unless iteration exceeds the last recorded one.
  void push(std::size_t iteration, double value);
  const std::vector<TracePoint>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const TracePoint& back() const { return points_.back(); }
  void clear() noexcept { points_.clear(); }

  // CSV with header "iteration,free_energy_per_datapoint"; values printed
  // with 17 significant digits.
  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;

 private:
  std::vector<TracePoint> points_;
};

// Per-iteration diagnostics.
struct IterationReport {
  std::size_t iteration = 0;
  double free_energy_before_estep = 0.0;  // F/N with the sets entering the E-step, parameters Theta_t
  double free_energy_after_estep = 0.0;   // F/N after update_set, still Theta_t
  double min_estep_gain = 0.0;            // min over n of the per-datapoint bound change in the E-step
  double free_energy = 0.0;               // F/N after the M-step with refreshed lpj (Theta_{t+1})
  std::size_t replaced = 0;               // states exchanged by update_set, summed over datapoints
  std::size_t evaluations = 0;            // lpj evaluations spent by the evolutionary search
  MStepReport mstep;
};

// The complete mutable learning state; everything a checkpoint stores.
struct EemState {
  ModelParams params;
  StateSetCollection sets;
  FreeEnergyTrace trace;
  std::size_t iteration = 0;  // completed EM iterations
  std::uint64_t seed = 0;
};

struct EemCallbacks {
  std::function<void(const IterationReport&, const EemState&)> on_iteration;
  std::function<void(const std::string&)> on_warning;
};

// Model-specific initial parameters from the data (masked entries ignored).
ModelParams init_params(ModelKind kind, const DataSet& data, std::size_t H, Rng& rng);
ModelParams init_params(ModelKind kind, const DataSet& data, std::size_t H, std::uint64_t seed);

// S unique states per datapoint with bits drawn from Bernoulli(density)
// (density <= 0 means 1/H). Resamples duplicates a bounded number of times,
// then fills up by enumerating states in increasing binary order. Each set
// uses its own stream derived from (seed, n). lpj caches are left at zero.
StateSetCollection init_state_sets(std::size_t n, std::size_t H, std::size_t S, std::uint64_t seed,
                                   double density = 0.0);

// Builds the starting state (state sets with evaluated lpj) for given
// initial parameters.
EemState eem_start(const DataSet& data, ModelParams params, const EemConfig& eem);

// Runs one EM iteration: per-datapoint evolve + update_set and accumulation of
// truncated expectations under Theta_t, then the M-step, then a refresh of
// every cached lpj under Theta_{t+1}.
IterationReport eem_step(EemState& state, const DataSet& data, const EemConfig& eem, const EaConfig& ea);

// Continues until state.iteration == eem.iterations (or early stop). Returns
// whether the early-stop criterion ended the run.
bool eem_continue(EemState& state, const DataSet& data, const EemConfig& eem, const EaConfig& ea,
                  const EemCallbacks& callbacks = {});

// init_params + eem_start + eem_continue.
EemState eem_fit(const DataSet& data, ModelKind kind, std::size_t H, const EemConfig& eem, const EaConfig& ea,
                 const EemCallbacks& callbacks = {});

// Worker count for a requested parallel degree (0 = hardware concurrency).
std::size_t resolve_threads(std::size_t requested);

}  // namespace evoem
