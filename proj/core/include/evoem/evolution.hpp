#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evoem/binary_state.hpp"
#include "evoem/dataset.hpp"
#include "evoem/params.hpp"
#include "evoem/rng.hpp"
#include "evoem/state_set.hpp"

namespace evoem {

enum class Selection { kFitParents, kRandParents };
enum class Mutation { kRandFlips, kSparseFlips };

// With crossover and sparseflips combined, each child either gets per-bit
// sparse flips instead of the single random flip (kReplace) or after it
// (kAugment).
enum class CrossSparseMode { kReplace, kAugment };

// Genetic operators of the variational E-step. Named by hyphenated tags such
// as "fitparents-cross-sparseflips" or "randparents-randflips".
struct EaConfig {
  Selection selection = Selection::kFitParents;
  bool crossover = false;
  Mutation mutation = Mutation::kRandFlips;
  std::size_t n_parents = 5;      // N_p
  std::size_t n_mutations = 4;    // N_m, copies per parent without crossover
  std::size_t n_generations = 2;  // N_g
  double p_bf = 0.0;              // mean bitflip probability for sparseflips; <= 0 means 1/H
  CrossSparseMode cross_sparse = CrossSparseMode::kReplace;

  std::string tag() const;
  // Sets selection / crossover / mutation from a tag, leaving counts alone.
  void apply_tag(std::string_view tag);
  static EaConfig from_tag(std::string_view tag);

  // Children per generation: N_p (N_p - 1) with crossover, N_p N_m without.
  std::size_t children_per_generation() const;

  // Throws ConfigError unless 1 <= N_p <= S, 1 <= N_m <= H, N_g >= 1 and
  // (crossover implies H >= 2).
  void validate(std::size_t S, std::size_t H) const;
};

// Fitness f_i = lpj_i + |2 min_j lpj_j| + kFitnessFloor. States at the
// kLargeNeg sentinel are left out of the minimum and get the floor value.
inline constexpr double kFitnessFloor = 1e-8;
std::vector<double> fitness(std::span<const double> lpj);

// Indices of n distinct parents: fitness-proportional (fitparents) or
// uniform (randparents) sampling without replacement.
std::vector<std::size_t> select_parents(std::span<const double> lpj, std::size_t n, Selection mode, Rng& rng);

// Single-point crossover of every unordered parent pair: one crossover point
// c in {1..H-1} per pair, both suffix swaps kept, N_p (N_p - 1) children.
std::vector<BinaryState> crossover(std::span<const BinaryState> parents, Rng& rng);

// Children of one pair at a fixed crossover point c.
std::pair<BinaryState, BinaryState> crossover_pair(const BinaryState& a, const BinaryState& b, std::size_t c);

struct FlipProbabilities {
  double p0 = 0.0;  // flip probability of a 0 bit
  double p1 = 0.0;  // flip probability of a 1 bit
};

// Sparsity-driven flip probabilities: mean flip probability p_bf and expected
// on-bit count target after mutation, for a state with `active` on bits.
FlipProbabilities sparseflip_probabilities(std::size_t H, std::size_t active, double p_bf, double target);

void flip_random_bit(BinaryState& s, Rng& rng);
void sparse_flip(BinaryState& s, double p_bf, double target, Rng& rng);

// Applies the configured mutation to every child. after_crossover selects the
// crossover path (single random flip unless sparseflips is configured).
void mutate(std::vector<BinaryState>& children, const EaConfig& config, double target, Rng& rng,
            bool after_crossover);

struct EvolveResult {
  CandidateSet candidates;      // unique new states (not in the input set), lpj evaluated
  std::size_t generated = 0;    // offspring produced before deduplication
  std::size_t evaluations = 0;  // lpj evaluations performed
};

// Runs N_g generations of selection, crossover and mutation starting from the
// set. lpj(state) evaluates the log-pseudo-joint of a state for this datapoint.
template <class Lpj>
EvolveResult evolve_with(const LatentStateSet& set, Lpj&& lpj, const EaConfig& config, double target, Rng& rng);

EvolveResult evolve(const LatentStateSet& set, const ModelParams& params, const Datapoint& dp, const EaConfig& config,
                    Rng& rng);

// Implementation -----------------------------------------------------------

template <class Lpj>
EvolveResult evolve_with(const LatentStateSet& set, Lpj&& lpj, const EaConfig& config, double target, Rng& rng) {
  const std::size_t H = set.H();
  EvolveResult result{CandidateSet(H), 0, 0};

  std::vector<BinaryState> population;
  std::vector<double> population_lpj;
  population.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    population.emplace_back(set.state(i));
    population_lpj.push_back(set.lpj(i));
  }

  std::vector<BinaryState> parents;
  std::vector<BinaryState> children;
  for (std::size_t g = 0; g < config.n_generations && !population.empty(); ++g) {
    const std::size_t np = std::min(config.n_parents, population.size());
    const auto picked = select_parents(population_lpj, np, config.selection, rng);
    parents.clear();
    for (std::size_t i : picked) parents.push_back(population[i]);

    if (config.crossover && parents.size() >= 2 && H >= 2) {
      children = crossover(parents, rng);
      mutate(children, config, target, rng, true);
    } else {
      children.clear();
      for (const auto& p : parents)
        for (std::size_t m = 0; m < config.n_mutations; ++m) children.push_back(p);
      mutate(children, config, target, rng, false);
    }
    result.generated += children.size();

    // Next population: unique children with their lpj.
    LatentStateSet generation(H, children.size());
    for (const auto& child : children) {
      if (generation.contains(child)) continue;
      double value;
      if (const std::size_t at = set.find(child); at < set.size()) {
        value = set.lpj(at);
      } else if (const std::size_t c = result.candidates.find(child); c < result.candidates.size()) {
        value = result.candidates.lpj(c);
      } else {
        value = lpj(StateView(child));
        ++result.evaluations;
        result.candidates.insert(child, value);
      }
      generation.insert(child, value);
    }
    population.clear();
    population_lpj.clear();
    for (std::size_t i = 0; i < generation.size(); ++i) {
      population.emplace_back(generation.state(i));
      population_lpj.push_back(generation.lpj(i));
    }
  }
  return result;
}

}  // namespace evoem
