#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "evoem/binary_state.hpp"
#include "evoem/dataset.hpp"
#include "evoem/error.hpp"
#include "evoem/params.hpp"

namespace evoem {

// A set of unique binary states with cached log-pseudo-joints: the truncated
// posterior support K(n) of one datapoint. States are stored bit-packed and
// contiguous; membership is answered through an open-addressing hash index.
class LatentStateSet {
 public:
  LatentStateSet() = default;
  explicit LatentStateSet(std::size_t H, std::size_t reserve = 0);

  std::size_t H() const noexcept { return H_; }
  std::size_t size() const noexcept { return lpj_.size(); }
  bool empty() const noexcept { return lpj_.empty(); }
  std::size_t words_per_state() const noexcept { return words_; }

  StateView state(std::size_t i) const noexcept { return {{bits_.data() + i * words_, words_}, H_}; }
  BinaryState copy_state(std::size_t i) const { return BinaryState(state(i)); }

  double lpj(std::size_t i) const noexcept { return lpj_[i]; }
  std::span<const double> lpj() const noexcept { return lpj_; }
  std::span<double> lpj_mutable() noexcept { return lpj_; }

  bool contains(StateView s) const noexcept;
  // Index of s, or size() when absent.
  std::size_t find(StateView s) const noexcept;
  // Inserts s unless already present; returns whether it was inserted.
  bool insert(StateView s, double lpj = 0.0);
  void clear() noexcept;

  std::span<const Word> raw_bits() const noexcept { return bits_; }

 private:
  std::size_t find_slot(StateView s, std::size_t hash) const noexcept;
  void rebuild_index(std::size_t min_capacity);

  std::size_t H_ = 0;
  std::size_t words_ = 0;
  std::vector<Word> bits_;
  std::vector<double> lpj_;
  std::vector<std::uint32_t> index_;  // 0 = empty slot, otherwise state index + 1
};

// One LatentStateSet per datapoint, all of the same size S.
struct StateSetCollection {
  std::size_t H = 0;
  std::size_t S = 0;
  std::vector<LatentStateSet> sets;

  std::size_t size() const noexcept { return sets.size(); }
  LatentStateSet& operator[](std::size_t n) noexcept { return sets[n]; }
  const LatentStateSet& operator[](std::size_t n) const noexcept { return sets[n]; }
};

// log(sum_i exp(v_i)) with max subtraction. Throws on empty input.
double logsumexp(std::span<const double> values);

// Truncated posterior weights: softmax of the cached lpj values.
void posterior_weights(const LatentStateSet& set, std::vector<double>& out);
std::vector<double> posterior_weights(const LatentStateSet& set);

// Truncated expectation sum_{s in K} g(s) w(s). g maps a StateView to an
// Eigen vector (or scalar convertible to one).
template <class G>
Eigen::VectorXd truncated_expectation(G&& g, const LatentStateSet& set) {
  if (set.empty()) throw Error("truncated_expectation: empty state set");
  std::vector<double> w;
  posterior_weights(set, w);
  Eigen::VectorXd acc = Eigen::VectorXd(g(set.state(0))) * w[0];
  for (std::size_t i = 1; i < set.size(); ++i) acc += Eigen::VectorXd(g(set.state(i))) * w[i];
  return acc;
}

// <s> under the truncated posterior.
Eigen::VectorXd expected_state(const LatentStateSet& set);

// Recomputes every cached lpj under params (required after each M-step).
void refresh_lpj(LatentStateSet& set, const Datapoint& dp, const ModelParams& params);

// Truncated free energy: sum_n ( logsumexp(lpj of K(n)) + C_n(Theta) ).
double free_energy(const StateSetCollection& sets, const DataSet& data, const ModelParams& params);

// Per-datapoint term logsumexp(lpj(K(n))) + C_n(Theta).
double free_energy_term(const LatentStateSet& set, const Datapoint& dp, const ModelParams& params);

// Candidate states with their lpj values; unique among themselves.
using CandidateSet = LatentStateSet;

// Keeps the S states with highest lpj from set united with candidates
// (duplicates of set members are ignored). Ties are broken by lexicographic
// bit order, smaller first. The result is ordered by decreasing lpj.
LatentStateSet update_set(const LatentStateSet& set, const CandidateSet& candidates);

struct UpdateReport {
  std::size_t replaced = 0;  // states of the result that were not in the input set
  double lse_before = 0.0;
  double lse_after = 0.0;
};
UpdateReport update_set_in_place(LatentStateSet& set, const CandidateSet& candidates);

}  // namespace evoem
