#include "evoem/state_set.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "evoem/model.hpp"

namespace evoem {

LatentStateSet::LatentStateSet(std::size_t H, std::size_t reserve) : H_(H), words_(words_for(H)) {
  bits_.reserve(reserve * words_);
  lpj_.reserve(reserve);
  rebuild_index(std::max<std::size_t>(reserve, 4));
}

std::size_t LatentStateSet::find_slot(StateView s, std::size_t hash) const noexcept {
  const std::size_t mask = index_.size() - 1;
  std::size_t slot = hash & mask;
  while (true) {
    const std::uint32_t entry = index_[slot];
    if (entry == 0 || state(entry - 1) == s) return slot;
    slot = (slot + 1) & mask;
  }
}

void LatentStateSet::rebuild_index(std::size_t min_capacity) {
  const std::size_t capacity = std::bit_ceil(std::max<std::size_t>(2 * min_capacity, 8));
  index_.assign(capacity, 0);
  for (std::size_t i = 0; i < size(); ++i) {
    const StateView s = state(i);
    index_[find_slot(s, s.hash())] = static_cast<std::uint32_t>(i + 1);
  }
}

bool LatentStateSet::contains(StateView s) const noexcept {
  if (index_.empty() || s.size() != H_) return false;
  return index_[find_slot(s, s.hash())] != 0;
}

std::size_t LatentStateSet::find(StateView s) const noexcept {
  if (index_.empty() || s.size() != H_) return size();
  const std::uint32_t entry = index_[find_slot(s, s.hash())];
  return entry == 0 ? size() : entry - 1;
}

bool LatentStateSet::insert(StateView s, double lpj) {
  if (s.size() != H_) throw DimensionError("LatentStateSet::insert: state length does not match H");
  if (index_.empty() || 2 * (size() + 1) > index_.size()) rebuild_index(size() + 1);
  const std::size_t slot = find_slot(s, s.hash());
  if (index_[slot] != 0) return false;
  bits_.insert(bits_.end(), s.words().begin(), s.words().end());
  lpj_.push_back(lpj);
  index_[slot] = static_cast<std::uint32_t>(lpj_.size());
  return true;
}

void LatentStateSet::clear() noexcept {
  bits_.clear();
  lpj_.clear();
  std::fill(index_.begin(), index_.end(), 0U);
}

double logsumexp(std::span<const double> values) {
  if (values.empty()) throw Error("logsumexp: empty input");
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

void posterior_weights(const LatentStateSet& set, std::vector<double>& out) {
  if (set.empty()) throw Error("posterior_weights: empty state set");
  const auto lpj = set.lpj();
  const double m = *std::max_element(lpj.begin(), lpj.end());
  out.resize(lpj.size());
  double total = 0.0;
  for (std::size_t i = 0; i < lpj.size(); ++i) {
    out[i] = std::exp(lpj[i] - m);
    total += out[i];
  }
  for (double& w : out) w /= total;
}

std::vector<double> posterior_weights(const LatentStateSet& set) {
  std::vector<double> w;
  posterior_weights(set, w);
  return w;
}

Eigen::VectorXd expected_state(const LatentStateSet& set) {
  std::vector<double> w;
  posterior_weights(set, w);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(set.H()));
  for (std::size_t i = 0; i < set.size(); ++i) set.state(i).for_each_active([&](int h) { out[h] += w[i]; });
  return out;
}

void refresh_lpj(LatentStateSet& set, const Datapoint& dp, const ModelParams& params) {
  with_model(params, [&](const auto& model) {
    auto lpj = set.lpj_mutable();
    for (std::size_t i = 0; i < set.size(); ++i) lpj[i] = model.lpj(set.state(i), dp);
  });
}

double free_energy_term(const LatentStateSet& set, const Datapoint& dp, const ModelParams& params) {
  return logsumexp(set.lpj()) + log_constant(params, dp);
}

double free_energy(const StateSetCollection& sets, const DataSet& data, const ModelParams& params) {
  if (sets.size() != data.size()) throw DimensionError("free_energy: one state set per datapoint required");
  return with_model(params, [&](const auto& model) {
    double total = 0.0;
    for (std::size_t n = 0; n < sets.size(); ++n) {
      const Datapoint dp = data.row(n);
      total += logsumexp(sets[n].lpj()) + model.log_constant(dp);
    }
    return total;
  });
}

namespace {

struct Entry {
  double lpj;
  const LatentStateSet* owner;
  std::size_t index;
};

// Strict total order over unique states: larger lpj first, then
// lexicographically smaller bit pattern; NaN sorts last.
bool ranks_before(const Entry& a, const Entry& b) {
  const bool a_nan = std::isnan(a.lpj), b_nan = std::isnan(b.lpj);
  if (a_nan != b_nan) return b_nan;
  if (!a_nan && a.lpj != b.lpj) return a.lpj > b.lpj;
  return a.owner->state(a.index) < b.owner->state(b.index);
}

}  // namespace

UpdateReport update_set_in_place(LatentStateSet& set, const CandidateSet& candidates) {
  UpdateReport report;
  const std::size_t S = set.size();
  if (S == 0) return report;
  report.lse_before = logsumexp(set.lpj());

  thread_local std::vector<Entry> entries;
  entries.clear();
  for (std::size_t i = 0; i < S; ++i) entries.push_back({set.lpj(i), &set, i});
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (!set.contains(candidates.state(i))) entries.push_back({candidates.lpj(i), &candidates, i});

  if (entries.size() > S)
    std::nth_element(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(S), entries.end(), ranks_before);
  std::sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(S), ranks_before);

  LatentStateSet next(set.H(), S);
  for (std::size_t i = 0; i < S; ++i) {
    const Entry& e = entries[i];
    next.insert(e.owner->state(e.index), e.lpj);
    if (e.owner != &set) ++report.replaced;
  }
  set = std::move(next);
  report.lse_after = logsumexp(set.lpj());
  return report;
}

LatentStateSet update_set(const LatentStateSet& set, const CandidateSet& candidates) {
  LatentStateSet out = set;
  update_set_in_place(out, candidates);
  return out;
}

}  // namespace evoem
