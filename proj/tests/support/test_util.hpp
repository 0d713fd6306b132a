#pragma once

// Small builders shared by the tests: random parameters, datasets and
// exhaustive / explicit state sets.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "evoem/dataset.hpp"
#include "evoem/model.hpp"
#include "evoem/params.hpp"
#include "evoem/rng.hpp"
#include "evoem/state_set.hpp"

namespace evoem::testing {

inline Eigen::MatrixXd random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scale * standard_normal(rng);
  return m;
}

inline NoisyOrParams random_noisy_or(std::size_t H, std::size_t D, Rng& rng) {
  NoisyOrParams p;
  p.pi = Eigen::VectorXd(H);
  p.W = Eigen::MatrixXd(D, H);
  for (std::size_t h = 0; h < H; ++h) p.pi[h] = 0.05 + 0.4 * uniform01(rng);
  for (Eigen::Index i = 0; i < p.W.size(); ++i) p.W.data()[i] = 0.02 + 0.96 * uniform01(rng);
  return p;
}

inline BscParams random_bsc(std::size_t H, std::size_t D, Rng& rng) {
  BscParams p;
  p.pi = 0.1 + 0.3 * uniform01(rng);
  p.sigma2 = 0.5 + uniform01(rng);
  p.W = random_matrix(D, H, rng, 2.0);
  return p;
}

inline SsscParams random_sssc(std::size_t H, std::size_t D, Rng& rng, bool full_psi = true) {
  SsscParams p;
  p.pi = Eigen::VectorXd(H);
  for (std::size_t h = 0; h < H; ++h) p.pi[h] = 0.1 + 0.4 * uniform01(rng);
  p.sigma2 = 0.3 + uniform01(rng);
  p.W = random_matrix(D, H, rng, 1.5);
  p.mu = Eigen::VectorXd(H);
  for (std::size_t h = 0; h < H; ++h) p.mu[h] = standard_normal(rng);
  if (full_psi) {
    const Eigen::MatrixXd A = random_matrix(H, H, rng, 0.4);
    p.Psi = A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(H, H);
  } else {
    p.Psi = Eigen::MatrixXd::Identity(H, H);
  }
  return p;
}

inline DataSet dataset_from(const Eigen::MatrixXd& Y) { return DataSet(RowMatrix(Y)); }

// Set holding the given states with lpj evaluated under params.
inline LatentStateSet set_of(const std::vector<BinaryState>& states, const Datapoint& dp, const ModelParams& params) {
  LatentStateSet set(states.front().size());
  for (const auto& s : states) set.insert(s, log_pseudo_joint(s, dp, params));
  return set;
}

inline std::vector<BinaryState> every_state(std::size_t H) {
  std::vector<BinaryState> out;
  for (unsigned long long c = 0; c < (1ULL << H); ++c) {
    BinaryState s(H);
    for (std::size_t h = 0; h < H; ++h)
      if ((c >> h) & 1ULL) s.set(h);
    out.push_back(s);
  }
  return out;
}

inline std::vector<int> to_ints(StateView s) {
  std::vector<int> out(s.size());
  for (std::size_t h = 0; h < s.size(); ++h) out[h] = s.test(h) ? 1 : 0;
  return out;
}

// Exhaustive K-sets (all 2^H states) for every datapoint.
inline StateSetCollection exhaustive_sets(const DataSet& data, const ModelParams& params) {
  const std::size_t H = latent_dim(params);
  const auto states = every_state(H);
  StateSetCollection c{H, states.size(), {}};
  for (std::size_t n = 0; n < data.size(); ++n) c.sets.push_back(set_of(states, data.row(n), params));
  return c;
}

inline Eigen::MatrixXd dense(const RowMatrix& m) { return Eigen::MatrixXd(m); }

}  // namespace evoem::testing
