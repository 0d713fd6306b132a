#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "evoem/binary_state.hpp"
#include "evoem/dataset.hpp"
#include "evoem/params.hpp"
#include "evoem/rng.hpp"

namespace evoem {

// Bars test: R x R images whose generative fields are the R horizontal and R
// vertical bars (D = R^2, H_gen = 2R).
struct BarsSpec {
  std::size_t R = 5;
  ModelKind kind = ModelKind::kBsc;
  // Bar amplitude: noisy-OR uses it for every bar; BSC / SSSC give each bar
  // +amplitude or -amplitude with equal probability.
  double amplitude = 5.0;
  double background = 0.0;
  double pi_gen = 0.0;  // <= 0 means 2 / H_gen
  double sigma2_gen = 1.0;
  double mu_gen = 0.0;      // SSSC slab mean (all units)
  double psi_gen = 1.0;     // SSSC slab covariance = psi_gen * I
  std::uint64_t seed = 0;   // amplitude signs

  // Standard bars settings for a model kind: noisy-OR 0.8 / 0.1, BSC and SSSC +-5 / 0.
  static BarsSpec defaults(ModelKind kind, std::size_t R = 5);

  std::size_t D() const noexcept { return R * R; }
  std::size_t H_gen() const noexcept { return 2 * R; }
  double prior() const noexcept { return pi_gen > 0.0 ? pi_gen : 2.0 / static_cast<double>(H_gen()); }
  void validate() const;
};

// D x 2R dictionary; columns 0..R-1 horizontal bars (row h), R..2R-1 vertical
// bars (column h - R); pixel (row, col) is coordinate row * R + col.
Eigen::MatrixXd bars_dictionary(const BarsSpec& spec);

// Ground-truth parameters of the bars configuration.
ModelParams bars_ground_truth(const BarsSpec& spec);

struct BarsData {
  DataSet data;
  ModelParams truth;
  std::vector<BinaryState> latents;
};

BarsData generate_bars_dataset(const BarsSpec& spec, std::size_t n, Rng& rng);

struct RecoveryMatch {
  std::size_t truth_index = 0;
  std::size_t learned_index = 0;
  double correlation = 0.0;  // sign-corrected normalized cross-correlation
  int sign = 1;              // -1 when the learned column matched after a sign flip
  double pi_truth = 0.0;
  double pi_learned = 0.0;
};

struct RecoveryReport {
  std::vector<RecoveryMatch> matches;  // one per ground-truth field, injective
  double min_correlation = 0.0;
  double mean_abs_pi_error = 0.0;
  double max_abs_pi_error = 0.0;

  // Fields recovered at or above the threshold.
  std::size_t recovered(double threshold) const;
  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;
};

// Greedy maximum-correlation injective matching of ground-truth fields to
// learned fields. Columns are made mean-free and unit-norm; for BSC / SSSC
// the sign of a learned column is free (correlations compared in absolute
// value), for noisy-OR it is not.
RecoveryReport score_recovery(const ModelParams& learned, const ModelParams& truth);

// Normalized cross-correlation of two mean-free columns; 0 if either is constant.
double normalized_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace evoem
