#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "evoem/binary_state.hpp"
#include "evoem/dataset.hpp"
#include "evoem/params.hpp"
#include "evoem/rng.hpp"

namespace evoem {

class LatentStateSet;

// Evaluator for binary sparse coding. Holds a reference to the parameters,
// which must outlive it.
class BscModel {
 public:
  explicit BscModel(const BscParams& params);

  const BscParams& params() const noexcept { return params_; }
  std::size_t H() const noexcept { return params_.H(); }
  std::size_t D() const noexcept { return params_.D(); }

  // |s| log(pi / (1 - pi)) - ||y - W s||^2 / (2 sigma^2) over observed d.
  double lpj(StateView s, const Datapoint& dp) const;
  // H log(1 - pi) - (D_obs / 2) log(2 pi sigma^2).
  double log_constant(const Datapoint& dp) const;
  double log_constant_for(std::size_t observed) const;

  void sample(Rng& rng, BinaryState& s, std::span<double> y) const;

 private:
  const BscParams& params_;
  double logit_pi_ = 0.0;
  double h_log_off_ = 0.0;
  double log_two_pi_sigma2_ = 0.0;
};

// Streaming sufficient statistics of the BSC M-step. With masked data the
// dictionary is solved row by row over the datapoints observing that row.
class BscStats {
 public:
  BscStats(std::size_t H, std::size_t D, bool masked);

  void accumulate(const BscModel& model, const Datapoint& dp, const LatentStateSet& set,
                  std::span<const double> weights);
  void merge(const BscStats& other);

  BscParams finalize(const BscParams& old, const MStepOptions& options, MStepReport& report) const;

  std::size_t count() const noexcept { return count_; }

 private:
  std::size_t H_, D_;
  bool masked_;
  Eigen::VectorXd sum_s_;
  Eigen::MatrixXd gram_;        // sum_n <s s^T>
  Eigen::MatrixXd cross_;       // sum_n y <s>^T (observed entries only)
  Eigen::VectorXd yy_rows_;     // sum_n y_d^2 (observed)
  std::vector<Eigen::MatrixXd> row_gram_;  // masked: per-row sum over observing datapoints
  std::size_t count_ = 0;
  std::size_t observed_ = 0;
};

}  // namespace evoem
