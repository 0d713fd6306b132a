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

// Evaluator for the noisy-OR model with per-parameter precomputation.
class NoisyOrModel {
 public:
  explicit NoisyOrModel(const NoisyOrParams& params);

  const NoisyOrParams& params() const noexcept { return params_; }
  std::size_t H() const noexcept { return params_.H(); }
  std::size_t D() const noexcept { return params_.D(); }

  // sum_d [y_d log N_d + (1 - y_d) log(1 - N_d)] + sum_h s_h log(pi_h / (1 - pi_h)),
  // over observed d. s = 0 yields 0 when every observed y_d is 0 and the
  // kLargeNeg sentinel otherwise.
  double lpj(StateView s, const Datapoint& dp) const;
  // sum_h log(1 - pi_h); independent of the mask.
  double log_constant(const Datapoint& dp) const;
  double log_constant() const { return log_constant_; }

  void sample(Rng& rng, BinaryState& s, std::span<double> y) const;

 private:
  const NoisyOrParams& params_;
  Eigen::MatrixXd log_one_minus_w_;  // D x H
  Eigen::VectorXd logit_pi_;
  double log_constant_ = 0.0;
};

// Streaming sufficient statistics of the noisy-OR M-step.
class NoisyOrStats {
 public:
  NoisyOrStats(std::size_t H, std::size_t D);

  void accumulate(const NoisyOrModel& model, const Datapoint& dp, const LatentStateSet& set,
                  std::span<const double> weights);
  void merge(const NoisyOrStats& other);

  // pi_h = <s_h> averaged over datapoints; W by one evaluation of the
  // fixed-point map, then clamped to [kWeightClamp, 1 - kWeightClamp].
  NoisyOrParams finalize(const NoisyOrParams& old, const MStepOptions& options, MStepReport& report) const;

  std::size_t count() const noexcept { return count_; }

 private:
  Eigen::VectorXd sum_s_;
  Eigen::MatrixXd numerator_;    // sum_n (y_d - 1) <D_dh>
  Eigen::MatrixXd denominator_;  // sum_n <C_dh>
  std::size_t count_ = 0;
};

}  // namespace evoem
