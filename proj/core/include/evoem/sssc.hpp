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

// Posterior quantities of the slab variables restricted to the active units
// of one state s. All linear algebra happens in the |s|-dimensional active
// subspace; the D x D covariance C_s = sigma^2 I + W_s Psi_s W_s^T is never
// formed.
struct ActiveInference {
  std::vector<int> active;       // active unit indices, increasing
  Eigen::VectorXd kappa;         // posterior slab mean on active units
  Eigen::MatrixXd Lambda;        // posterior slab covariance on active units
  double log_det_C = 0.0;        // log |C_s| over observed coordinates
  double quad = 0.0;             // (y - W_s mu)^T C_s^{-1} (y - W_s mu)
  std::size_t observed = 0;

  // kappa embedded into H dimensions with zeros at inactive units.
  Eigen::VectorXd kappa_full(std::size_t H) const;
};

class SsscModel {
 public:
  explicit SsscModel(const SsscParams& params);

  const SsscParams& params() const noexcept { return params_; }
  std::size_t H() const noexcept { return params_.H(); }
  std::size_t D() const noexcept { return params_.D(); }

  // sum_h s_h log(pi_h / (1 - pi_h)) - log|C_s| / 2 - quad / 2.
  double lpj(StateView s, const Datapoint& dp) const;
  // sum_h log(1 - pi_h) - (D_obs / 2) log(2 pi).
  double log_constant(const Datapoint& dp) const;
  double log_constant_for(std::size_t observed) const;

  // with_posterior = false skips kappa / Lambda.
  void infer(StateView s, const Datapoint& dp, ActiveInference& out, bool with_posterior = true) const;

  void sample(Rng& rng, BinaryState& s, std::span<double> z, std::span<double> y) const;

 private:
  const SsscParams& params_;
  Eigen::VectorXd logit_pi_;
  double log_off_sum_ = 0.0;
  bool identity_psi_ = false;
  Eigen::MatrixXd gram_;  // W^T W, used for fully observed datapoints
};

// Streaming sufficient statistics of the SSSC M-step.
class SsscStats {
 public:
  SsscStats(std::size_t H, std::size_t D, bool masked, SsscSigmaUpdate sigma_update);

  void accumulate(const SsscModel& model, const Datapoint& dp, const LatentStateSet& set,
                  std::span<const double> weights);
  void merge(const SsscStats& other);

  SsscParams finalize(const SsscParams& old, const MStepOptions& options, MStepReport& report) const;

  std::size_t count() const noexcept { return count_; }

 private:
  std::size_t H_, D_;
  bool masked_;
  SsscSigmaUpdate sigma_update_;
  Eigen::VectorXd sum_s_;        // sum_n <s>
  Eigen::MatrixXd sum_ss_;       // sum_n <s s^T>
  Eigen::VectorXd sum_sz_;       // sum_n <sz>
  Eigen::MatrixXd sum_szsz_;     // sum_n <sz sz^T>
  Eigen::MatrixXd sum_mean_outer_;  // sum_n <sz><sz>^T
  Eigen::MatrixXd cross_;        // sum_n y <sz>^T (observed)
  Eigen::VectorXd yy_rows_;
  std::vector<Eigen::MatrixXd> row_szsz_;        // masked: per observed row
  std::vector<Eigen::MatrixXd> row_mean_outer_;  // masked, kAsPrinted only
  std::size_t count_ = 0;
  std::size_t observed_ = 0;
};

}  // namespace evoem
