#include "evoem/noisy_or.hpp"

#include <algorithm>
#include <cmath>

#include "evoem/state_set.hpp"

namespace evoem {

NoisyOrModel::NoisyOrModel(const NoisyOrParams& params) : params_(params) {
  log_one_minus_w_ = (1.0 - params.W.array()).log().matrix();
  logit_pi_ = (params.pi.array() / (1.0 - params.pi.array())).log().matrix();
  log_constant_ = (1.0 - params.pi.array()).log().sum();
}

double NoisyOrModel::lpj(StateView s, const Datapoint& dp) const {
  const std::size_t D = dp.dim();
  if (s.none()) {
    for (std::size_t d = 0; d < D; ++d)
      if (dp.observed(d) && dp.y[d] != 0.0) return limits::kLargeNeg;
    return 0.0;
  }
  thread_local std::vector<double> log_off;  // log(1 - N_d(s))
  log_off.assign(D, 0.0);
  double prior = 0.0;
  s.for_each_active([&](int h) {
    const double* col = log_one_minus_w_.col(h).data();
    for (std::size_t d = 0; d < D; ++d) log_off[d] += col[d];
    prior += logit_pi_[h];
  });
  double like = 0.0;
  for (std::size_t d = 0; d < D; ++d) {
    if (!dp.observed(d)) continue;
    like += dp.y[d] != 0.0 ? std::log(-std::expm1(log_off[d])) : log_off[d];
  }
  return like + prior;
}

double NoisyOrModel::log_constant(const Datapoint&) const { return log_constant_; }

void NoisyOrModel::sample(Rng& rng, BinaryState& s, std::span<double> y) const {
  const std::size_t H = this->H();
  s = BinaryState(H);
  for (std::size_t h = 0; h < H; ++h)
    if (uniform01(rng) < params_.pi[static_cast<Eigen::Index>(h)]) s.set(h);
  for (std::size_t d = 0; d < y.size(); ++d) {
    double off = 1.0;
    s.view().for_each_active([&](int h) { off *= 1.0 - params_.W(static_cast<Eigen::Index>(d), h); });
    y[d] = uniform01(rng) < 1.0 - off ? 1.0 : 0.0;
  }
}

NoisyOrStats::NoisyOrStats(std::size_t H, std::size_t D)
    : sum_s_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(H))),
      numerator_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(H))),
      denominator_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(H))) {}

void NoisyOrStats::accumulate(const NoisyOrModel& model, const Datapoint& dp, const LatentStateSet& set,
                              std::span<const double> weights) {
  const std::size_t D = dp.dim();
  const auto& W = model.params().W;
  thread_local std::vector<int> active;
  thread_local std::vector<double> off;  // prod_{h in s} (1 - W_dh)
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double w = weights[i];
    const StateView s = set.state(i);
    s.active_indices(active);
    for (int h : active) sum_s_[h] += w;
    if (active.empty() || w == 0.0) continue;
    off.assign(D, 1.0);
    for (int h : active)
      for (std::size_t d = 0; d < D; ++d) off[d] *= 1.0 - W(static_cast<Eigen::Index>(d), h);
    for (std::size_t d = 0; d < D; ++d) {
      if (!dp.observed(d)) continue;
      const double on = 1.0 - off[d];  // N_d(s) >= min W_dh > 0
      const double y_minus_one = dp.y[d] - 1.0;
      for (int h : active) {
        const double one_minus_w = 1.0 - W(static_cast<Eigen::Index>(d), h);
        // D_dh = W~_dh / (N_d (1 - N_d)) = 1 / ((1 - W_dh) N_d), C_dh = W~_dh D_dh
        const double d_term = 1.0 / (one_minus_w * on);
        const double c_term = off[d] / (one_minus_w * one_minus_w * on);
        numerator_(static_cast<Eigen::Index>(d), h) += w * y_minus_one * d_term;
        denominator_(static_cast<Eigen::Index>(d), h) += w * c_term;
      }
    }
  }
  ++count_;
}

void NoisyOrStats::merge(const NoisyOrStats& other) {
  sum_s_ += other.sum_s_;
  numerator_ += other.numerator_;
  denominator_ += other.denominator_;
  count_ += other.count_;
}

NoisyOrParams NoisyOrStats::finalize(const NoisyOrParams& old, const MStepOptions& options, MStepReport&) const {
  NoisyOrParams out = old;
  const double n = static_cast<double>(count_);
  const double H = static_cast<double>(old.H());
  const double lo = options.prior_floor_inv_h ? std::max(limits::kPriorClamp, 1.0 / H) : limits::kPriorClamp;
  for (Eigen::Index h = 0; h < out.pi.size(); ++h)
    out.pi[h] = std::clamp(sum_s_[h] / n, lo, 1.0 - limits::kPriorClamp);
  for (Eigen::Index h = 0; h < out.W.cols(); ++h) {
    for (Eigen::Index d = 0; d < out.W.rows(); ++d) {
      const double den = denominator_(d, h);
      if (!(den > 0.0)) continue;
      out.W(d, h) = std::clamp(1.0 + numerator_(d, h) / den, limits::kWeightClamp, 1.0 - limits::kWeightClamp);
    }
  }
  return out;
}

}  // namespace evoem
