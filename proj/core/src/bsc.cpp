#include "evoem/bsc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "evoem/state_set.hpp"
#include "gram_solve.hpp"

namespace evoem {

BscModel::BscModel(const BscParams& params) : params_(params) {
  logit_pi_ = std::log(params.pi / (1.0 - params.pi));
  h_log_off_ = static_cast<double>(params.H()) * std::log1p(-params.pi);
  log_two_pi_sigma2_ = std::log(2.0 * std::numbers::pi * params.sigma2);
}

double BscModel::lpj(StateView s, const Datapoint& dp) const {
  const std::size_t D = dp.dim();
  thread_local std::vector<double> r;
  r.assign(dp.y.begin(), dp.y.end());
  std::size_t k = 0;
  s.for_each_active([&](int h) {
    const double* col = params_.W.col(h).data();
    for (std::size_t d = 0; d < D; ++d) r[d] -= col[d];
    ++k;
  });
  double sq = 0.0;
  if (dp.fully_observed()) {
    for (std::size_t d = 0; d < D; ++d) sq += r[d] * r[d];
  } else {
    for (std::size_t d = 0; d < D; ++d)
      if (dp.mask[d]) sq += r[d] * r[d];
  }
  return static_cast<double>(k) * logit_pi_ - 0.5 * sq / params_.sigma2;
}

double BscModel::log_constant(const Datapoint& dp) const { return log_constant_for(dp.observed_count()); }

double BscModel::log_constant_for(std::size_t observed) const {
  return h_log_off_ - 0.5 * static_cast<double>(observed) * log_two_pi_sigma2_;
}

void BscModel::sample(Rng& rng, BinaryState& s, std::span<double> y) const {
  const std::size_t H = this->H();
  s = BinaryState(H);
  for (std::size_t h = 0; h < H; ++h)
    if (uniform01(rng) < params_.pi) s.set(h);
  const double sigma = std::sqrt(params_.sigma2);
  for (std::size_t d = 0; d < y.size(); ++d) {
    double mean = 0.0;
    s.view().for_each_active([&](int h) { mean += params_.W(static_cast<Eigen::Index>(d), h); });
    y[d] = mean + sigma * standard_normal(rng);
  }
}

BscStats::BscStats(std::size_t H, std::size_t D, bool masked)
    : H_(H),
      D_(D),
      masked_(masked),
      sum_s_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(H))),
      gram_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(H), static_cast<Eigen::Index>(H))),
      cross_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(H))),
      yy_rows_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(D))) {
  if (masked_)
    row_gram_.assign(D, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(H), static_cast<Eigen::Index>(H)));
}

void BscStats::accumulate(const BscModel&, const Datapoint& dp, const LatentStateSet& set,
                          std::span<const double> weights) {
  thread_local std::vector<int> active;
  thread_local std::vector<int> slot;      // unit -> position in union, -1 if absent
  thread_local std::vector<int> union_units;
  thread_local Eigen::VectorXd mean_u;
  thread_local Eigen::MatrixXd second_u;

  slot.assign(H_, -1);
  union_units.clear();
  for (std::size_t i = 0; i < set.size(); ++i)
    set.state(i).for_each_active([&](int h) {
      if (slot[static_cast<std::size_t>(h)] < 0) {
        slot[static_cast<std::size_t>(h)] = static_cast<int>(union_units.size());
        union_units.push_back(h);
      }
    });
  const auto u = static_cast<Eigen::Index>(union_units.size());
  mean_u.setZero(u);
  second_u.setZero(u, u);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double w = weights[i];
    set.state(i).active_indices(active);
    for (int a : active) {
      const int ia = slot[static_cast<std::size_t>(a)];
      mean_u[ia] += w;
      for (int b : active) second_u(ia, slot[static_cast<std::size_t>(b)]) += w;
    }
  }

  for (Eigen::Index i = 0; i < u; ++i) {
    const int hi = union_units[static_cast<std::size_t>(i)];
    sum_s_[hi] += mean_u[i];
    for (Eigen::Index j = 0; j < u; ++j) gram_(hi, union_units[static_cast<std::size_t>(j)]) += second_u(i, j);
  }

  for (std::size_t d = 0; d < D_; ++d) {
    if (!dp.observed(d)) continue;
    const double y = dp.y[d];
    const auto di = static_cast<Eigen::Index>(d);
    yy_rows_[di] += y * y;
    for (Eigen::Index i = 0; i < u; ++i) cross_(di, union_units[static_cast<std::size_t>(i)]) += y * mean_u[i];
    if (masked_) {
      auto& G = row_gram_[d];
      for (Eigen::Index i = 0; i < u; ++i)
        for (Eigen::Index j = 0; j < u; ++j)
          G(union_units[static_cast<std::size_t>(i)], union_units[static_cast<std::size_t>(j)]) += second_u(i, j);
    }
  }
  ++count_;
  observed_ += dp.observed_count();
}

void BscStats::merge(const BscStats& other) {
  sum_s_ += other.sum_s_;
  gram_ += other.gram_;
  cross_ += other.cross_;
  yy_rows_ += other.yy_rows_;
  for (std::size_t d = 0; d < row_gram_.size(); ++d) row_gram_[d] += other.row_gram_[d];
  count_ += other.count_;
  observed_ += other.observed_;
}

BscParams BscStats::finalize(const BscParams& old, const MStepOptions&, MStepReport& report) const {
  BscParams out = old;
  const double n = static_cast<double>(count_);
  out.pi = std::clamp(sum_s_.sum() / (n * static_cast<double>(H_)), limits::kPriorClamp, 1.0 - limits::kPriorClamp);

  double residual = 0.0;
  if (!masked_) {
    detail::solve_gram_rows(gram_, cross_, out.W, report);
    // sum_n <||y - W s||^2> = sum ||y||^2 - 2 tr(W^T B) + tr(W G W^T)
    residual = yy_rows_.sum() - 2.0 * out.W.cwiseProduct(cross_).sum() + (out.W * gram_).cwiseProduct(out.W).sum();
  } else {
    Eigen::MatrixXd row(1, static_cast<Eigen::Index>(H_));
    for (std::size_t d = 0; d < D_; ++d) {
      const auto di = static_cast<Eigen::Index>(d);
      row = out.W.row(di);
      detail::solve_gram_rows(row_gram_[d], cross_.row(di), row, report);
      out.W.row(di) = row;
      residual += yy_rows_[di] - 2.0 * row.row(0).dot(cross_.row(di)) +
                  (row * row_gram_[d] * row.transpose())(0, 0);
    }
  }
  out.sigma2 = std::max(residual / static_cast<double>(observed_), limits::kSigma2Floor);
  return out;
}

}  // namespace evoem
