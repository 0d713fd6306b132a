#include "evoem/sssc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "evoem/error.hpp"
#include "evoem/state_set.hpp"
#include "gram_solve.hpp"

namespace evoem {

Eigen::VectorXd ActiveInference::kappa_full(std::size_t H) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(H));
  for (std::size_t i = 0; i < active.size(); ++i) out[active[i]] = kappa[static_cast<Eigen::Index>(i)];
  return out;
}

SsscModel::SsscModel(const SsscParams& params) : params_(params) {
  logit_pi_ = (params.pi.array() / (1.0 - params.pi.array())).log().matrix();
  log_off_sum_ = (1.0 - params.pi.array()).log().sum();
  identity_psi_ = params.Psi.isIdentity(0.0);
  gram_.noalias() = params.W.transpose() * params.W;
}

double SsscModel::log_constant(const Datapoint& dp) const { return log_constant_for(dp.observed_count()); }

double SsscModel::log_constant_for(std::size_t observed) const {
  return log_off_sum_ - 0.5 * static_cast<double>(observed) * std::log(2.0 * std::numbers::pi);
}

namespace {

// In-place lower Cholesky factorization of the k x k row-major matrix a
// (upper triangle ignored). Returns false unless a is positive definite.
bool cholesky(double* a, std::size_t k) {
  for (std::size_t j = 0; j < k; ++j) {
    double d = a[j * k + j];
    for (std::size_t p = 0; p < j; ++p) d -= a[j * k + p] * a[j * k + p];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    a[j * k + j] = d;
    for (std::size_t i = j + 1; i < k; ++i) {
      double v = a[i * k + j];
      for (std::size_t p = 0; p < j; ++p) v -= a[i * k + p] * a[j * k + p];
      a[i * k + j] = v / d;
    }
  }
  return true;
}

// Solves (L L^T) x = b in place for the factor produced by cholesky().
void cholesky_solve(const double* l, std::size_t k, double* b) {
  for (std::size_t i = 0; i < k; ++i) {
    double v = b[i];
    for (std::size_t p = 0; p < i; ++p) v -= l[i * k + p] * b[p];
    b[i] = v / l[i * k + i];
  }
  for (std::size_t i = k; i-- > 0;) {
    double v = b[i];
    for (std::size_t p = i + 1; p < k; ++p) v -= l[p * k + i] * b[p];
    b[i] = v / l[i * k + i];
  }
}

}  // namespace

void SsscModel::infer(StateView s, const Datapoint& dp, ActiveInference& out, bool with_posterior) const {
  // Scratch buffers: Wty_s, G_ss, L (Cholesky of Psi_ss), M and helpers.
  thread_local std::vector<double> wty, g, l, m, t, atr, v;

  s.active_indices(out.active);
  const std::size_t k = out.active.size();
  const std::size_t D = dp.dim();
  const double sigma2 = params_.sigma2;
  const bool full = dp.fully_observed() || dp.observed_count() == D;
  const double* y = dp.y.data();
  const std::uint8_t* mask = dp.mask.empty() ? nullptr : dp.mask.data();
  const std::uint8_t* obs_mask = full ? nullptr : mask;

  std::size_t n_obs = 0;
  double yy = 0.0;
  if (!obs_mask) {
    for (std::size_t d = 0; d < D; ++d) yy += y[d] * y[d];
    n_obs = D;
  } else {
    for (std::size_t d = 0; d < D; ++d) {
      if (!obs_mask[d]) continue;
      yy += y[d] * y[d];
      ++n_obs;
    }
  }
  out.observed = n_obs;
  const double log_sigma2 = std::log(sigma2);

  if (k == 0) {
    out.kappa.resize(0);
    out.Lambda.resize(0, 0);
    out.log_det_C = static_cast<double>(n_obs) * log_sigma2;
    out.quad = yy / sigma2;
    return;
  }

  // W_s^T y and the Gram matrix W_s^T W_s over observed rows.
  wty.assign(k, 0.0);
  g.assign(k * k, 0.0);
  const double* W = params_.W.data();
  const std::size_t ld = static_cast<std::size_t>(params_.W.rows());
  for (std::size_t i = 0; i < k; ++i) {
    const double* ci = W + static_cast<std::size_t>(out.active[i]) * ld;
    double acc = 0.0;
    if (!obs_mask) {
      for (std::size_t d = 0; d < D; ++d) acc += ci[d] * y[d];
    } else {
      for (std::size_t d = 0; d < D; ++d)
        if (obs_mask[d]) acc += ci[d] * y[d];
    }
    wty[i] = acc;
  }
  if (full) {
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j <= i; ++j) g[i * k + j] = g[j * k + i] = gram_(out.active[i], out.active[j]);
  } else {
    for (std::size_t i = 0; i < k; ++i) {
      const double* ci = W + static_cast<std::size_t>(out.active[i]) * ld;
      for (std::size_t j = 0; j <= i; ++j) {
        const double* cj = W + static_cast<std::size_t>(out.active[j]) * ld;
        double acc = 0.0;
        for (std::size_t d = 0; d < D; ++d)
          if (obs_mask[d]) acc += ci[d] * cj[d];
        g[i * k + j] = g[j * k + i] = acc;
      }
    }
  }

  // Residual r = y - W_s mu_s: A^T r and ||r||^2 by expansion.
  atr.resize(k);
  double mu_wty = 0.0, mu_g_mu = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double gm = 0.0;
    for (std::size_t j = 0; j < k; ++j) gm += g[i * k + j] * params_.mu[out.active[j]];
    const double mi = params_.mu[out.active[i]];
    atr[i] = wty[i] - gm;
    mu_wty += mi * wty[i];
    mu_g_mu += mi * gm;
  }
  const double rr = std::max(yy - 2.0 * mu_wty + mu_g_mu, 0.0);

  // M = I + L^T G L / sigma2 with Psi_s = L L^T (L = I for identity Psi);
  // v = M^{-1} L^T A^T r.
  m.resize(k * k);
  v.resize(k);
  if (identity_psi_) {
    for (std::size_t i = 0; i < k * k; ++i) m[i] = g[i] / sigma2;
    for (std::size_t i = 0; i < k; ++i) v[i] = atr[i];
  } else {
    l.resize(k * k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) l[i * k + j] = j <= i ? params_.Psi(out.active[i], out.active[j]) : 0.0;
    if (!cholesky(l.data(), k))
      throw NumericError("SSSC: Psi restricted to the active units is not positive definite");
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) l[i * k + j] = 0.0;
    // t = G L, then m = L^T t / sigma2.
    t.assign(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        double acc = 0.0;
        for (std::size_t p = j; p < k; ++p) acc += g[i * k + p] * l[p * k + j];
        t[i * k + j] = acc;
      }
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        double acc = 0.0;
        for (std::size_t p = i; p < k; ++p) acc += l[p * k + i] * t[p * k + j];
        m[i * k + j] = acc / sigma2;
      }
    for (std::size_t i = 0; i < k; ++i) {
      double acc = 0.0;
      for (std::size_t p = i; p < k; ++p) acc += l[p * k + i] * atr[p];
      v[i] = acc;
    }
  }
  for (std::size_t i = 0; i < k; ++i) m[i * k + i] += 1.0;
  t.assign(v.begin(), v.end());  // keep L^T A^T r
  if (!cholesky(m.data(), k)) throw NumericError("SSSC: C_s is not positive definite");

  double log_det_m = 0.0;
  for (std::size_t i = 0; i < k; ++i) log_det_m += std::log(m[i * k + i]);
  out.log_det_C = static_cast<double>(n_obs) * log_sigma2 + 2.0 * log_det_m;

  cholesky_solve(m.data(), k, v.data());
  double quad_corr = 0.0;
  for (std::size_t i = 0; i < k; ++i) quad_corr += t[i] * v[i];
  out.quad = rr / sigma2 - quad_corr / (sigma2 * sigma2);

  if (!with_posterior) return;
  const auto K = static_cast<Eigen::Index>(k);
  // M^{-1} column by column.
  Eigen::MatrixXd m_inv(K, K);
  thread_local std::vector<double> e;
  e.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::fill(e.begin(), e.end(), 0.0);
    e[c] = 1.0;
    cholesky_solve(m.data(), k, e.data());
    for (std::size_t r = 0; r < k; ++r) m_inv(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = e[r];
  }
  out.kappa.resize(K);
  for (std::size_t j = 0; j < k; ++j) out.kappa[static_cast<Eigen::Index>(j)] = params_.mu[out.active[j]];
  if (identity_psi_) {
    out.Lambda = m_inv;
    for (std::size_t j = 0; j < k; ++j) out.kappa[static_cast<Eigen::Index>(j)] += v[j] / sigma2;
  } else {
    Eigen::MatrixXd L(K, K);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = l[i * k + j];
    out.Lambda.noalias() = L * m_inv * L.transpose();
    const Eigen::Map<const Eigen::VectorXd> vv(v.data(), K);
    out.kappa.noalias() += L * vv / sigma2;
  }
}

double SsscModel::lpj(StateView s, const Datapoint& dp) const {
  thread_local ActiveInference inf;
  infer(s, dp, inf, false);
  double prior = 0.0;
  for (int h : inf.active) prior += logit_pi_[h];
  return prior - 0.5 * inf.log_det_C - 0.5 * inf.quad;
}

void SsscModel::sample(Rng& rng, BinaryState& s, std::span<double> z, std::span<double> y) const {
  const auto H = static_cast<Eigen::Index>(this->H());
  s = BinaryState(static_cast<std::size_t>(H));
  for (Eigen::Index h = 0; h < H; ++h)
    if (uniform01(rng) < params_.pi[h]) s.set(static_cast<std::size_t>(h));
  Eigen::VectorXd eps(H);
  for (Eigen::Index h = 0; h < H; ++h) eps[h] = standard_normal(rng);
  Eigen::LLT<Eigen::MatrixXd> llt(params_.Psi);
  if (llt.info() != Eigen::Success) throw NumericError("SSSC sample: Psi is not positive definite");
  const Eigen::VectorXd zv = params_.mu + llt.matrixL() * eps;
  for (Eigen::Index h = 0; h < H; ++h) z[static_cast<std::size_t>(h)] = zv[h];
  const double sigma = std::sqrt(params_.sigma2);
  for (std::size_t d = 0; d < y.size(); ++d) {
    double mean = 0.0;
    s.view().for_each_active([&](int h) { mean += params_.W(static_cast<Eigen::Index>(d), h) * zv[h]; });
    y[d] = mean + sigma * standard_normal(rng);
  }
}

SsscStats::SsscStats(std::size_t H, std::size_t D, bool masked, SsscSigmaUpdate sigma_update)
    : H_(H), D_(D), masked_(masked), sigma_update_(sigma_update) {
  const auto h = static_cast<Eigen::Index>(H);
  const auto d = static_cast<Eigen::Index>(D);
  sum_s_ = Eigen::VectorXd::Zero(h);
  sum_ss_ = Eigen::MatrixXd::Zero(h, h);
  sum_sz_ = Eigen::VectorXd::Zero(h);
  sum_szsz_ = Eigen::MatrixXd::Zero(h, h);
  sum_mean_outer_ = Eigen::MatrixXd::Zero(h, h);
  cross_ = Eigen::MatrixXd::Zero(d, h);
  yy_rows_ = Eigen::VectorXd::Zero(d);
  if (masked_) {
    row_szsz_.assign(D, Eigen::MatrixXd::Zero(h, h));
    if (sigma_update_ == SsscSigmaUpdate::kAsPrinted) row_mean_outer_.assign(D, Eigen::MatrixXd::Zero(h, h));
  }
}

void SsscStats::accumulate(const SsscModel& model, const Datapoint& dp, const LatentStateSet& set,
                           std::span<const double> weights) {
  thread_local std::vector<int> slot;
  thread_local std::vector<int> units;
  thread_local ActiveInference inf;
  thread_local Eigen::VectorXd e_s, e_sz;
  thread_local Eigen::MatrixXd e_ss, e_szsz, outer;

  slot.assign(H_, -1);
  units.clear();
  for (std::size_t i = 0; i < set.size(); ++i)
    set.state(i).for_each_active([&](int h) {
      if (slot[static_cast<std::size_t>(h)] < 0) {
        slot[static_cast<std::size_t>(h)] = static_cast<int>(units.size());
        units.push_back(h);
      }
    });
  const auto u = static_cast<Eigen::Index>(units.size());
  e_s.setZero(u);
  e_sz.setZero(u);
  e_ss.setZero(u, u);
  e_szsz.setZero(u, u);

  for (std::size_t i = 0; i < set.size(); ++i) {
    const double w = weights[i];
    const StateView s = set.state(i);
    if (s.none()) continue;
    model.infer(s, dp, inf, true);
    const auto k = inf.active.size();
    for (std::size_t p = 0; p < k; ++p) {
      const int sp = slot[static_cast<std::size_t>(inf.active[p])];
      const double kp = inf.kappa[static_cast<Eigen::Index>(p)];
      e_s[sp] += w;
      e_sz[sp] += w * kp;
      for (std::size_t q = 0; q < k; ++q) {
        const int sq = slot[static_cast<std::size_t>(inf.active[q])];
        e_ss(sp, sq) += w;
        e_szsz(sp, sq) +=
            w * (inf.Lambda(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) +
                 kp * inf.kappa[static_cast<Eigen::Index>(q)]);
      }
    }
  }
  outer.noalias() = e_sz * e_sz.transpose();

  for (Eigen::Index i = 0; i < u; ++i) {
    const int hi = units[static_cast<std::size_t>(i)];
    sum_s_[hi] += e_s[i];
    sum_sz_[hi] += e_sz[i];
    for (Eigen::Index j = 0; j < u; ++j) {
      const int hj = units[static_cast<std::size_t>(j)];
      sum_ss_(hi, hj) += e_ss(i, j);
      sum_szsz_(hi, hj) += e_szsz(i, j);
      sum_mean_outer_(hi, hj) += outer(i, j);
    }
  }

  for (std::size_t d = 0; d < D_; ++d) {
    if (!dp.observed(d)) continue;
    const auto di = static_cast<Eigen::Index>(d);
    const double y = dp.y[d];
    yy_rows_[di] += y * y;
    for (Eigen::Index i = 0; i < u; ++i) cross_(di, units[static_cast<std::size_t>(i)]) += y * e_sz[i];
    if (!masked_) continue;
    auto& G = row_szsz_[d];
    for (Eigen::Index i = 0; i < u; ++i)
      for (Eigen::Index j = 0; j < u; ++j)
        G(units[static_cast<std::size_t>(i)], units[static_cast<std::size_t>(j)]) += e_szsz(i, j);
    if (!row_mean_outer_.empty()) {
      auto& K = row_mean_outer_[d];
      for (Eigen::Index i = 0; i < u; ++i)
        for (Eigen::Index j = 0; j < u; ++j)
          K(units[static_cast<std::size_t>(i)], units[static_cast<std::size_t>(j)]) += outer(i, j);
    }
  }
  ++count_;
  observed_ += dp.observed_count();
}

void SsscStats::merge(const SsscStats& other) {
  sum_s_ += other.sum_s_;
  sum_ss_ += other.sum_ss_;
  sum_sz_ += other.sum_sz_;
  sum_szsz_ += other.sum_szsz_;
  sum_mean_outer_ += other.sum_mean_outer_;
  cross_ += other.cross_;
  yy_rows_ += other.yy_rows_;
  for (std::size_t d = 0; d < row_szsz_.size(); ++d) row_szsz_[d] += other.row_szsz_[d];
  for (std::size_t d = 0; d < row_mean_outer_.size(); ++d) row_mean_outer_[d] += other.row_mean_outer_[d];
  count_ += other.count_;
  observed_ += other.observed_;
}

namespace {

// Floors the spectrum of a symmetric matrix so it becomes positive definite.
Eigen::MatrixXd repair_spd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double floor = std::max(1e-6 * std::max(lambda.maxCoeff(), 0.0), 1e-12);
  lambda = lambda.cwiseMax(floor);
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

SsscParams SsscStats::finalize(const SsscParams& old, const MStepOptions& options, MStepReport& report) const {
  SsscParams out = old;
  const double n = static_cast<double>(count_);
  const auto H = static_cast<Eigen::Index>(H_);

  const double lo =
      options.prior_floor_inv_h ? std::max(limits::kPriorClamp, 1.0 / static_cast<double>(H_)) : limits::kPriorClamp;
  for (Eigen::Index h = 0; h < H; ++h) out.pi[h] = std::clamp(sum_s_[h] / n, lo, 1.0 - limits::kPriorClamp);

  if (!masked_) {
    detail::solve_gram_rows(sum_szsz_, cross_, out.W, report);
  } else {
    Eigen::MatrixXd row(1, H);
    for (std::size_t d = 0; d < D_; ++d) {
      const auto di = static_cast<Eigen::Index>(d);
      row = out.W.row(di);
      detail::solve_gram_rows(row_szsz_[d], cross_.row(di), row, report);
      out.W.row(di) = row;
    }
  }

  if (!old.mu_psi_frozen) {
    for (Eigen::Index h = 0; h < H; ++h)
      if (sum_s_[h] > 0.0) out.mu[h] = sum_sz_[h] / sum_s_[h];
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(H, H);
    for (Eigen::Index i = 0; i < H; ++i) {
      for (Eigen::Index j = 0; j < H; ++j) {
        const double co = sum_ss_(i, j);
        if (co > 0.0)
          psi(i, j) = (sum_szsz_(i, j) - co * out.mu[i] * out.mu[j]) / co;
        else if (i == j)
          psi(i, j) = old.Psi(i, j);
      }
    }
    psi = 0.5 * (psi + psi.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(psi);
    if (llt.info() != Eigen::Success) {
      psi = repair_spd(psi);
      report.psi_repaired = true;
    }
    out.Psi = psi;
    const bool blown = out.mu.cwiseAbs().maxCoeff() > limits::kSsscBlowUp ||
                       out.Psi.diagonal().maxCoeff() > limits::kSsscBlowUp;
    if (blown) {
      out.mu = Eigen::VectorXd::Ones(H);
      out.Psi = Eigen::MatrixXd::Identity(H, H);
      out.mu_psi_frozen = true;
      report.froze_mu_psi = true;
    }
  }

  double residual = 0.0;
  const bool printed = sigma_update_ == SsscSigmaUpdate::kAsPrinted;
  if (!masked_) {
    if (printed)
      residual = yy_rows_.sum() - (out.W * sum_mean_outer_).cwiseProduct(out.W).sum();
    else
      residual = yy_rows_.sum() - 2.0 * out.W.cwiseProduct(cross_).sum() +
                 (out.W * sum_szsz_).cwiseProduct(out.W).sum();
  } else {
    for (std::size_t d = 0; d < D_; ++d) {
      const auto di = static_cast<Eigen::Index>(d);
      const auto w = out.W.row(di);
      if (printed)
        residual += yy_rows_[di] - (w * row_mean_outer_[d] * w.transpose())(0, 0);
      else
        residual += yy_rows_[di] - 2.0 * w.dot(cross_.row(di)) + (w * row_szsz_[d] * w.transpose())(0, 0);
    }
  }
  out.sigma2 = std::max(residual / static_cast<double>(observed_), limits::kSigma2Floor);
  return out;
}

}  // namespace evoem
