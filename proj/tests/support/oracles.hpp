#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Everything here works on dense matrices and explicit enumeration of
// all 2^H latent states; nothing calls into the library's numerical kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "evoem/params.hpp"

namespace evoem::oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline std::vector<int> bits_of(unsigned long long code, std::size_t H) {
  std::vector<int> s(H);
  for (std::size_t h = 0; h < H; ++h) s[h] = static_cast<int>((code >> h) & 1ULL);
  return s;
}

inline std::vector<int> observed_rows(const Vec& y, const std::vector<std::uint8_t>& mask) {
  std::vector<int> rows;
  for (Eigen::Index d = 0; d < y.size(); ++d)
    if (mask.empty() || mask[static_cast<std::size_t>(d)]) rows.push_back(static_cast<int>(d));
  return rows;
}

inline double log_bernoulli(const std::vector<int>& s, const Vec& pi) {
  double out = 0.0;
  for (std::size_t h = 0; h < s.size(); ++h) out += s[h] ? std::log(pi[static_cast<Eigen::Index>(h)])
                                                         : std::log1p(-pi[static_cast<Eigen::Index>(h)]);
  return out;
}

// log N(x; m, C) by dense Cholesky.
inline double log_gauss(const Vec& x, const Vec& m, const Mat& C) {
  Eigen::LLT<Mat> llt(C);
  const Vec r = x - m;
  const Vec a = llt.matrixL().solve(r);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < C.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + logdet + a.squaredNorm());
}

// Exact log p(s, y_obs | Theta), straight from the generative definitions.
inline double log_joint(const NoisyOrParams& p, const std::vector<int>& s, const Vec& y,
                        const std::vector<std::uint8_t>& mask = {}) {
  double out = log_bernoulli(s, p.pi);
  for (int d : observed_rows(y, mask)) {
    double off = 1.0;
    for (std::size_t h = 0; h < s.size(); ++h)
      if (s[h]) off *= 1.0 - p.W(d, static_cast<Eigen::Index>(h));
    const double on = 1.0 - off;
    if (y[d] != 0.0)
      out += on > 0.0 ? std::log(on) : -1e300;
    else
      out += off > 0.0 ? std::log(off) : -1e300;
  }
  return out;
}

inline double log_joint(const BscParams& p, const std::vector<int>& s, const Vec& y,
                        const std::vector<std::uint8_t>& mask = {}) {
  double out = 0.0;
  for (int h : s) out += h ? std::log(p.pi) : std::log1p(-p.pi);
  Vec sv(static_cast<Eigen::Index>(s.size()));
  for (std::size_t h = 0; h < s.size(); ++h) sv[static_cast<Eigen::Index>(h)] = s[h];
  const Vec mean = p.W * sv;
  for (int d : observed_rows(y, mask))
    out += -0.5 * std::log(2.0 * std::numbers::pi * p.sigma2) - 0.5 * (y[d] - mean[d]) * (y[d] - mean[d]) / p.sigma2;
  return out;
}

// Dense marginal over z: y_obs ~ N(W_s mu_s, sigma^2 I + W_s Psi_s W_s^T).
struct DenseSlab {
  std::vector<int> active;
  Mat Ws;   // observed rows x active
  Vec mu_s;
  Mat Psi_s;
  Vec y_obs;
  Mat C;
};

inline DenseSlab dense_slab(const SsscParams& p, const std::vector<int>& s, const Vec& y,
                            const std::vector<std::uint8_t>& mask) {
  DenseSlab out;
  for (std::size_t h = 0; h < s.size(); ++h)
    if (s[h]) out.active.push_back(static_cast<int>(h));
  const auto rows = observed_rows(y, mask);
  const auto k = static_cast<Eigen::Index>(out.active.size());
  const auto D = static_cast<Eigen::Index>(rows.size());
  out.Ws = Mat::Zero(D, k);
  out.mu_s = Vec::Zero(k);
  out.Psi_s = Mat::Zero(k, k);
  out.y_obs = Vec::Zero(D);
  for (Eigen::Index i = 0; i < D; ++i) {
    out.y_obs[i] = y[rows[static_cast<std::size_t>(i)]];
    for (Eigen::Index a = 0; a < k; ++a) out.Ws(i, a) = p.W(rows[static_cast<std::size_t>(i)], out.active[a]);
  }
  for (Eigen::Index a = 0; a < k; ++a) {
    out.mu_s[a] = p.mu[out.active[a]];
    for (Eigen::Index b = 0; b < k; ++b) out.Psi_s(a, b) = p.Psi(out.active[a], out.active[b]);
  }
  out.C = p.sigma2 * Mat::Identity(D, D) + out.Ws * out.Psi_s * out.Ws.transpose();
  return out;
}

inline double log_joint(const SsscParams& p, const std::vector<int>& s, const Vec& y,
                        const std::vector<std::uint8_t>& mask = {}) {
  const DenseSlab g = dense_slab(p, s, y, mask);
  return log_bernoulli(s, p.pi) + log_gauss(g.y_obs, g.Ws * g.mu_s, g.C);
}

// Posterior moments of the slab z_s given y_obs by Gaussian conditioning on
// the joint of (z_s, y_obs), embedded into H dimensions.
struct SlabMoments {
  Vec kappa;  // H
  Mat Lambda; // H x H, zero outside the active block
};

inline SlabMoments slab_moments(const SsscParams& p, const std::vector<int>& s, const Vec& y,
                                const std::vector<std::uint8_t>& mask = {}) {
  const DenseSlab g = dense_slab(p, s, y, mask);
  const auto H = static_cast<Eigen::Index>(s.size());
  SlabMoments out{Vec::Zero(H), Mat::Zero(H, H)};
  if (g.active.empty()) return out;
  const Mat cross = g.Psi_s * g.Ws.transpose();  // Cov(z_s, y)
  const Eigen::LLT<Mat> llt(g.C);
  const Vec kappa = g.mu_s + cross * llt.solve(g.y_obs - g.Ws * g.mu_s);
  const Mat Lambda = g.Psi_s - cross * llt.solve(cross.transpose());
  for (std::size_t a = 0; a < g.active.size(); ++a) {
    out.kappa[g.active[a]] = kappa[static_cast<Eigen::Index>(a)];
    for (std::size_t b = 0; b < g.active.size(); ++b)
      out.Lambda(g.active[a], g.active[b]) = Lambda(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }
  return out;
}

inline double log_joint_any(const ModelParams& params, const std::vector<int>& s, const Vec& y,
                            const std::vector<std::uint8_t>& mask = {}) {
  return std::visit([&](const auto& p) { return log_joint(p, s, y, mask); }, params);
}

inline double lse(const std::vector<double>& v) {
  double m = -INFINITY;
  for (double x : v) m = std::max(m, x);
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

// Posterior over an explicit list of states (all 2^H by default).
struct Posterior {
  std::vector<std::vector<int>> states;
  std::vector<double> log_joint;
  std::vector<double> q;
  double log_evidence = 0.0;  // log sum_s p(s, y) over the listed states
};

inline Posterior posterior(const ModelParams& params, const Vec& y, const std::vector<std::vector<int>>& states,
                           const std::vector<std::uint8_t>& mask = {}) {
  Posterior out;
  out.states = states;
  for (const auto& s : states) out.log_joint.push_back(log_joint_any(params, s, y, mask));
  out.log_evidence = lse(out.log_joint);
  for (double l : out.log_joint) out.q.push_back(std::exp(l - out.log_evidence));
  return out;
}

inline std::vector<std::vector<int>> all_states(std::size_t H) {
  std::vector<std::vector<int>> out;
  for (unsigned long long c = 0; c < (1ULL << H); ++c) out.push_back(bits_of(c, H));
  return out;
}

inline Vec to_vec(const std::vector<int>& s) {
  Vec v(static_cast<Eigen::Index>(s.size()));
  for (std::size_t h = 0; h < s.size(); ++h) v[static_cast<Eigen::Index>(h)] = s[h];
  return v;
}

inline Vec expect_s(const Posterior& post) {
  Vec out = Vec::Zero(static_cast<Eigen::Index>(post.states.front().size()));
  for (std::size_t i = 0; i < post.states.size(); ++i) out += post.q[i] * to_vec(post.states[i]);
  return out;
}

inline Mat expect_ss(const Posterior& post) {
  const auto H = static_cast<Eigen::Index>(post.states.front().size());
  Mat out = Mat::Zero(H, H);
  for (std::size_t i = 0; i < post.states.size(); ++i) {
    const Vec s = to_vec(post.states[i]);
    out += post.q[i] * s * s.transpose();
  }
  return out;
}

// The bound in its entropy form, evaluated term by term: sum_s q(s) (log p(s, y) - log q(s)).
inline double free_energy_eq1(const Posterior& post) {
  double out = 0.0;
  for (std::size_t i = 0; i < post.q.size(); ++i)
    if (post.q[i] > 0.0) out += post.q[i] * (post.log_joint[i] - std::log(post.q[i]));
  return out;
}

// Exact EM update of BSC with the given per-datapoint posteriors.
inline BscParams bsc_mstep(const BscParams& old, const Mat& Y, const std::vector<Posterior>& posts) {
  const auto N = Y.rows(), D = Y.cols(), H = static_cast<Eigen::Index>(old.H());
  Mat cross = Mat::Zero(D, H), gram = Mat::Zero(H, H);
  double active = 0.0;
  for (Eigen::Index n = 0; n < N; ++n) {
    const Vec es = expect_s(posts[static_cast<std::size_t>(n)]);
    cross += Y.row(n).transpose() * es.transpose();
    gram += expect_ss(posts[static_cast<std::size_t>(n)]);
    active += es.sum();
  }
  BscParams out = old;
  out.pi = active / static_cast<double>(N * H);
  out.W = gram.transpose().ldlt().solve(cross.transpose()).transpose();
  double residual = 0.0;
  for (Eigen::Index n = 0; n < N; ++n) {
    const Posterior& post = posts[static_cast<std::size_t>(n)];
    for (std::size_t i = 0; i < post.states.size(); ++i)
      residual += post.q[i] * (Y.row(n).transpose() - out.W * to_vec(post.states[i])).squaredNorm();
  }
  out.sigma2 = residual / static_cast<double>(N * D);
  return out;
}

// SSSC update with the expectations reformulated over binary states:
// <sz> = sum q kappa, <sz sz^T> = sum q (Lambda + kappa kappa^T).
inline SsscParams sssc_mstep(const SsscParams& old, const Mat& Y, const std::vector<Posterior>& posts,
                             bool expected_residual = false) {
  const auto N = Y.rows(), D = Y.cols(), H = static_cast<Eigen::Index>(old.H());
  Vec sum_s = Vec::Zero(H), sum_sz = Vec::Zero(H);
  Mat sum_ss = Mat::Zero(H, H), sum_szsz = Mat::Zero(H, H), cross = Mat::Zero(D, H), mean_outer = Mat::Zero(H, H);
  for (Eigen::Index n = 0; n < N; ++n) {
    const Posterior& post = posts[static_cast<std::size_t>(n)];
    const Vec y = Y.row(n).transpose();
    Vec sz = Vec::Zero(H);
    Mat szsz = Mat::Zero(H, H);
    for (std::size_t i = 0; i < post.states.size(); ++i) {
      const SlabMoments m = slab_moments(old, post.states[i], y);
      sz += post.q[i] * m.kappa;
      szsz += post.q[i] * (m.Lambda + m.kappa * m.kappa.transpose());
    }
    sum_s += expect_s(post);
    sum_ss += expect_ss(post);
    sum_sz += sz;
    sum_szsz += szsz;
    cross += y * sz.transpose();
    mean_outer += sz * sz.transpose();
  }
  SsscParams out = old;
  out.pi = sum_s / static_cast<double>(N);
  out.W = sum_szsz.transpose().ldlt().solve(cross.transpose()).transpose();
  if (!old.mu_psi_frozen) {
    out.mu = sum_sz.cwiseQuotient(sum_s);
    out.Psi = (sum_szsz - sum_ss.cwiseProduct(out.mu * out.mu.transpose())).cwiseQuotient(sum_ss);
  }
  double yy = 0.0;
  for (Eigen::Index n = 0; n < N; ++n) yy += Y.row(n).squaredNorm();
  const double residual = expected_residual
                              ? yy - 2.0 * (out.W.transpose() * cross).trace() +
                                    (out.W * sum_szsz * out.W.transpose()).trace()
                              : yy - (out.W * mean_outer * out.W.transpose()).trace();
  out.sigma2 = residual / static_cast<double>(N * D);
  return out;
}

// Max absolute difference scaled by the oracle's largest magnitude.
inline double rel_diff(const Mat& a, const Mat& b) {
  const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace evoem::oracle
