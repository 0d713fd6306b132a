#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Core>

namespace evoem {

enum class ModelKind { kNoisyOr, kBsc, kSssc };

std::string_view to_string(ModelKind kind);
// Accepts "nor"/"noisy-or", "bsc"/"ebsc", "sssc"/"es3c".
ModelKind parse_model_kind(std::string_view name);

// Numerical floors and sentinels shared by all models.
namespace limits {
inline constexpr double kLargeNeg = -1e30;    // noisy-OR lpj of s = 0 with y != 0
inline constexpr double kWeightClamp = 1e-6;  // noisy-OR W in [eps, 1 - eps]
inline constexpr double kSigma2Floor = 1e-9;
inline constexpr double kPriorClamp = 1e-5;   // pi in [eps, 1 - eps]
inline constexpr double kRidgeScale = 1e-9;   // ridge = scale * trace / H on singular Gram matrices
inline constexpr double kSsscBlowUp = 1e6;    // |mu_h| or Psi_hh beyond this freezes mu/Psi
}  // namespace limits

// Binary latents, binary observables combined by the noisy-OR rule.
struct NoisyOrParams {
  Eigen::VectorXd pi;  // H
  Eigen::MatrixXd W;   // D x H, entries in [0, 1]

  std::size_t H() const noexcept { return static_cast<std::size_t>(pi.size()); }
  std::size_t D() const noexcept { return static_cast<std::size_t>(W.rows()); }
};

// Binary sparse coding: shared Bernoulli prior, linear Gaussian observables.
struct BscParams {
  double pi = 0.0;
  double sigma2 = 1.0;
  Eigen::MatrixXd W;  // D x H

  std::size_t H() const noexcept { return static_cast<std::size_t>(W.cols()); }
  std::size_t D() const noexcept { return static_cast<std::size_t>(W.rows()); }
};

// Spike-and-slab sparse coding.
struct SsscParams {
  Eigen::VectorXd pi;  // H
  double sigma2 = 1.0;
  Eigen::MatrixXd W;   // D x H
  Eigen::VectorXd mu;  // H
  Eigen::MatrixXd Psi; // H x H, symmetric positive definite
  bool mu_psi_frozen = false;

  std::size_t H() const noexcept { return static_cast<std::size_t>(pi.size()); }
  std::size_t D() const noexcept { return static_cast<std::size_t>(W.rows()); }
};

using ModelParams = std::variant<NoisyOrParams, BscParams, SsscParams>;

ModelKind kind_of(const ModelParams& p);
std::size_t latent_dim(const ModelParams& p);
std::size_t observed_dim(const ModelParams& p);

// How the SSSC observation variance is re-estimated. kAsPrinted uses the
// outer product of the expected slab means <sz><sz>^T; kExpectedResidual uses
// the full second moment <sz sz^T> (the exact expected squared residual).
enum class SsscSigmaUpdate { kAsPrinted, kExpectedResidual };

struct MStepOptions {
  bool prior_floor_inv_h = false;  // noisy-OR / SSSC: clamp pi_h >= 1/H
  SsscSigmaUpdate sssc_sigma = SsscSigmaUpdate::kAsPrinted;
};

// What the M-step had to do beyond the plain update equations.
struct MStepReport {
  bool ridge_used = false;
  bool psi_repaired = false;
  bool froze_mu_psi = false;
};

// Throws ConfigError / NumericError on violated invariants.
void validate(const NoisyOrParams& p);
void validate(const BscParams& p);
void validate(const SsscParams& p);
void validate(const ModelParams& p);

// Expected number of active units under the prior (sparsity target for
// sparseflips): sum_h pi_h, or H * pi for BSC.
double expected_active(const ModelParams& p);

}  // namespace evoem
