#include "evoem/params.hpp"

#include <Eigen/Cholesky>

#include "evoem/error.hpp"

namespace evoem {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kNoisyOr: return "nor";
    case ModelKind::kBsc: return "bsc";
    case ModelKind::kSssc: return "sssc";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "nor" || name == "noisy-or" || name == "noisyor") return ModelKind::kNoisyOr;
  if (name == "bsc" || name == "ebsc") return ModelKind::kBsc;
  if (name == "sssc" || name == "es3c") return ModelKind::kSssc;
  throw ConfigError("unknown model kind '" + std::string(name) + "' (expected nor, bsc or sssc)");
}

ModelKind kind_of(const ModelParams& p) {
  return static_cast<ModelKind>(p.index());
}

std::size_t latent_dim(const ModelParams& p) {
  return std::visit([](const auto& m) { return m.H(); }, p);
}

std::size_t observed_dim(const ModelParams& p) {
  return std::visit([](const auto& m) { return m.D(); }, p);
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void validate(const NoisyOrParams& p) {
  require(p.H() > 0, "noisy-OR: H must be positive");
  require(static_cast<std::size_t>(p.W.cols()) == p.H(), "noisy-OR: W must be D x H");
  for (Eigen::Index h = 0; h < p.pi.size(); ++h)
    require(p.pi[h] > 0.0 && p.pi[h] < 1.0, "noisy-OR: pi_h must lie in (0,1)");
  for (Eigen::Index i = 0; i < p.W.size(); ++i)
    require(p.W.data()[i] >= 0.0 && p.W.data()[i] <= 1.0, "noisy-OR: W entries must lie in [0,1]");
}

void validate(const BscParams& p) {
  require(p.H() > 0, "BSC: H must be positive");
  require(p.pi > 0.0 && p.pi < 1.0, "BSC: pi must lie in (0,1)");
  require(p.sigma2 > 0.0, "BSC: sigma2 must be positive");
}

void validate(const SsscParams& p) {
  require(p.H() > 0, "SSSC: H must be positive");
  require(static_cast<std::size_t>(p.W.cols()) == p.H(), "SSSC: W must be D x H");
  require(static_cast<std::size_t>(p.mu.size()) == p.H(), "SSSC: mu must have length H");
  require(static_cast<std::size_t>(p.Psi.rows()) == p.H() && static_cast<std::size_t>(p.Psi.cols()) == p.H(),
          "SSSC: Psi must be H x H");
  require(p.sigma2 > 0.0, "SSSC: sigma2 must be positive");
  for (Eigen::Index h = 0; h < p.pi.size(); ++h)
    require(p.pi[h] > 0.0 && p.pi[h] < 1.0, "SSSC: pi_h must lie in (0,1)");
  if ((p.Psi - p.Psi.transpose()).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + p.Psi.cwiseAbs().maxCoeff()))
    throw NumericError("SSSC: Psi is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(p.Psi);
  if (llt.info() != Eigen::Success) throw NumericError("SSSC: Psi is not positive definite");
}

void validate(const ModelParams& p) {
  std::visit([](const auto& m) { validate(m); }, p);
}

double expected_active(const ModelParams& p) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BscParams>)
          return static_cast<double>(m.H()) * m.pi;
        else
          return m.pi.sum();
      },
      p);
}

}  // namespace evoem
