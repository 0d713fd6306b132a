#include "evoem/estimator.hpp"

#include <optional>

#include "evoem/error.hpp"
#include "evoem/learning.hpp"
#include "evoem/model.hpp"
#include "parallel.hpp"

namespace evoem {

namespace {

void check_coords(std::span<const int> coords, std::size_t D) {
  for (int d : coords)
    if (d < 0 || static_cast<std::size_t>(d) >= D)
      throw DimensionError("estimate: coordinate " + std::to_string(d) + " outside [0, " + std::to_string(D) + ")");
}

Reconstruction project(const Eigen::MatrixXd& W, const Eigen::VectorXd& latent, std::span<const int> coords) {
  Reconstruction out;
  out.coords.assign(coords.begin(), coords.end());
  out.values.reserve(coords.size());
  for (int d : coords) out.values.push_back(W.row(d).dot(latent));
  return out;
}

}  // namespace

Reconstruction estimate_bsc(const LatentStateSet& set, const BscParams& params, std::span<const int> coords) {
  if (set.H() != params.H()) throw DimensionError("estimate_bsc: state length does not match H");
  check_coords(coords, params.D());
  return project(params.W, expected_state(set), coords);
}

Reconstruction estimate_sssc(const LatentStateSet& set, const SsscParams& params, const Datapoint& dp,
                             std::span<const int> coords) {
  return estimate_sssc(set, SsscModel(params), dp, coords);
}

Reconstruction estimate_sssc(const LatentStateSet& set, const SsscModel& model, const Datapoint& dp,
                             std::span<const int> coords) {
  const SsscParams& params = model.params();
  if (set.H() != params.H()) throw DimensionError("estimate_sssc: state length does not match H");
  if (dp.dim() != params.D()) throw DimensionError("estimate_sssc: datapoint length does not match D");
  check_coords(coords, params.D());
  thread_local std::vector<double> w;
  posterior_weights(set, w);
  thread_local ActiveInference inf;
  Eigen::VectorXd sz = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.H()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (w[i] == 0.0) continue;
    model.infer(set.state(i), dp, inf, true);
    for (std::size_t a = 0; a < inf.active.size(); ++a) sz[inf.active[a]] += w[i] * inf.kappa[static_cast<Eigen::Index>(a)];
  }
  return project(params.W, sz, coords);
}

Reconstruction estimate(const LatentStateSet& set, const ModelParams& params, const Datapoint& dp,
                        std::span<const int> coords) {
  if (const auto* bsc = std::get_if<BscParams>(&params)) return estimate_bsc(set, *bsc, coords);
  if (const auto* sssc = std::get_if<SsscParams>(&params)) return estimate_sssc(set, *sssc, dp, coords);
  throw ConfigError("estimate: only BSC and SSSC models provide a data estimator");
}

std::vector<int> all_coords(std::size_t D) {
  std::vector<int> out(D);
  for (std::size_t d = 0; d < D; ++d) out[d] = static_cast<int>(d);
  return out;
}

std::vector<int> missing_coords(const Datapoint& dp) {
  std::vector<int> out;
  for (std::size_t d = 0; d < dp.dim(); ++d)
    if (!dp.observed(d)) out.push_back(static_cast<int>(d));
  return out;
}

std::vector<Reconstruction> estimate_all(const DataSet& data, const StateSetCollection& sets,
                                         const ModelParams& params, EstimateTarget target,
                                         std::size_t parallel_degree) {
  if (sets.size() != data.size()) throw DimensionError("estimate_all: one state set per datapoint required");
  std::vector<Reconstruction> out(data.size());
  const auto all = all_coords(data.dim());
  const auto blocks = detail::make_blocks(data.size());
  if (kind_of(params) == ModelKind::kNoisyOr)
    throw ConfigError("estimate: only BSC and SSSC models provide a data estimator");
  std::optional<SsscModel> sssc;
  if (const auto* p = std::get_if<SsscParams>(&params)) sssc.emplace(*p);
  detail::parallel_for(blocks.size(), resolve_threads(parallel_degree), [&](std::size_t b) {
    std::vector<int> missing;
    for (std::size_t n = blocks[b].begin; n < blocks[b].end; ++n) {
      const Datapoint dp = data.row(n);
      std::span<const int> coords = all;
      if (target == EstimateTarget::kMissing) {
        missing = missing_coords(dp);
        coords = missing;
      }
      out[n] = sssc ? estimate_sssc(sets[n], *sssc, dp, coords) : estimate(sets[n], params, dp, coords);
    }
  });
  return out;
}

}  // namespace evoem
