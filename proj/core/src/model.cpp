#include "evoem/model.hpp"

#include <string>

#include "evoem/error.hpp"
#include "evoem/state_set.hpp"

namespace evoem {

namespace {

void check_dims(const Datapoint& dp, StateView s, const ModelParams& params) {
  if (dp.dim() != observed_dim(params))
    throw DimensionError("datapoint has " + std::to_string(dp.dim()) + " coordinates, model expects " +
                         std::to_string(observed_dim(params)));
  if (s.size() != latent_dim(params))
    throw DimensionError("state has " + std::to_string(s.size()) + " bits, model expects " +
                         std::to_string(latent_dim(params)));
}

}  // namespace

double log_pseudo_joint(StateView s, const Datapoint& dp, const ModelParams& params) {
  check_dims(dp, s, params);
  return with_model(params, [&](const auto& model) { return model.lpj(s, dp); });
}

double log_constant(const ModelParams& params, const Datapoint& dp) {
  return with_model(params, [&](const auto& model) { return model.log_constant(dp); });
}

double log_constant(const ModelParams& params) {
  const std::vector<double> y(observed_dim(params), 0.0);
  return log_constant(params, Datapoint{y, {}});
}

SampleResult sample(const ModelParams& params, std::size_t n, Rng& rng) {
  validate(params);
  const std::size_t D = observed_dim(params);
  const std::size_t H = latent_dim(params);
  SampleResult out;
  RowMatrix Y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(D));
  out.latents.resize(n);
  const bool sssc = std::holds_alternative<SsscParams>(params);
  if (sssc) out.slabs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(H));
  with_model(params, [&](const auto& model) {
    using M = std::decay_t<decltype(model)>;
    for (std::size_t i = 0; i < n; ++i) {
      std::span<double> y(Y.data() + i * D, D);
      if constexpr (std::is_same_v<M, SsscModel>)
        model.sample(rng, out.latents[i], std::span<double>(out.slabs.data() + i * H, H), y);
      else
        model.sample(rng, out.latents[i], y);
    }
  });
  out.data = DataSet(std::move(Y));
  return out;
}

ModelParams m_step(const DataSet& data, const StateSetCollection& sets, const ModelParams& params,
                   const MStepOptions& options, MStepReport* report) {
  if (sets.size() != data.size()) throw DimensionError("m_step: one state set per datapoint required");
  if (data.size() == 0) throw DimensionError("m_step: empty dataset");
  MStepReport local;
  ModelParams out = with_model(params, [&](const auto& model) -> ModelParams {
    auto stats = make_stats(model, data.has_mask(), options);
    std::vector<double> w;
    for (std::size_t n = 0; n < data.size(); ++n) {
      posterior_weights(sets[n], w);
      stats.accumulate(model, data.row(n), sets[n], w);
    }
    return stats.finalize(model.params(), options, local);
  });
  if (report) *report = local;
  return out;
}

ActiveInference sssc_active_inference(StateView s, const Datapoint& dp, const SsscParams& params) {
  check_dims(dp, s, ModelParams(params));
  SsscModel model(params);
  ActiveInference out;
  model.infer(s, dp, out, true);
  return out;
}

}  // namespace evoem
