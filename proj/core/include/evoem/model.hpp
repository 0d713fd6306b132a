#pragma once

#include <cstddef>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "evoem/binary_state.hpp"
#include "evoem/bsc.hpp"
#include "evoem/dataset.hpp"
#include "evoem/noisy_or.hpp"
#include "evoem/params.hpp"
#include "evoem/rng.hpp"
#include "evoem/sssc.hpp"

namespace evoem {

class LatentStateSet;
struct StateSetCollection;

inline NoisyOrModel make_model(const NoisyOrParams& p) { return NoisyOrModel(p); }
inline BscModel make_model(const BscParams& p) { return BscModel(p); }
inline SsscModel make_model(const SsscParams& p) { return SsscModel(p); }

// Calls f(model) with the concrete evaluator for params. The evaluator refers
// to params, so it is only valid inside f.
template <class F>
decltype(auto) with_model(const ModelParams& params, F&& f) {
  return std::visit([&](const auto& p) -> decltype(auto) { return f(make_model(p)); }, params);
}

// M-step statistics matching each evaluator.
template <class Model>
struct StatsFor;
template <>
struct StatsFor<NoisyOrModel> {
  using type = NoisyOrStats;
};
template <>
struct StatsFor<BscModel> {
  using type = BscStats;
};
template <>
struct StatsFor<SsscModel> {
  using type = SsscStats;
};

inline NoisyOrStats make_stats(const NoisyOrModel& m, bool, const MStepOptions&) { return NoisyOrStats(m.H(), m.D()); }
inline BscStats make_stats(const BscModel& m, bool masked, const MStepOptions&) { return BscStats(m.H(), m.D(), masked); }
inline SsscStats make_stats(const SsscModel& m, bool masked, const MStepOptions& o) {
  return SsscStats(m.H(), m.D(), masked, o.sssc_sigma);
}

double log_pseudo_joint(StateView s, const Datapoint& dp, const ModelParams& params);
double log_constant(const ModelParams& params, const Datapoint& dp);
// Unmasked constant, C(Theta) with all D coordinates observed.
double log_constant(const ModelParams& params);

struct SampleResult {
  DataSet data;
  std::vector<BinaryState> latents;
  RowMatrix slabs;  // SSSC only: N x H draws of z; empty otherwise
};

SampleResult sample(const ModelParams& params, std::size_t n, Rng& rng);

// One M-step from truncated posteriors over the given state sets (lpj caches
// must be valid under params). Statistics are accumulated in datapoint order.
ModelParams m_step(const DataSet& data, const StateSetCollection& sets, const ModelParams& params,
                   const MStepOptions& options = {}, MStepReport* report = nullptr);

ActiveInference sssc_active_inference(StateView s, const Datapoint& dp, const SsscParams& params);

}  // namespace evoem
