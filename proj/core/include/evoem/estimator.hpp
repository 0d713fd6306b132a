#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evoem/dataset.hpp"
#include "evoem/params.hpp"
#include "evoem/sssc.hpp"
#include "evoem/state_set.hpp"

namespace evoem {

// Posterior-predictive estimates of selected coordinates of one datapoint.
struct Reconstruction {
  std::vector<double> values;  // one per coordinate in coords
  std::vector<int> coords;     // estimated coordinate indices
};

// y_d = W_d <s> under the truncated posterior of the set.
Reconstruction estimate_bsc(const LatentStateSet& set, const BscParams& params, std::span<const int> coords);

// y_d = W_d sum_s w(s) kappa_s, with kappa_s computed from the observed
// coordinates of dp.
Reconstruction estimate_sssc(const LatentStateSet& set, const SsscParams& params, const Datapoint& dp,
                             std::span<const int> coords);
// Same with a prepared evaluator (avoids per-call precomputation).
Reconstruction estimate_sssc(const LatentStateSet& set, const SsscModel& model, const Datapoint& dp,
                             std::span<const int> coords);

// Dispatches on the model kind (noisy-OR is not supported and throws).
Reconstruction estimate(const LatentStateSet& set, const ModelParams& params, const Datapoint& dp,
                        std::span<const int> coords);

// All coordinates 0..D-1, or the unobserved coordinates of dp.
std::vector<int> all_coords(std::size_t D);
std::vector<int> missing_coords(const Datapoint& dp);

// Estimates for every datapoint: all coordinates (denoising) or only the
// missing ones (inpainting, requires a mask).
enum class EstimateTarget { kAll, kMissing };
std::vector<Reconstruction> estimate_all(const DataSet& data, const StateSetCollection& sets,
                                         const ModelParams& params, EstimateTarget target,
                                         std::size_t parallel_degree = 1);

}  // namespace evoem
