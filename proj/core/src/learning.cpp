#include "evoem/learning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "evoem/error.hpp"
#include "evoem/model.hpp"
#include "parallel.hpp"

namespace evoem {

void EemConfig::validate() const {
  if (S < 1) throw ConfigError("S must be at least 1");
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (log_every < 1) throw ConfigError("log_every must be at least 1");
  if (early_stop && early_stop_window < 1) throw ConfigError("early_stop_window must be at least 1");
}

void FreeEnergyTrace::push(std::size_t iteration, double value) {
  if (!points_.empty() && iteration <= points_.back().iteration)
    throw Error("FreeEnergyTrace: iterations must be strictly increasing");
  points_.push_back({iteration, value});
}

void FreeEnergyTrace::write_csv(std::ostream& out) const {
  out << "iteration,free_energy_per_datapoint\n";
  std::ostringstream line;
  line.imbue(std::locale::classic());
  line << std::setprecision(17);
  for (const auto& p : points_) {
    line.str({});
    line << p.iteration << ',' << p.free_energy_per_datapoint << '\n';
    out << line.str();
  }
}

void FreeEnergyTrace::write_csv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_csv(out);
  if (!out) throw IoError("write failed: " + path);
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max(1U, std::thread::hardware_concurrency());
}

namespace {

// Per-coordinate mean and variance over observed entries.
struct ObservedMoments {
  Eigen::VectorXd mean;
  double mean_variance = 0.0;
};

ObservedMoments observed_moments(const DataSet& data) {
  const std::size_t N = data.size(), D = data.dim();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(D));
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(D));
  Eigen::VectorXd count = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(D));
  for (std::size_t n = 0; n < N; ++n) {
    const Datapoint dp = data.row(n);
    for (std::size_t d = 0; d < D; ++d) {
      if (!dp.observed(d)) continue;
      sum[d] += dp.y[d];
      sq[d] += dp.y[d] * dp.y[d];
      count[d] += 1.0;
    }
  }
  if (count.sum() == 0.0) throw DimensionError("init_params: dataset has no observed entries");
  ObservedMoments m;
  m.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(D));
  double var_total = 0.0;
  std::size_t dims = 0;
  for (std::size_t d = 0; d < D; ++d) {
    if (count[d] == 0.0) continue;
    m.mean[d] = sum[d] / count[d];
    var_total += std::max(0.0, sq[d] / count[d] - m.mean[d] * m.mean[d]);
    ++dims;
  }
  m.mean_variance = var_total / static_cast<double>(dims);
  return m;
}

// Columns = data mean + N(0, (0.25 sigma)^2).
Eigen::MatrixXd mean_plus_noise(const ObservedMoments& m, std::size_t H, double sigma, Rng& rng) {
  const auto D = m.mean.size();
  Eigen::MatrixXd W(D, static_cast<Eigen::Index>(H));
  for (Eigen::Index h = 0; h < W.cols(); ++h)
    for (Eigen::Index d = 0; d < D; ++d) W(d, h) = m.mean[d] + 0.25 * sigma * standard_normal(rng);
  return W;
}

}  // namespace

ModelParams init_params(ModelKind kind, const DataSet& data, std::size_t H, Rng& rng) {
  if (data.size() == 0) throw DimensionError("init_params: empty dataset");
  if (H == 0) throw ConfigError("init_params: H must be positive");
  data.validate();
  const std::size_t D = data.dim();
  const double inv_h = 1.0 / static_cast<double>(H);
  switch (kind) {
    case ModelKind::kNoisyOr: {
      NoisyOrParams p;
      p.pi = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(H), inv_h);
      p.W.resize(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(H));
      for (Eigen::Index h = 0; h < p.W.cols(); ++h)
        for (Eigen::Index d = 0; d < p.W.rows(); ++d)
          p.W(d, h) = std::clamp(uniform01(rng), limits::kWeightClamp, 1.0 - limits::kWeightClamp);
      return p;
    }
    case ModelKind::kBsc: {
      const ObservedMoments m = observed_moments(data);
      BscParams p;
      p.pi = inv_h;
      p.sigma2 = std::max(m.mean_variance, limits::kSigma2Floor);
      p.W = mean_plus_noise(m, H, std::sqrt(p.sigma2), rng);
      return p;
    }
    case ModelKind::kSssc: {
      const ObservedMoments m = observed_moments(data);
      SsscParams p;
      p.sigma2 = std::max(m.mean_variance, limits::kSigma2Floor);
      p.W = mean_plus_noise(m, H, std::sqrt(p.sigma2), rng);
      p.pi.resize(static_cast<Eigen::Index>(H));
      p.mu.resize(static_cast<Eigen::Index>(H));
      for (Eigen::Index h = 0; h < p.pi.size(); ++h) p.pi[h] = 0.1 + 0.4 * uniform01(rng);
      for (Eigen::Index h = 0; h < p.mu.size(); ++h) p.mu[h] = 1.0 + 4.0 * uniform01(rng);
      p.Psi = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(H), static_cast<Eigen::Index>(H));
      return p;
    }
  }
  throw ConfigError("init_params: unknown model kind");
}

ModelParams init_params(ModelKind kind, const DataSet& data, std::size_t H, std::uint64_t seed) {
  Rng rng = make_stream(seed, StreamTag::kInitParams);
  return init_params(kind, data, H, rng);
}

StateSetCollection init_state_sets(std::size_t n, std::size_t H, std::size_t S, std::uint64_t seed, double density) {
  if (H == 0) throw ConfigError("init_state_sets: H must be positive");
  if (S == 0) throw ConfigError("init_state_sets: S must be positive");
  if (H < 63 && S > (std::size_t{1} << H))
    throw ConfigError("init_state_sets: S=" + std::to_string(S) + " exceeds the 2^" + std::to_string(H) +
                      " distinct states");
  const double p = density > 0.0 ? density : 1.0 / static_cast<double>(H);
  StateSetCollection out;
  out.H = H;
  out.S = S;
  out.sets.reserve(n);
  const std::size_t max_draws = 20 * S + 100;
  BinaryState s(H);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_stream(seed, StreamTag::kInitStates, {i});
    LatentStateSet set(H, S);
    for (std::size_t draw = 0; draw < max_draws && set.size() < S; ++draw) {
      for (std::size_t h = 0; h < H; ++h) s.set(h, uniform01(rng) < p);
      set.insert(s);
    }
    // Deterministic fill-up: states 0, 1, 2, ... read as binary numbers.
    for (std::uint64_t code = 0; set.size() < S; ++code) {
      for (std::size_t h = 0; h < H; ++h) s.set(h, h < 64 && ((code >> h) & 1U));
      set.insert(s);
    }
    out.sets.push_back(std::move(set));
  }
  return out;
}

EemState eem_start(const DataSet& data, ModelParams params, const EemConfig& eem) {
  eem.validate();
  data.validate();
  validate(params);
  if (observed_dim(params) != data.dim())
    throw DimensionError("eem_start: data has " + std::to_string(data.dim()) + " coordinates, model expects " +
                         std::to_string(observed_dim(params)));
  const std::size_t H = latent_dim(params);
  EemState state;
  state.seed = eem.seed;
  state.sets = init_state_sets(data.size(), H, eem.S, eem.seed);
  state.params = std::move(params);
  const auto blocks = detail::make_blocks(data.size());
  with_model(state.params, [&](const auto& model) {
    detail::parallel_for(blocks.size(), resolve_threads(eem.parallel_degree), [&](std::size_t b) {
      for (std::size_t n = blocks[b].begin; n < blocks[b].end; ++n) {
        const Datapoint dp = data.row(n);
        auto& set = state.sets[n];
        auto lpj = set.lpj_mutable();
        for (std::size_t i = 0; i < set.size(); ++i) lpj[i] = model.lpj(set.state(i), dp);
      }
    });
  });
  return state;
}

namespace {

struct BlockEStep {
  double before = 0.0;
  double after = 0.0;
  double min_gain = std::numeric_limits<double>::infinity();
  std::size_t replaced = 0;
  std::size_t evaluations = 0;
};

}  // namespace

IterationReport eem_step(EemState& state, const DataSet& data, const EemConfig& eem, const EaConfig& ea) {
  const std::size_t N = data.size();
  if (state.sets.size() != N) throw DimensionError("eem_step: one state set per datapoint required");
  const std::size_t t = state.iteration + 1;
  const std::size_t threads = resolve_threads(eem.parallel_degree);
  const auto blocks = detail::make_blocks(N);
  const bool masked = data.has_mask();
  const double target = expected_active(state.params);
  const auto iteration_ctx = static_cast<long>(t);

  IterationReport report;
  report.iteration = t;
  std::vector<BlockEStep> estep(blocks.size());

  ModelParams next = with_model(state.params, [&](const auto& model) -> ModelParams {
    using Model = std::decay_t<decltype(model)>;
    using Stats = typename StatsFor<Model>::type;
    std::vector<std::optional<Stats>> partial(blocks.size());
    detail::parallel_for(blocks.size(), threads, [&](std::size_t b) {
      Stats stats = make_stats(model, masked, eem.mstep);
      BlockEStep& acc = estep[b];
      std::vector<double> w;
      for (std::size_t n = blocks[b].begin; n < blocks[b].end; ++n) {
        const Datapoint dp = data.row(n);
        LatentStateSet& set = state.sets[n];
        try {
          Rng rng = make_stream(state.seed, StreamTag::kEvolve, {n, t});
          const EvolveResult evolved = evolve_with(
              set, [&](StateView s) { return model.lpj(s, dp); }, ea, target, rng);
          const UpdateReport upd = update_set_in_place(set, evolved.candidates);
          const double c = model.log_constant(dp);
          acc.before += upd.lse_before + c;
          acc.after += upd.lse_after + c;
          acc.min_gain = std::min(acc.min_gain, upd.lse_after - upd.lse_before);
          acc.replaced += upd.replaced;
          acc.evaluations += evolved.evaluations;
          posterior_weights(set, w);
          stats.accumulate(model, dp, set, w);
        } catch (const NumericError& e) {
          throw e.with_context(iteration_ctx, static_cast<long>(n));
        }
      }
      partial[b].emplace(std::move(stats));
    });
    Stats total = std::move(*partial.front());
    for (std::size_t b = 1; b < partial.size(); ++b) total.merge(*partial[b]);
    try {
      return total.finalize(model.params(), eem.mstep, report.mstep);
    } catch (const NumericError& e) {
      throw e.with_context(iteration_ctx, -1);
    }
  });
  state.params = std::move(next);

  const double inv_n = 1.0 / static_cast<double>(N);
  report.min_estep_gain = std::numeric_limits<double>::infinity();
  for (const auto& acc : estep) {
    report.free_energy_before_estep += acc.before;
    report.free_energy_after_estep += acc.after;
    report.min_estep_gain = std::min(report.min_estep_gain, acc.min_gain);
    report.replaced += acc.replaced;
    report.evaluations += acc.evaluations;
  }
  report.free_energy_before_estep *= inv_n;
  report.free_energy_after_estep *= inv_n;

  // Refresh every cached lpj under the new parameters and evaluate F.
  std::vector<double> partial_f(blocks.size(), 0.0);
  with_model(state.params, [&](const auto& model) {
    detail::parallel_for(blocks.size(), threads, [&](std::size_t b) {
      double f = 0.0;
      for (std::size_t n = blocks[b].begin; n < blocks[b].end; ++n) {
        const Datapoint dp = data.row(n);
        LatentStateSet& set = state.sets[n];
        try {
          auto lpj = set.lpj_mutable();
          for (std::size_t i = 0; i < set.size(); ++i) lpj[i] = model.lpj(set.state(i), dp);
        } catch (const NumericError& e) {
          throw e.with_context(iteration_ctx, static_cast<long>(n));
        }
        f += logsumexp(set.lpj()) + model.log_constant(dp);
      }
      partial_f[b] = f;
    });
  });
  double F = 0.0;
  for (double f : partial_f) F += f;
  report.free_energy = F * inv_n;
  if (!std::isfinite(report.free_energy)) throw NumericError("free energy is not finite", iteration_ctx);

  state.iteration = t;
  return report;
}

bool eem_continue(EemState& state, const DataSet& data, const EemConfig& eem, const EaConfig& ea,
                  const EemCallbacks& callbacks) {
  eem.validate();
  ea.validate(eem.S, latent_dim(state.params));
  if (!state.sets.sets.empty() && state.sets.sets.front().size() != eem.S)
    throw ConfigError("eem_continue: state sets hold " + std::to_string(state.sets.sets.front().size()) +
                      " states but S=" + std::to_string(eem.S));
  std::size_t quiet = 0;
  double last = state.trace.empty() ? std::numeric_limits<double>::quiet_NaN() : state.trace.back().free_energy_per_datapoint;
  while (state.iteration < eem.iterations) {
    const IterationReport report = eem_step(state, data, eem, ea);
    if (report.mstep.froze_mu_psi && callbacks.on_warning)
      callbacks.on_warning("iteration " + std::to_string(report.iteration) +
                           ": SSSC mu/Psi exceeded the blow-up guard; continuing with mu = 1, Psi = I frozen");
    const bool final_iteration = state.iteration == eem.iterations;
    bool stop = false;
    if (eem.early_stop) {
      quiet = std::isfinite(last) && std::abs(report.free_energy - last) < eem.early_stop_tol ? quiet + 1 : 0;
      stop = quiet >= eem.early_stop_window;
    }
    last = report.free_energy;
    if (report.iteration % eem.log_every == 0 || final_iteration || stop)
      state.trace.push(report.iteration, report.free_energy);
    if (callbacks.on_iteration) callbacks.on_iteration(report, state);
    if (stop) return true;
  }
  return false;
}

EemState eem_fit(const DataSet& data, ModelKind kind, std::size_t H, const EemConfig& eem, const EaConfig& ea,
                 const EemCallbacks& callbacks) {
  EemState state = eem_start(data, init_params(kind, data, H, eem.seed), eem);
  eem_continue(state, data, eem, ea, callbacks);
  return state;
}

}  // namespace evoem
