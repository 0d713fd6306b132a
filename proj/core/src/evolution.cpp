#include "evoem/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "evoem/error.hpp"
#include "evoem/model.hpp"

namespace evoem {

std::string EaConfig::tag() const {
  std::string out = selection == Selection::kFitParents ? "fitparents" : "randparents";
  if (crossover) out += "-cross";
  out += mutation == Mutation::kRandFlips ? "-randflips" : "-sparseflips";
  return out;
}

void EaConfig::apply_tag(std::string_view tag) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (start <= tag.size()) {
    const std::size_t dash = tag.find('-', start);
    const std::size_t end = dash == std::string_view::npos ? tag.size() : dash;
    parts.push_back(tag.substr(start, end - start));
    if (dash == std::string_view::npos) break;
    start = dash + 1;
  }
  auto fail = [&] {
    throw ConfigError("invalid EA tag '" + std::string(tag) +
                      "'; expected {fitparents|randparents}[-cross]-{randflips|sparseflips}");
  };
  if (parts.size() < 2 || parts.size() > 3) fail();
  if (parts.front() == "fitparents")
    selection = Selection::kFitParents;
  else if (parts.front() == "randparents")
    selection = Selection::kRandParents;
  else
    fail();
  if (parts.size() == 3 && parts[1] != "cross") fail();
  crossover = parts.size() == 3;
  const std::string_view m = parts.back();
  if (m == "randflips" || m == "randflip")
    mutation = Mutation::kRandFlips;
  else if (m == "sparseflips" || m == "sparseflip")
    mutation = Mutation::kSparseFlips;
  else
    fail();
}

EaConfig EaConfig::from_tag(std::string_view tag) {
  EaConfig config;
  config.apply_tag(tag);
  return config;
}

std::size_t EaConfig::children_per_generation() const {
  return crossover ? n_parents * (n_parents - 1) : n_parents * n_mutations;
}

void EaConfig::validate(std::size_t S, std::size_t H) const {
  if (n_parents < 1 || n_parents > S)
    throw ConfigError("N_p must satisfy 1 <= N_p <= S (N_p=" + std::to_string(n_parents) + ", S=" + std::to_string(S) +
                      ")");
  if (!crossover && (n_mutations < 1 || n_mutations > H))
    throw ConfigError("N_m must satisfy 1 <= N_m <= H (N_m=" + std::to_string(n_mutations) + ", H=" + std::to_string(H) +
                      ")");
  if (n_generations < 1) throw ConfigError("N_g must be at least 1");
  if (crossover && H < 2) throw ConfigError("crossover requires H >= 2");
  if (crossover && n_parents < 2) throw ConfigError("crossover requires N_p >= 2");
  if (p_bf < 0.0 || p_bf > 1.0 || std::isnan(p_bf)) throw ConfigError("p_bf must lie in [0, 1]");
}

std::vector<double> fitness(std::span<const double> lpj) {
  double lo = 0.0;
  bool any = false;
  for (double v : lpj) {
    if (v <= limits::kLargeNeg) continue;
    lo = any ? std::min(lo, v) : v;
    any = true;
  }
  const double offset = std::abs(2.0 * lo) + kFitnessFloor;
  std::vector<double> f(lpj.size());
  for (std::size_t i = 0; i < lpj.size(); ++i) f[i] = lpj[i] <= limits::kLargeNeg ? kFitnessFloor : lpj[i] + offset;
  return f;
}

std::vector<std::size_t> select_parents(std::span<const double> lpj, std::size_t n, Selection mode, Rng& rng) {
  const std::size_t size = lpj.size();
  if (n > size)
    throw ConfigError("select_parents: population of " + std::to_string(size) + " is smaller than N_p=" +
                      std::to_string(n));
  std::vector<std::size_t> pool(size);
  for (std::size_t i = 0; i < size; ++i) pool[i] = i;
  std::vector<std::size_t> out;
  out.reserve(n);

  if (mode == Selection::kRandParents) {
    // Partial Fisher-Yates.
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(uniform_index(rng, size - k));
      std::swap(pool[k], pool[j]);
      out.push_back(pool[k]);
    }
    return out;
  }

  std::vector<double> weight = fitness(lpj);
  double total = 0.0;
  for (double w : weight) total += w;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t pick = size;
    std::size_t last_live = size;
    for (std::size_t i = 0; i < size; ++i) {
      if (weight[i] <= 0.0) continue;
      last_live = i;
      acc += weight[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    if (pick == size) pick = last_live;  // rounding at the upper end
    out.push_back(pick);
    total -= weight[pick];
    weight[pick] = 0.0;
    if (!(total > 0.0)) {  // recompute to shed accumulated rounding
      total = 0.0;
      for (double w : weight) total += w;
    }
  }
  return out;
}

std::pair<BinaryState, BinaryState> crossover_pair(const BinaryState& a, const BinaryState& b, std::size_t c) {
  if (a.size() != b.size()) throw DimensionError("crossover: parents differ in length");
  if (c < 1 || c >= a.size()) throw ConfigError("crossover: point must lie in [1, H-1]");
  BinaryState x = a;
  BinaryState y = b;
  auto xw = x.words();
  auto yw = y.words();
  const std::size_t word = c / kWordBits;
  const std::size_t bit = c % kWordBits;
  // Swap bits [c, H): partial word first, then whole words.
  const Word high = bit == 0 ? ~Word{0} : ~((Word{1} << bit) - 1);
  const Word diff = (xw[word] ^ yw[word]) & high;
  xw[word] ^= diff;
  yw[word] ^= diff;
  for (std::size_t w = word + 1; w < xw.size(); ++w) std::swap(xw[w], yw[w]);
  return {std::move(x), std::move(y)};
}

std::vector<BinaryState> crossover(std::span<const BinaryState> parents, Rng& rng) {
  if (parents.size() < 2) throw ConfigError("crossover: at least two parents required");
  const std::size_t H = parents.front().size();
  if (H < 2) throw ConfigError("crossover requires H >= 2");
  std::vector<BinaryState> children;
  children.reserve(parents.size() * (parents.size() - 1));
  for (std::size_t i = 0; i < parents.size(); ++i) {
    for (std::size_t j = i + 1; j < parents.size(); ++j) {
      const std::size_t c = 1 + static_cast<std::size_t>(uniform_index(rng, H - 1));
      auto [x, y] = crossover_pair(parents[i], parents[j], c);
      children.push_back(std::move(x));
      children.push_back(std::move(y));
    }
  }
  return children;
}

FlipProbabilities sparseflip_probabilities(std::size_t H, std::size_t active, double p_bf, double target) {
  if (H == 0) return {};
  const double h = static_cast<double>(H);
  const double k = static_cast<double>(active);
  FlipProbabilities p;
  // Solve k p1 + (H-k) p0 = H p_bf (mean flip rate) and
  // k - k p1 + (H-k) p0 = target (expected on bits afterwards).
  if (active == 0) {
    p.p0 = target / h + p_bf;
  } else if (active == H) {
    p.p1 = (h - target) / h + p_bf;
  } else {
    p.p0 = (target + h * p_bf - k) / (2.0 * (h - k));
    p.p1 = (h * p_bf - target + k) / (2.0 * k);
  }
  p.p0 = std::clamp(p.p0, 0.0, 1.0);
  p.p1 = std::clamp(p.p1, 0.0, 1.0);
  return p;
}

void flip_random_bit(BinaryState& s, Rng& rng) {
  if (s.size() == 0) return;
  s.flip(static_cast<std::size_t>(uniform_index(rng, s.size())));
}

void sparse_flip(BinaryState& s, double p_bf, double target, Rng& rng) {
  const std::size_t H = s.size();
  const FlipProbabilities p = sparseflip_probabilities(H, s.count(), p_bf, target);
  auto words = s.words();
  for (std::size_t i = 0; i < words.size(); ++i) {
    const Word w = words[i];
    const std::size_t bits = std::min(kWordBits, H - i * kWordBits);
    Word mask = 0;
    for (std::size_t b = 0; b < bits; ++b) {
      const double prob = (w >> b) & 1U ? p.p1 : p.p0;
      if (uniform01(rng) < prob) mask |= Word{1} << b;
    }
    words[i] = w ^ mask;
  }
}

void mutate(std::vector<BinaryState>& children, const EaConfig& config, double target, Rng& rng,
            bool after_crossover) {
  if (children.empty()) return;
  const std::size_t H = children.front().size();
  const double p_bf = config.p_bf > 0.0 ? config.p_bf : 1.0 / static_cast<double>(std::max<std::size_t>(H, 1));
  for (auto& child : children) {
    if (config.mutation == Mutation::kRandFlips) {
      flip_random_bit(child, rng);
    } else {
      if (after_crossover && config.cross_sparse == CrossSparseMode::kAugment) flip_random_bit(child, rng);
      sparse_flip(child, p_bf, target, rng);
    }
  }
}

EvolveResult evolve(const LatentStateSet& set, const ModelParams& params, const Datapoint& dp, const EaConfig& config,
                    Rng& rng) {
  if (set.H() != latent_dim(params)) throw DimensionError("evolve: state set length does not match H");
  const double target = expected_active(params);
  return with_model(params, [&](const auto& model) {
    return evolve_with(
        set, [&](StateView s) { return model.lpj(s, dp); }, config, target, rng);
  });
}

}  // namespace evoem
