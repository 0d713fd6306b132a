#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "evoem/evolution.hpp"
#include "evoem/model.hpp"
#include "test_util.hpp"

using evoem::BinaryState;
using evoem::EaConfig;

TEST_CASE("EA tags round trip") {
  for (const char* tag : {"fitparents-randflips", "randparents-randflips", "fitparents-sparseflips",
                          "randparents-sparseflips", "fitparents-cross-randflips", "randparents-cross-randflips",
                          "fitparents-cross-sparseflips", "randparents-cross-sparseflips"}) {
    CHECK(EaConfig::from_tag(tag).tag() == tag);
  }
  CHECK_THROWS_AS(EaConfig::from_tag("fitparents-bogus"), evoem::ConfigError);
  CHECK_THROWS_AS(EaConfig::from_tag("fitparents-cross"), evoem::ConfigError);
}

TEST_CASE("children per generation") {
  EaConfig c;
  c.n_parents = 5;
  c.n_mutations = 4;
  CHECK(c.children_per_generation() == 20);
  c.crossover = true;
  CHECK(c.children_per_generation() == 20);
  c.n_parents = 8;
  CHECK(c.children_per_generation() == 56);
  CHECK_THROWS_AS(c.validate(5, 10), evoem::ConfigError);
}

TEST_CASE("fitness") {
  SUBCASE("offset by twice the minimum") {
    const auto f = evoem::fitness(std::vector<double>{-10.0, -4.0});
    CHECK(f[0] == doctest::Approx(10.0));
    CHECK(f[1] == doctest::Approx(16.0));
  }
  SUBCASE("zero lpj stays positive") {
    const auto f = evoem::fitness(std::vector<double>{0.0, 0.0});
    CHECK(f[0] == evoem::kFitnessFloor);
    CHECK(f[1] == evoem::kFitnessFloor);
  }
  SUBCASE("sentinel members get the floor and do not set the offset") {
    const auto f = evoem::fitness(std::vector<double>{evoem::limits::kLargeNeg, -3.0, -1.0});
    CHECK(f[0] == evoem::kFitnessFloor);
    CHECK(f[1] == doctest::Approx(3.0));
    CHECK(f[2] == doctest::Approx(5.0));
  }
}

TEST_CASE("parent selection") {
  evoem::Rng rng(40);
  SUBCASE("whole population in both modes") {
    const std::vector<double> lpj{-1.0, -2.0, -3.0, -4.0};
    for (auto mode : {evoem::Selection::kFitParents, evoem::Selection::kRandParents}) {
      auto picked = evoem::select_parents(lpj, 4, mode, rng);
      std::sort(picked.begin(), picked.end());
      CHECK(picked == std::vector<std::size_t>{0, 1, 2, 3});
    }
  }
  SUBCASE("dominant fitness wins fitparents") {
    // Fitness {1e6, 1, 1, 1} after the offset.
    const double m = -1.0;
    const std::vector<double> lpj{1e6 - 1.0 + 2.0 * m, m, m, m};
    int hits = 0;
    for (int t = 0; t < 10000; ++t) hits += evoem::select_parents(lpj, 1, evoem::Selection::kFitParents, rng)[0] == 0;
    CHECK(hits > 9990);
  }
  SUBCASE("fitparents frequencies are proportional") {
    const std::vector<double> lpj{-1.0, -2.0, -4.0};  // fitness 7, 6, 4
    std::vector<int> counts(3, 0);
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) ++counts[evoem::select_parents(lpj, 1, evoem::Selection::kFitParents, rng)[0]];
    const double f[3] = {7.0, 6.0, 4.0};
    for (int i = 0; i < 3; ++i) {
      const double p = f[i] / 17.0;
      CHECK(std::abs(counts[i] - trials * p) < 4.0 * std::sqrt(trials * p * (1 - p)));
    }
  }
  SUBCASE("randparents is uniform") {
    const std::vector<double> lpj{0.0, -5.0, -10.0, -50.0, -100.0};
    std::vector<int> counts(5, 0);
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) ++counts[evoem::select_parents(lpj, 1, evoem::Selection::kRandParents, rng)[0]];
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - trials / 5.0) * (c - trials / 5.0) / (trials / 5.0);
    CHECK(chi2 < 18.47);  // 99.9% quantile, 4 degrees of freedom
  }
  SUBCASE("parents are distinct") {
    const std::vector<double> lpj{0.0, -0.1, -0.2, -30.0, -40.0, -50.0};
    for (int t = 0; t < 1000; ++t) {
      const auto picked = evoem::select_parents(lpj, 4, evoem::Selection::kFitParents, rng);
      CHECK(std::set<std::size_t>(picked.begin(), picked.end()).size() == 4);
    }
  }
}

TEST_CASE("crossover") {
  SUBCASE("single-point swap") {
    const auto [a, b] = evoem::crossover_pair(BinaryState::from_string("1100"), BinaryState::from_string("0011"), 2);
    CHECK(a.to_string() == "1111");
    CHECK(b.to_string() == "0000");
  }
  SUBCASE("identical parents") {
    evoem::Rng rng(41);
    const std::vector<BinaryState> parents(3, BinaryState::from_string("101101"));
    for (const auto& child : evoem::crossover(parents, rng)) CHECK(child == parents[0]);
  }
  SUBCASE("five parents give twenty children") {
    evoem::Rng rng(42);
    std::vector<BinaryState> parents;
    for (const char* s : {"10000", "01000", "00100", "00010", "00001"}) parents.push_back(BinaryState::from_string(s));
    CHECK(evoem::crossover(parents, rng).size() == 20);
  }
}

TEST_CASE("sparseflip probabilities") {
  SUBCASE("worked case") {
    const auto p = evoem::sparseflip_probabilities(10, 2, 0.1, 2.0);
    CHECK(p.p0 == 0.0625);
    CHECK(p.p1 == 0.25);
  }
  SUBCASE("target at the current count keeps the uniform rate split evenly") {
    const auto p = evoem::sparseflip_probabilities(20, 10, 0.1, 10.0);
    CHECK(p.p0 == doctest::Approx(0.1));
    CHECK(p.p1 == doctest::Approx(0.1));
  }
  SUBCASE("mean on-bit count after mutation hits the target") {
    evoem::Rng rng(43);
    const std::size_t H = 30, k = 6;
    const double target = 4.0, p_bf = 0.1;
    const auto p = evoem::sparseflip_probabilities(H, k, p_bf, target);
    CHECK(k + p.p0 * (H - k) - p.p1 * k == doctest::Approx(target));
    BinaryState base(H);
    for (std::size_t h = 0; h < k; ++h) base.set(h * 5);
    double sum = 0.0, sum2 = 0.0;
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) {
      BinaryState s = base;
      evoem::sparse_flip(s, p_bf, target, rng);
      const double c = static_cast<double>(s.count());
      sum += c;
      sum2 += c * c;
    }
    const double mean = sum / trials;
    const double se = std::sqrt((sum2 / trials - mean * mean) / trials);
    CHECK(std::abs(mean - target) < 3.0 * se);
  }
}

namespace {

evoem::LatentStateSet random_set(std::size_t H, std::size_t S, evoem::Rng& rng) {
  evoem::LatentStateSet set(H);
  while (set.size() < S) {
    BinaryState s(H);
    for (std::size_t h = 0; h < H; ++h)
      if (evoem::uniform01(rng) < 0.2) s.set(h);
    set.insert(s, -static_cast<double>(s.count()) - evoem::uniform01(rng));
  }
  return set;
}

}  // namespace

TEST_CASE("evolve counts and determinism") {
  evoem::Rng rng(44);
  const auto set = random_set(16, 10, rng);
  auto lpj = [](evoem::StateView s) { return -static_cast<double>(s.count()); };
  SUBCASE("two parents, three mutations, one generation") {
    EaConfig c = EaConfig::from_tag("fitparents-randflips");
    c.n_parents = 2;
    c.n_mutations = 3;
    c.n_generations = 1;
    evoem::Rng r(1);
    CHECK(evoem::evolve_with(set, lpj, c, 2.0, r).generated == 6);
  }
  SUBCASE("crossover, five parents, two generations") {
    EaConfig c = EaConfig::from_tag("fitparents-cross-randflips");
    c.n_parents = 5;
    c.n_generations = 2;
    evoem::Rng r(2);
    CHECK(evoem::evolve_with(set, lpj, c, 2.0, r).generated <= 40);
  }
  SUBCASE("same stream, same candidates") {
    const EaConfig c = EaConfig::from_tag("randparents-cross-sparseflips");
    evoem::Rng r1(3), r2(3);
    const auto a = evoem::evolve_with(set, lpj, c, 2.0, r1);
    const auto b = evoem::evolve_with(set, lpj, c, 2.0, r2);
    REQUIRE(a.candidates.size() == b.candidates.size());
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
      CHECK(a.candidates.state(i) == b.candidates.state(i));
      CHECK(a.candidates.lpj(i) == b.candidates.lpj(i));
    }
  }
  SUBCASE("candidates are new and unique") {
    const EaConfig c = EaConfig::from_tag("fitparents-sparseflips");
    evoem::Rng r(4);
    const auto out = evoem::evolve_with(set, lpj, c, 2.0, r);
    std::set<std::string> unique;
    for (std::size_t i = 0; i < out.candidates.size(); ++i) {
      CHECK_FALSE(set.contains(out.candidates.state(i)));
      unique.insert(out.candidates.state(i).to_string());
    }
    CHECK(unique.size() == out.candidates.size());
    CHECK(out.evaluations == out.candidates.size());
  }
}
