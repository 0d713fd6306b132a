#include <doctest.h>

#include <cmath>

#include "evoem/synthetic.hpp"

TEST_CASE("bars dictionary") {
  SUBCASE("R=5") {
    const auto W = evoem::bars_dictionary(evoem::BarsSpec::defaults(evoem::ModelKind::kBsc));
    REQUIRE(W.cols() == 10);
    for (Eigen::Index h = 0; h < 10; ++h) CHECK((W.col(h).array() != 0.0).count() == 5);
  }
  SUBCASE("R=2 covers each row and column once") {
    auto spec = evoem::BarsSpec::defaults(evoem::ModelKind::kBsc, 2);
    const Eigen::MatrixXd W = evoem::bars_dictionary(spec).cwiseAbs();
    Eigen::MatrixXd expected(4, 4);
    // Columns: row 0, row 1, column 0, column 1; pixel index row * 2 + col.
    expected << 1, 0, 1, 0,
                1, 0, 0, 1,
                0, 1, 1, 0,
                0, 1, 0, 1;
    CHECK(W == 5.0 * expected);
  }
  SUBCASE("noisy-OR amplitudes") {
    const auto W = evoem::bars_dictionary(evoem::BarsSpec::defaults(evoem::ModelKind::kNoisyOr));
    for (Eigen::Index i = 0; i < W.size(); ++i) CHECK((W.data()[i] == 0.1 || W.data()[i] == 0.8));
  }
}

TEST_CASE("bars ground truth") {
  const auto bsc = std::get<evoem::BscParams>(evoem::bars_ground_truth(evoem::BarsSpec::defaults(evoem::ModelKind::kBsc)));
  CHECK(bsc.sigma2 == 1.0);
  CHECK(bsc.pi == doctest::Approx(0.2));
  const auto sssc =
      std::get<evoem::SsscParams>(evoem::bars_ground_truth(evoem::BarsSpec::defaults(evoem::ModelKind::kSssc)));
  CHECK(sssc.mu.isZero());
  CHECK(sssc.Psi == Eigen::MatrixXd::Identity(10, 10));
}

TEST_CASE("bars per sample") {
  auto rng = evoem::make_stream(1, evoem::StreamTag::kBars);
  const std::size_t N = 5000;
  const auto bars = evoem::generate_bars_dataset(evoem::BarsSpec::defaults(evoem::ModelKind::kNoisyOr), N, rng);
  double mean = 0.0;
  for (const auto& s : bars.latents) mean += static_cast<double>(s.count());
  mean /= N;
  CHECK(std::abs(mean - 2.0) < 3.0 * std::sqrt(10 * 0.2 * 0.8 / N));
  CHECK(bars.data.size() == N);
  CHECK(bars.data.dim() == 25);
}

TEST_CASE("recovery scoring") {
  const auto spec = evoem::BarsSpec::defaults(evoem::ModelKind::kBsc);
  const auto truth = evoem::bars_ground_truth(spec);
  SUBCASE("self match") {
    const auto r = evoem::score_recovery(truth, truth);
    CHECK(r.min_correlation == doctest::Approx(1.0));
    CHECK(r.recovered(0.95) == 10);
  }
  SUBCASE("invariant to permutation and sign") {
    auto learned = std::get<evoem::BscParams>(truth);
    Eigen::MatrixXd W = learned.W;
    for (Eigen::Index h = 0; h < 10; ++h) learned.W.col(h) = (h % 3 == 0 ? -1.0 : 1.0) * W.col((h * 7) % 10);
    learned.W.conservativeResize(Eigen::NoChange, 12);
    learned.W.col(10).setConstant(0.3);
    learned.W.col(11).setLinSpaced(-1.0, 1.0);
    const auto r = evoem::score_recovery(learned, truth);
    CHECK(r.min_correlation == doctest::Approx(1.0));
  }
  SUBCASE("small perturbations keep the correlation high") {
    auto learned = std::get<evoem::BscParams>(truth);
    auto rng = evoem::make_stream(2, evoem::StreamTag::kSample);
    for (Eigen::Index i = 0; i < learned.W.size(); ++i) learned.W.data()[i] += 0.1 * evoem::standard_normal(rng);
    CHECK(evoem::score_recovery(learned, truth).min_correlation > 0.99);
  }
}
