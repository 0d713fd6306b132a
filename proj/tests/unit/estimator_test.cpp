#include <doctest.h>

#include "evoem/estimator.hpp"
#include "evoem/model.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using evoem::BinaryState;

TEST_CASE("BSC estimate") {
  evoem::Rng rng(50);
  const std::size_t H = 6, D = 5;
  const auto p = evoem::testing::random_bsc(H, D, rng);
  const Eigen::VectorXd y = evoem::testing::random_matrix(D, 1, rng);
  const auto data = evoem::testing::dataset_from(y.transpose());
  const auto coords = evoem::all_coords(D);
  SUBCASE("singleton set") {
    const auto s = BinaryState::from_string("010110");
    const auto r = evoem::estimate_bsc(evoem::testing::set_of({s}, data.row(0), p), p, coords);
    const Eigen::VectorXd expected = p.W * evoem::oracle::to_vec(evoem::testing::to_ints(s));
    for (std::size_t d = 0; d < D; ++d) CHECK(r.values[d] == doctest::Approx(expected[static_cast<Eigen::Index>(d)]));
  }
  SUBCASE("exhaustive set equals the posterior predictive mean") {
    const auto set = evoem::testing::set_of(evoem::testing::every_state(H), data.row(0), p);
    const auto r = evoem::estimate_bsc(set, p, coords);
    const Eigen::VectorXd expected =
        p.W * evoem::oracle::expect_s(evoem::oracle::posterior(p, y, evoem::oracle::all_states(H)));
    for (std::size_t d = 0; d < D; ++d)
      CHECK(std::abs(r.values[d] - expected[static_cast<Eigen::Index>(d)]) <= 1e-10 * (1 + std::abs(expected[static_cast<Eigen::Index>(d)])));
  }
  SUBCASE("zero dictionary") {
    auto zero = p;
    zero.W.setZero();
    const auto set = evoem::testing::set_of(evoem::testing::every_state(H), data.row(0), zero);
    for (double v : evoem::estimate_bsc(set, zero, coords).values) CHECK(v == 0.0);
  }
}

TEST_CASE("SSSC estimate") {
  evoem::Rng rng(51);
  const std::size_t H = 6, D = 6;
  const auto p = evoem::testing::random_sssc(H, D, rng);
  const Eigen::VectorXd y = evoem::testing::random_matrix(D, 1, rng, 2.0);
  evoem::MaskMatrix M = evoem::MaskMatrix::Ones(1, static_cast<Eigen::Index>(D));
  M(0, 2) = 0;
  M(0, 5) = 0;
  SUBCASE("zero state only") {
    const auto data = evoem::testing::dataset_from(y.transpose());
    const auto r = evoem::estimate_sssc(evoem::testing::set_of({BinaryState(H)}, data.row(0), p), p, data.row(0),
                                        evoem::all_coords(D));
    for (double v : r.values) CHECK(v == 0.0);
  }
  SUBCASE("exhaustive set equals the dense posterior predictive mean") {
    for (bool masked : {false, true}) {
      const evoem::DataSet data = masked ? evoem::DataSet(evoem::RowMatrix(y.transpose()), M)
                                         : evoem::DataSet(evoem::RowMatrix(y.transpose()));
      std::vector<std::uint8_t> mask;
      if (masked) mask.assign(M.data(), M.data() + D);
      const auto set = evoem::testing::set_of(evoem::testing::every_state(H), data.row(0), p);
      const auto coords = masked ? evoem::missing_coords(data.row(0)) : evoem::all_coords(D);
      const auto r = evoem::estimate_sssc(set, p, data.row(0), coords);
      const auto post = evoem::oracle::posterior(p, y, evoem::oracle::all_states(H), mask);
      Eigen::VectorXd sz = Eigen::VectorXd::Zero(H);
      for (std::size_t i = 0; i < post.states.size(); ++i)
        sz += post.q[i] * evoem::oracle::slab_moments(p, post.states[i], y, mask).kappa;
      const Eigen::VectorXd expected = p.W * sz;
      REQUIRE(r.coords == coords);
      for (std::size_t i = 0; i < coords.size(); ++i)
        CHECK(std::abs(r.values[i] - expected[coords[i]]) <= 1e-8 * (1 + std::abs(expected[coords[i]])));
    }
  }
  SUBCASE("huge noise variance pulls the slab to its prior mean") {
    auto wide = p;
    wide.sigma2 = 1e12;
    wide.Psi = Eigen::MatrixXd::Identity(H, H);
    const auto data = evoem::testing::dataset_from(y.transpose());
    const auto set = evoem::testing::set_of(evoem::testing::every_state(H), data.row(0), wide);
    const auto r = evoem::estimate_sssc(set, wide, data.row(0), evoem::all_coords(D));
    // Posterior over s tends to the prior, kappa_s to s * mu.
    const Eigen::VectorXd expected = wide.W * wide.pi.cwiseProduct(wide.mu);
    for (std::size_t d = 0; d < D; ++d) CHECK(r.values[d] == doctest::Approx(expected[static_cast<Eigen::Index>(d)]).epsilon(1e-4));
  }
}

TEST_CASE("noisy-OR estimates are refused") {
  evoem::Rng rng(52);
  const evoem::ModelParams p = evoem::testing::random_noisy_or(3, 4, rng);
  const auto data = evoem::testing::dataset_from(Eigen::MatrixXd::Zero(1, 4));
  const auto set = evoem::testing::set_of({BinaryState(3)}, data.row(0), p);
  CHECK_THROWS_AS(evoem::estimate(set, p, data.row(0), evoem::all_coords(4)), evoem::Error);
}
