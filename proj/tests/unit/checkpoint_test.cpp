#include <doctest.h>

#include <sstream>

#include "evoem/checkpoint.hpp"
#include "evoem/learning.hpp"
#include "evoem/synthetic.hpp"

namespace {

evoem::EemState small_state(evoem::ModelKind kind) {
  auto rng = evoem::make_stream(1, evoem::StreamTag::kSample);
  const auto bars = evoem::generate_bars_dataset(evoem::BarsSpec::defaults(kind, 3), 40, rng);
  evoem::EemConfig eem;
  eem.S = 5;
  eem.iterations = 2;
  eem.seed = 77;
  return evoem::eem_fit(bars.data, kind, 7, eem, evoem::EaConfig{});
}

}  // namespace

TEST_CASE("checkpoint save, load, save is byte-identical") {
  for (auto kind : {evoem::ModelKind::kNoisyOr, evoem::ModelKind::kBsc, evoem::ModelKind::kSssc}) {
    const auto state = small_state(kind);
    std::stringstream first;
    evoem::save_checkpoint(first, state);
    const std::string bytes = first.str();
    CHECK(bytes.substr(0, 4) == "EEM1");
    const auto loaded = evoem::load_checkpoint(first);
    CHECK(loaded.iteration == state.iteration);
    CHECK(loaded.seed == state.seed);
    CHECK(evoem::kind_of(loaded.params) == kind);
    std::stringstream second;
    evoem::save_checkpoint(second, loaded);
    CHECK(second.str() == bytes);
  }
}

TEST_CASE("checkpoint refuses other versions and garbage") {
  std::stringstream buf;
  evoem::save_checkpoint(buf, small_state(evoem::ModelKind::kBsc));
  std::string bytes = buf.str();
  bytes[4] = 9;  // little-endian version field after the magic
  std::istringstream in(bytes);
  try {
    evoem::load_checkpoint(in);
    FAIL("expected a version error");
  } catch (const evoem::IoError& e) {
    CHECK(std::string(e.what()).find("version 9") != std::string::npos);
  }
  std::istringstream junk("not a checkpoint at all");
  CHECK_THROWS_AS(evoem::load_checkpoint(junk), evoem::IoError);
  std::istringstream cut(buf.str().substr(0, 40));
  CHECK_THROWS_AS(evoem::load_checkpoint(cut), evoem::IoError);
}
