#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "app/commands.hpp"
#include "app/manifest.hpp"
#include "app/run_config.hpp"
#include "evoem/image_io.hpp"

namespace fs = std::filesystem;
using evoem::app::Origin;
using evoem::app::RunConfig;
using evoem::app::RunOptions;

namespace {

std::string data_path(const char* name) { return std::string(EVOEM_TEST_DATA_DIR) + "/" + name; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("evoem_app_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunOptions tiny_bars(const std::string& out) {
  RunOptions o;
  evoem::app::apply_preset(o.config, "bars-bsc");
  o.config.bars_N = 150;
  o.config.eem.iterations = 4;
  o.out_dir = out;
  return o;
}

}  // namespace

TEST_CASE("config files") {
  SUBCASE("unknown keys name the line") {
    RunConfig c;
    std::istringstream in("# comment\nH = 12\n\nbogus_key = 3\n");
    try {
      evoem::app::apply_config(c, in, "run.cfg");
      FAIL("expected a config error");
    } catch (const evoem::ConfigError& e) {
      CHECK(std::string(e.what()).find("run.cfg:4") != std::string::npos);
      CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
    CHECK(c.H == 12);
  }
  SUBCASE("malformed values are rejected") {
    RunConfig c;
    CHECK_THROWS_AS(evoem::app::set_value(c, "S", "many", Origin{"x", 1}), evoem::ConfigError);
    CHECK_THROWS_AS(evoem::app::set_value(c, "ea", "fitparents-nothing", Origin{"x", 1}), evoem::ConfigError);
  }
  SUBCASE("the echo feeds back to the same configuration") {
    RunConfig a;
    evoem::app::apply_preset(a, "full-house-sigma50-es3c-d8-h64");
    a.eem.seed = 99;
    RunConfig b;
    for (const auto& [k, v] : evoem::app::config_entries(a)) evoem::app::set_value(b, k, v, Origin{"echo", 0});
    CHECK(evoem::app::config_entries(a) == evoem::app::config_entries(b));
  }
}

TEST_CASE("full-scale presets carry their hyperparameters") {
  RunConfig c;
  evoem::app::apply_preset(c, "full-vanhateren-bsc");
  CHECK(c.model == evoem::ModelKind::kBsc);
  CHECK(c.H == 300);
  CHECK(c.eem.S == 200);
  CHECK(c.ea.n_parents == 10);
  CHECK(c.ea.n_generations == 4);
  CHECK(c.eem.iterations == 4000);
  CHECK(c.ea.tag() == "fitparents-cross-sparseflips");

  RunConfig d;
  evoem::app::apply_preset(d, "full-house-sigma50-es3c-h256");
  CHECK(d.H == 256);
  CHECK(d.eem.S == 60);
  CHECK(d.ea.n_parents == 6);
  CHECK(d.ea.n_mutations == 5);
  CHECK(d.ea.tag() == "fitparents-randflips");

  for (const auto& p : evoem::app::presets()) {
    RunConfig any;
    CHECK_NOTHROW(evoem::app::apply_preset(any, p.name));
  }
  CHECK_THROWS_AS(evoem::app::find_preset("no-such-preset"), evoem::ConfigError);
}

TEST_CASE("bars outputs are deterministic and the manifest echoes the EA") {
  const auto a = scratch("bars_a"), b = scratch("bars_b");
  evoem::app::run_bars(tiny_bars(a.string()));
  auto second = tiny_bars(b.string());
  second.config.eem.parallel_degree = 3;
  evoem::app::run_bars(second);
  for (const char* f : {"recovery.csv", "free_energy.csv", "iterations.csv", "checkpoint.eem"})
    CHECK(slurp(a / f) == slurp(b / f));
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(manifest["command"] == "bars");
  CHECK(manifest["config"]["ea"] == "fitparents-cross-sparseflips");
  CHECK(manifest["build_id"] == evoem::app::build_id());
  CHECK(slurp(a / "free_energy.csv").rfind("iteration,free_energy_per_datapoint\n", 0) == 0);
}

TEST_CASE("eval") {
  RunOptions o;
  o.config.clean = data_path("eval_ref.pgm");
  o.config.candidate = data_path("eval_ref.pgm");
  CHECK(std::isinf(evoem::app::run_eval(o).psnr));
  CHECK(evoem::app::format_number(evoem::app::run_eval(o).psnr) == "+inf");
  o.config.candidate = data_path("eval_mse1.pgm");
  CHECK(evoem::app::run_eval(o).psnr == doctest::Approx(48.1308).epsilon(1e-6));
  // A mask without missing pixels selects nothing.
  const auto dir = scratch("eval");
  fs::create_directories(dir);
  evoem::write_pnm((dir / "full.pgm").string(), evoem::Image(16, 16, 1, 255.0));
  o.config.corruption.mask_path = (dir / "full.pgm").string();
  CHECK_THROWS_AS(evoem::app::run_eval(o), evoem::Error);
}

TEST_CASE("inpainting edge cases") {
  const auto dir = scratch("inpaint");
  fs::create_directories(dir);
  evoem::Image clean(16, 20, 1);
  for (std::size_t i = 0; i < clean.pixels.size(); ++i) clean.pixels[i] = static_cast<double>((i * 37) % 256);
  evoem::write_pnm((dir / "clean.pgm").string(), clean);

  SUBCASE("a mask with nothing missing returns the input") {
    evoem::write_pnm((dir / "all.pgm").string(), evoem::Image(16, 20, 1, 255.0));
    RunOptions o;
    o.config.model = evoem::ModelKind::kSssc;
    o.config.clean = (dir / "clean.pgm").string();
    o.config.corruption.kind = evoem::CorruptionSpec::Kind::kMaskFile;
    o.config.corruption.mask_path = (dir / "all.pgm").string();
    const auto r = evoem::app::run_inpaint(o);
    CHECK(r.restored.pixels == r.input.pixels);
    CHECK(r.restored.pixels == clean.pixels);
  }
  SUBCASE("mask of the wrong size") {
    RunOptions o;
    o.config.model = evoem::ModelKind::kSssc;
    o.config.clean = (dir / "clean.pgm").string();
    o.config.corruption.kind = evoem::CorruptionSpec::Kind::kMaskFile;
    o.config.corruption.mask_path = data_path("eval_ref.pgm");
    CHECK_THROWS_AS(evoem::app::run_inpaint(o), evoem::DimensionError);
  }
  SUBCASE("mask fixture with a missing band restores observed pixels verbatim") {
    RunOptions o;
    o.config.model = evoem::ModelKind::kSssc;
    o.config.H = 6;
    o.config.eem.S = 6;
    o.config.eem.iterations = 3;
    o.config.patch_w = o.config.patch_h = 4;
    o.config.clean = (dir / "clean.pgm").string();
    o.config.corruption.kind = evoem::CorruptionSpec::Kind::kMaskFile;
    o.config.corruption.mask_path = data_path("mask_20x16.pgm");
    const auto r = evoem::app::run_inpaint(o);
    REQUIRE(r.mask);
    for (std::size_t p = 0; p < r.mask->size(); ++p)
      if ((*r.mask)[p]) CHECK(r.restored.pixels[p] == clean.pixels[p]);
  }
}

TEST_CASE("denoising a noisy image without reference writes no PSNR report") {
  const auto dir = scratch("denoise");
  fs::create_directories(dir);
  evoem::Image noisy(12, 12, 1);
  for (std::size_t i = 0; i < noisy.pixels.size(); ++i) noisy.pixels[i] = static_cast<double>((i * 53) % 256);
  evoem::write_pnm((dir / "noisy.pgm").string(), noisy);
  RunOptions o;
  o.config.model = evoem::ModelKind::kBsc;
  o.config.H = 6;
  o.config.eem.S = 6;
  o.config.eem.iterations = 2;
  o.config.patch_w = o.config.patch_h = 4;
  o.config.noisy = (dir / "noisy.pgm").string();
  o.out_dir = (dir / "out").string();
  const auto r = evoem::app::run_denoise(o);
  CHECK_FALSE(r.restored_psnr);
  CHECK_FALSE(fs::exists(dir / "out" / "psnr.csv"));
  CHECK(fs::exists(dir / "out" / "restored.pgm"));
  CHECK(fs::exists(dir / "out" / "restored.eemf"));
}

TEST_CASE("train reads CSV with missing cells and resumes from its checkpoint") {
  const auto dir = scratch("train");
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "data.csv");
    csv << "a,b,c\n1,0,nan\n0,1,1\n1,,1\n0,0,1\n1,1,0\n";
  }
  const auto data = evoem::app::read_data_csv((dir / "data.csv").string());
  CHECK(data.size() == 5);
  CHECK(data.dim() == 3);
  REQUIRE(data.has_mask());
  CHECK((*data.mask)(0, 2) == 0);
  CHECK((*data.mask)(2, 1) == 0);

  RunOptions o;
  o.config.model = evoem::ModelKind::kBsc;
  o.config.H = 2;
  o.config.eem.S = 3;
  o.config.eem.iterations = 2;
  o.config.ea.n_parents = 2;
  o.config.ea.n_mutations = 1;
  o.config.data = (dir / "data.csv").string();
  o.out_dir = (dir / "first").string();
  const auto first = evoem::app::run_train(o);
  o.config.checkpoint = (dir / "first" / "checkpoint.eem").string();
  o.config.eem.iterations = 4;
  o.out_dir = (dir / "second").string();
  const auto second = evoem::app::run_train(o);
  CHECK(second.iteration == 4);
  CHECK(second.trace.size() == 4);
  CHECK(second.trace.points()[1].free_energy_per_datapoint == first.trace.points()[1].free_energy_per_datapoint);
}

TEST_CASE("PSNR strides") {
  CHECK(evoem::app::psnr_strides(100) == std::vector<std::size_t>{1, 2, 5, 10, 20, 50, 100});
  CHECK(evoem::app::psnr_strides(30) == std::vector<std::size_t>{1, 2, 5, 10, 20, 30});
}
