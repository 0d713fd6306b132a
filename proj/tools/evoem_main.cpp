#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "app/commands.hpp"
#include "app/manifest.hpp"
#include "app/run_config.hpp"
#include "evoem/error.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out_dir = "out";
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "key=value configuration file");
  cmd->add_option("--preset", f.preset, "named hyperparameter preset (see 'evoem presets')");
  cmd->add_option("--set", f.assignments, "override one key, e.g. --set iterations=50 (repeatable)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--threads", f.threads, "worker threads (0 = all cores); falls back to EVOEM_THREADS");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_flag("-q,--quiet", f.quiet, "no progress output");
}

// Precedence: preset < config file < --set < --seed / --threads.
evoem::app::RunOptions resolve(const CommonFlags& f) {
  using evoem::app::Origin;
  evoem::app::RunOptions o;
  if (!f.preset.empty()) evoem::app::apply_preset(o.config, f.preset);
  if (!f.config_path.empty()) evoem::app::apply_config_file(o.config, f.config_path);
  for (const auto& a : f.assignments) evoem::app::apply_assignment(o.config, a, Origin{"--set", 0});
  if (f.seed) o.config.eem.seed = *f.seed;
  if (f.threads) {
    o.config.eem.parallel_degree = *f.threads;
  } else if (const char* env = std::getenv("EVOEM_THREADS"); env && *env) {
    evoem::app::set_value(o.config, "threads", env, Origin{"EVOEM_THREADS", 0});
  }
  o.out_dir = f.out_dir;
  o.log = f.quiet ? nullptr : &std::cerr;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary expectation maximization for noisy-OR, binary sparse coding and spike-and-slab sparse coding"};
  app.set_version_flag("--version", evoem::app::build_id());
  app.require_subcommand(1);

  CommonFlags flags;
  auto* bars = app.add_subcommand("bars", "bars test: generate data, fit, score recovery");
  auto* train = app.add_subcommand("train", "fit a model to a CSV data file (data = PATH)");
  auto* denoise = app.add_subcommand("denoise", "restore a noisy image (clean = PATH or noisy = PATH)");
  auto* inpaint = app.add_subcommand("inpaint", "fill in missing pixels (clean + missing_ratio / mask_file)");
  auto* eval = app.add_subcommand("eval", "PSNR of a candidate image against a clean reference");
  auto* sample = app.add_subcommand("sample", "draw data from a checkpoint or the bars ground truth");
  auto* list = app.add_subcommand("presets", "list the built-in presets");
  for (auto* cmd : {bars, train, denoise, inpaint, eval, sample}) add_common(cmd, flags);

  std::string clean, candidate, mask;
  eval->add_option("--clean", clean, "reference image");
  eval->add_option("--candidate", candidate, "image to evaluate");
  eval->add_option("--mask", mask, "mask image; PSNR over its zero (missing) pixels only");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& p : evoem::app::presets()) std::cout << p.name << "  " << p.description << '\n';
      return 0;
    }
    evoem::app::RunOptions options = resolve(flags);
    if (bars->parsed()) {
      const auto r = evoem::app::run_bars(options);
      std::cout << "recovered=" << r.recovery.recovered(options.config.recovery_threshold) << '/'
                << r.recovery.matches.size()
                << " min_correlation=" << evoem::app::format_number(r.recovery.min_correlation)
                << " final_free_energy=" << evoem::app::format_number(r.state.trace.back().free_energy_per_datapoint)
                << '\n';
    } else if (train->parsed()) {
      const auto s = evoem::app::run_train(options);
      std::cout << "iterations=" << s.iteration << " final_free_energy="
                << evoem::app::format_number(s.trace.empty() ? 0.0 : s.trace.back().free_energy_per_datapoint) << '\n';
    } else if (denoise->parsed() || inpaint->parsed()) {
      const auto r = denoise->parsed() ? evoem::app::run_denoise(options) : evoem::app::run_inpaint(options);
      if (r.restored_psnr) {
        std::cout << "input_psnr_db=" << evoem::app::format_number(*r.input_psnr)
                  << " restored_psnr_db=" << evoem::app::format_number(*r.restored_psnr);
        if (r.baseline_psnr) std::cout << " mean_fill_psnr_db=" << evoem::app::format_number(*r.baseline_psnr);
        std::cout << '\n';
      }
    } else if (eval->parsed()) {
      using evoem::app::Origin;
      if (!clean.empty()) options.config.clean = clean;
      if (!candidate.empty()) options.config.candidate = candidate;
      if (!mask.empty()) options.config.corruption.mask_path = mask;
      const auto r = evoem::app::run_eval(options);
      std::cout << "psnr_db=" << evoem::app::format_number(r.psnr) << '\n';
    } else if (sample->parsed()) {
      const auto r = evoem::app::run_sample(options);
      std::cout << "samples=" << r.sample.data.size() << '\n';
    }
  } catch (const evoem::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
