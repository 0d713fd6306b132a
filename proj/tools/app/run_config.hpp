#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evoem/evolution.hpp"
#include "evoem/imaging.hpp"
#include "evoem/learning.hpp"
#include "evoem/params.hpp"

namespace evoem::app {

// Everything a command needs, settable through flat key=value files. Keys
// mirror the field names below; see config_keys() for the full list.
struct RunConfig {
  ModelKind model = ModelKind::kBsc;
  std::size_t H = 10;
  EemConfig eem;
  EaConfig ea;
  std::optional<bool> mu_psi_frozen;  // unset: frozen for inpaint, learned otherwise

  // bars
  std::size_t bars_R = 5;
  std::size_t bars_N = 5000;
  std::optional<double> bars_amplitude;   // unset: model default
  std::optional<double> bars_background;  // unset: model default
  double bars_pi = 0.0;                   // <= 0: 2 / H_gen
  double bars_sigma2 = 1.0;
  double bars_mu = 0.0;
  double bars_psi = 1.0;
  double recovery_threshold = 0.95;

  // train / sample
  std::string data;        // CSV, one datapoint per row; "nan" or empty cells are missing
  std::string checkpoint;  // train: resume from; sample: parameter source
  std::size_t sample_N = 1000;

  // images
  std::string clean;      // reference image
  std::string noisy;      // already corrupted input (denoise / inpaint)
  std::string candidate;  // eval
  CorruptionSpec corruption;
  std::size_t crop_x = 0, crop_y = 0, crop_w = 0, crop_h = 0;  // crop_w / crop_h 0: whole image
  std::size_t patch_w = 8, patch_h = 8;
  bool channel_joint = true;
  MergeWeights merge_weights = MergeWeights::kUniform;

  void validate() const;
};

// Location of a setting for error messages ("file.cfg:12", "--set", ...).
struct Origin {
  std::string source;
  std::size_t line = 0;  // 0 when not line-based
  std::string describe() const;
};

// Sets one key; throws ConfigError naming the origin for unknown keys and
// malformed values.
void set_value(RunConfig& config, std::string_view key, std::string_view value, const Origin& origin);

// Reads "key = value" lines; '#' starts a comment, blank lines are skipped.
void apply_config(RunConfig& config, std::istream& in, const std::string& source);
void apply_config_file(RunConfig& config, const std::string& path);

// "key=value" override as given on the command line.
void apply_assignment(RunConfig& config, std::string_view assignment, const Origin& origin);

// Canonical echo of every key in a fixed order; feeding it back through
// set_value reproduces the configuration.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);
std::vector<std::string> config_keys();

struct Preset {
  std::string name;
  std::string description;
  std::vector<std::pair<std::string, std::string>> values;
};

// Hyperparameter presets: full-scale settings (prefix "full-") plus clearly
// labelled desk-scale variants.
const std::vector<Preset>& presets();
const Preset& find_preset(std::string_view name);  // throws ConfigError listing known names
void apply_preset(RunConfig& config, std::string_view name);

}  // namespace evoem::app
