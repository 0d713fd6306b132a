#include "run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <locale>
#include <sstream>

#include "evoem/error.hpp"

namespace evoem::app {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const Origin& origin, const char* expected) {
  throw ConfigError(origin.describe() + ": invalid value '" + std::string(value) + "' for key '" + std::string(key) +
                    "' (expected " + expected + ")");
}

std::uint64_t parse_u64(std::string_view key, std::string_view v, const Origin& o) {
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || v.empty()) bad_value(key, v, o, "a non-negative integer");
  return out;
}

double parse_double(std::string_view key, std::string_view v, const Origin& o) {
  double out = 0.0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || v.empty() || !std::isfinite(out))
    bad_value(key, v, o, "a finite number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v, const Origin& o) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, o, "true or false");
}

std::string format_double(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(17) << v;
  return s.str();
}

std::string format_bool(bool v) { return v ? "true" : "false"; }

std::string_view corruption_name(CorruptionSpec::Kind k) {
  switch (k) {
    case CorruptionSpec::Kind::kAwg:
      return "awg";
    case CorruptionSpec::Kind::kRandomMissing:
      return "random_missing";
    case CorruptionSpec::Kind::kMaskFile:
      return "mask_file";
  }
  return "?";
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, std::string_view, const Origin&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class Field>
Key size_key(std::string name, Field field) {
  return {name,
          [name, field](RunConfig& c, std::string_view v, const Origin& o) {
            field(c) = static_cast<std::size_t>(parse_u64(name, v, o));
          },
          [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

template <class Field>
Key double_key(std::string name, Field field) {
  return {name, [name, field](RunConfig& c, std::string_view v, const Origin& o) { field(c) = parse_double(name, v, o); },
          [field](const RunConfig& c) { return format_double(field(const_cast<RunConfig&>(c))); }};
}

template <class Field>
Key bool_key(std::string name, Field field) {
  return {name, [name, field](RunConfig& c, std::string_view v, const Origin& o) { field(c) = parse_bool(name, v, o); },
          [field](const RunConfig& c) { return format_bool(field(const_cast<RunConfig&>(c))); }};
}

template <class Field>
Key string_key(std::string name, Field field) {
  return {name, [field](RunConfig& c, std::string_view v, const Origin&) { field(c) = std::string(v); },
          [field](const RunConfig& c) { return field(const_cast<RunConfig&>(c)); }};
}

template <class Field>
Key optional_double_key(std::string name, Field field) {
  return {name,
          [name, field](RunConfig& c, std::string_view v, const Origin& o) {
            if (v == "default")
              field(c).reset();
            else
              field(c) = parse_double(name, v, o);
          },
          [field](const RunConfig& c) {
            const auto& f = field(const_cast<RunConfig&>(c));
            return f ? format_double(*f) : std::string("default");
          }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back({"model",
                 [](RunConfig& c, std::string_view v, const Origin& o) {
                   try {
                     c.model = parse_model_kind(v);
                   } catch (const ConfigError&) {
                     bad_value("model", v, o, "nor, bsc, sssc, ebsc or es3c");
                   }
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.model)); }});
    k.push_back(size_key("H", [](RunConfig& c) -> std::size_t& { return c.H; }));
    k.push_back(size_key("S", [](RunConfig& c) -> std::size_t& { return c.eem.S; }));
    k.push_back(size_key("iterations", [](RunConfig& c) -> std::size_t& { return c.eem.iterations; }));
    k.push_back({"seed",
                 [](RunConfig& c, std::string_view v, const Origin& o) { c.eem.seed = parse_u64("seed", v, o); },
                 [](const RunConfig& c) { return std::to_string(c.eem.seed); }});
    k.push_back(size_key("threads", [](RunConfig& c) -> std::size_t& { return c.eem.parallel_degree; }));
    k.push_back(size_key("log_every", [](RunConfig& c) -> std::size_t& { return c.eem.log_every; }));
    k.push_back(bool_key("early_stop", [](RunConfig& c) -> bool& { return c.eem.early_stop; }));
    k.push_back(double_key("early_stop_tol", [](RunConfig& c) -> double& { return c.eem.early_stop_tol; }));
    k.push_back(size_key("early_stop_window", [](RunConfig& c) -> std::size_t& { return c.eem.early_stop_window; }));
    k.push_back(bool_key("prior_floor_inv_h", [](RunConfig& c) -> bool& { return c.eem.mstep.prior_floor_inv_h; }));
    k.push_back({"sssc_sigma",
                 [](RunConfig& c, std::string_view v, const Origin& o) {
                   if (v == "as_printed")
                     c.eem.mstep.sssc_sigma = SsscSigmaUpdate::kAsPrinted;
                   else if (v == "expected_residual")
                     c.eem.mstep.sssc_sigma = SsscSigmaUpdate::kExpectedResidual;
                   else
                     bad_value("sssc_sigma", v, o, "as_printed or expected_residual");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.eem.mstep.sssc_sigma == SsscSigmaUpdate::kAsPrinted ? "as_printed"
                                                                                              : "expected_residual");
                 }});
    k.push_back({"mu_psi_frozen",
                 [](RunConfig& c, std::string_view v, const Origin& o) {
                   if (v == "default")
                     c.mu_psi_frozen.reset();
                   else
                     c.mu_psi_frozen = parse_bool("mu_psi_frozen", v, o);
                 },
                 [](const RunConfig& c) {
                   return c.mu_psi_frozen ? format_bool(*c.mu_psi_frozen) : std::string("default");
                 }});

    k.push_back({"ea",
                 [](RunConfig& c, std::string_view v, const Origin& o) {
                   try {
                     c.ea.apply_tag(v);
                   } catch (const ConfigError&) {
                     bad_value("ea", v, o, "{fitparents|randparents}[-cross]-{randflips|sparseflips}");
                   }
                 },
                 [](const RunConfig& c) { return c.ea.tag(); }});
    k.push_back(size_key("n_parents", [](RunConfig& c) -> std::size_t& { return c.ea.n_parents; }));
    k.push_back(size_key("n_mutations", [](RunConfig& c) -> std::size_t& { return c.ea.n_mutations; }));
    k.push_back(size_key("n_generations", [](RunConfig& c) -> std::size_t& { return c.ea.n_generations; }));
    k.push_back(double_key("p_bf", [](RunConfig& c) -> double& { return c.ea.p_bf; }));
    k.push_back({"cross_sparse",
                 [](RunConfig& c, std::string_view v, const Origin& o) {
                   if (v == "replace")
                     c.ea.cross_sparse = CrossSparseMode::kReplace;
                   else if (v == "augment")
                     c.ea.cross_sparse = CrossSparseMode::kAugment;
                   else
                     bad_value("cross_sparse", v, o, "replace or augment");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.ea.cross_sparse == CrossSparseMode::kReplace ? "replace" : "augment");
                 }});

    k.push_back(size_key("bars_R", [](RunConfig& c) -> std::size_t& { return c.bars_R; }));
    k.push_back(size_key("bars_N", [](RunConfig& c) -> std::size_t& { return c.bars_N; }));
    k.push_back(optional_double_key("bars_amplitude", [](RunConfig& c) -> std::optional<double>& {
      return c.bars_amplitude;
    }));
    k.push_back(optional_double_key("bars_background", [](RunConfig& c) -> std::optional<double>& {
      return c.bars_background;
    }));
    k.push_back(double_key("bars_pi", [](RunConfig& c) -> double& { return c.bars_pi; }));
    k.push_back(double_key("bars_sigma2", [](RunConfig& c) -> double& { return c.bars_sigma2; }));
    k.push_back(double_key("bars_mu", [](RunConfig& c) -> double& { return c.bars_mu; }));
    k.push_back(double_key("bars_psi", [](RunConfig& c) -> double& { return c.bars_psi; }));
    k.push_back(double_key("recovery_threshold", [](RunConfig& c) -> double& { return c.recovery_threshold; }));

    k.push_back(string_key("data", [](RunConfig& c) -> std::string& { return c.data; }));
    k.push_back(string_key("checkpoint", [](RunConfig& c) -> std::string& { return c.checkpoint; }));
    k.push_back(size_key("sample_N", [](RunConfig& c) -> std::size_t& { return c.sample_N; }));

    k.push_back(string_key("clean", [](RunConfig& c) -> std::string& { return c.clean; }));
    k.push_back(string_key("noisy", [](RunConfig& c) -> std::string& { return c.noisy; }));
    k.push_back(string_key("candidate", [](RunConfig& c) -> std::string& { return c.candidate; }));
    k.push_back({"corruption",
                 [](RunConfig& c, std::string_view v, const Origin& o) {
                   if (v == "awg")
                     c.corruption.kind = CorruptionSpec::Kind::kAwg;
                   else if (v == "random_missing")
                     c.corruption.kind = CorruptionSpec::Kind::kRandomMissing;
                   else if (v == "mask_file")
                     c.corruption.kind = CorruptionSpec::Kind::kMaskFile;
                   else
                     bad_value("corruption", v, o, "awg, random_missing or mask_file");
                 },
                 [](const RunConfig& c) { return std::string(corruption_name(c.corruption.kind)); }});
    k.push_back(double_key("sigma", [](RunConfig& c) -> double& { return c.corruption.sigma; }));
    k.push_back(double_key("missing_ratio", [](RunConfig& c) -> double& { return c.corruption.ratio; }));
    k.push_back(string_key("mask_file", [](RunConfig& c) -> std::string& { return c.corruption.mask_path; }));
    k.push_back(size_key("crop_x", [](RunConfig& c) -> std::size_t& { return c.crop_x; }));
    k.push_back(size_key("crop_y", [](RunConfig& c) -> std::size_t& { return c.crop_y; }));
    k.push_back(size_key("crop_w", [](RunConfig& c) -> std::size_t& { return c.crop_w; }));
    k.push_back(size_key("crop_h", [](RunConfig& c) -> std::size_t& { return c.crop_h; }));
    k.push_back(size_key("patch_w", [](RunConfig& c) -> std::size_t& { return c.patch_w; }));
    k.push_back(size_key("patch_h", [](RunConfig& c) -> std::size_t& { return c.patch_h; }));
    k.push_back(bool_key("channel_joint", [](RunConfig& c) -> bool& { return c.channel_joint; }));
    k.push_back({"merge_weights",
                 [](RunConfig& c, std::string_view v, const Origin& o) {
                   if (v == "uniform")
                     c.merge_weights = MergeWeights::kUniform;
                   else if (v == "gaussian")
                     c.merge_weights = MergeWeights::kGaussian;
                   else
                     bad_value("merge_weights", v, o, "uniform or gaussian");
                 },
                 [](const RunConfig& c) {
                   return std::string(c.merge_weights == MergeWeights::kUniform ? "uniform" : "gaussian");
                 }});
    return k;
  }();
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (H == 0) throw ConfigError("H must be positive");
  eem.validate();
  ea.validate(eem.S, H);
  if (bars_R < 2) throw ConfigError("bars_R must be at least 2");
  if (patch_w == 0 || patch_h == 0) throw ConfigError("patch_w and patch_h must be positive");
  if ((crop_w == 0) != (crop_h == 0)) throw ConfigError("crop_w and crop_h must be set together");
}

std::string Origin::describe() const { return line > 0 ? source + ":" + std::to_string(line) : source; }

void set_value(RunConfig& config, std::string_view key, std::string_view value, const Origin& origin) {
  for (const auto& k : keys())
    if (k.name == key) {
      k.set(config, value, origin);
      return;
    }
  throw ConfigError(origin.describe() + ": unknown key '" + std::string(key) + "'");
}

void apply_assignment(RunConfig& config, std::string_view assignment, const Origin& origin) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError(origin.describe() + ": expected key = value");
  const std::string_view key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError(origin.describe() + ": empty key");
  set_value(config, key, trim(assignment.substr(eq + 1)), origin);
}

void apply_config(RunConfig& config, std::istream& in, const std::string& source) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    apply_assignment(config, view, Origin{source, number});
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  apply_config(config, in, path);
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(config));
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : keys()) out.push_back(k.name);
  return out;
}

namespace {

using Values = std::vector<std::pair<std::string, std::string>>;

Values ea_values(std::string tag, std::size_t S, std::size_t np, std::size_t nm, std::size_t ng, std::size_t iters) {
  Values v{{"ea", std::move(tag)},
           {"S", std::to_string(S)},
           {"n_parents", std::to_string(np)},
           {"n_generations", std::to_string(ng)},
           {"iterations", std::to_string(iters)}};
  if (nm > 0) v.emplace_back("n_mutations", std::to_string(nm));
  return v;
}

Values join(Values a, const Values& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Values patch(std::size_t side, std::size_t H) {
  return {{"patch_w", std::to_string(side)}, {"patch_h", std::to_string(side)}, {"H", std::to_string(H)}};
}

std::vector<Preset> build_presets() {
  std::vector<Preset> p;
  const Values bars{{"bars_R", "5"}, {"bars_N", "5000"}, {"H", "10"}};

  // Verification rows (bars test, any model).
  for (const auto& [tag, nm] : std::vector<std::pair<std::string, std::size_t>>{{"randparents-randflips", 4},
                                                                                 {"fitparents-cross-randflips", 0},
                                                                                 {"fitparents-sparseflips", 4},
                                                                                 {"fitparents-cross-sparseflips", 0},
                                                                                 {"randparents-cross-sparseflips", 0},
                                                                                 {"fitparents-randflips", 4}})
    p.push_back({"full-bars-" + tag, "bars test row (N=5000, 5x5, H=10), model set separately",
                 join(bars, ea_values(tag, 20, 5, nm, 2, 300))});

  // Per-model bars presets: the table's bars row with each model's EA.
  p.push_back({"bars-nor", "bars test, noisy-OR, randparents-cross-sparseflips",
               join(join(bars, ea_values("randparents-cross-sparseflips", 20, 5, 0, 2, 300)), {{"model", "nor"}})});
  p.push_back({"bars-bsc", "bars test, BSC, fitparents-cross-sparseflips",
               join(join(bars, ea_values("fitparents-cross-sparseflips", 20, 5, 0, 2, 300)), {{"model", "bsc"}})});
  p.push_back({"bars-sssc", "bars test, SSSC, fitparents-randflips",
               join(join(bars, ea_values("fitparents-randflips", 20, 5, 4, 2, 300)), {{"model", "sssc"}})});

  // Natural image patches (training data supplied by the user).
  p.push_back({"full-vanhateren-nor", "natural image patches, noisy-OR (N=30000, D=10x10, H=100)",
               join({{"model", "nor"}, {"H", "100"}}, ea_values("fitparents-cross-sparseflips", 120, 8, 0, 2, 200))});
  p.push_back({"full-vanhateren-bsc", "natural image patches, BSC (N=100000, D=16x16, H=300)",
               join({{"model", "bsc"}, {"H", "300"}}, ea_values("fitparents-cross-sparseflips", 200, 10, 0, 4, 4000))});
  p.push_back({"full-vanhateren-sssc", "natural image patches, SSSC (N=100000, D=12x12, H=512)",
               join({{"model", "sssc"}, {"H", "512"}}, ea_values("fitparents-cross-sparseflips", 60, 6, 0, 2, 2000))});

  // Denoising: free energy vs PSNR.
  const Values awg50{{"corruption", "awg"}, {"sigma", "50"}};
  p.push_back({"full-house-sigma50-es3c-h256", "denoising House sigma=50, ES3C, free energy vs PSNR",
               join(join(join({{"model", "sssc"}}, awg50), patch(8, 256)),
                    ea_values("fitparents-randflips", 60, 6, 5, 2, 2000))});
  // Denoising: controlled comparison.
  for (const auto& [side, H] : std::vector<std::pair<std::size_t, std::size_t>>{{8, 64}, {8, 256}, {12, 512}})
    p.push_back({"full-house-sigma50-es3c-d" + std::to_string(side) + "-h" + std::to_string(H),
                 "denoising House sigma=50, ES3C, controlled comparison",
                 join(join(join({{"model", "sssc"}}, awg50), patch(side, H)),
                      ea_values("fitparents-randflips", 60, 60, 1, 1, 4000))});
  // Denoising: general benchmark.
  struct Bench {
    std::string image;
    std::vector<int> sigmas;
    std::size_t es3c_side, es3c_H, es3c_S, es3c_np, iterations;
  };
  for (const auto& b : std::vector<Bench>{{"house", {15, 25, 50}, 12, 512, 60, 60, 4000},
                                           {"barbara", {25}, 11, 512, 60, 60, 3000},
                                           {"lena", {25}, 11, 512, 60, 60, 4000},
                                           {"peppers", {25}, 10, 800, 40, 30, 6000}})
    for (int sigma : b.sigmas) {
      const Values noise{{"corruption", "awg"}, {"sigma", std::to_string(sigma)}};
      const std::string stem = "full-" + b.image + "-sigma" + std::to_string(sigma);
      p.push_back({stem + "-ebsc", "denoising benchmark, EBSC",
                   join(join(join({{"model", "bsc"}}, noise), patch(8, 256)),
                        ea_values("fitparents-randflips", 200, 10, 9, 4, b.iterations))});
      p.push_back({stem + "-es3c", "denoising benchmark, ES3C",
                   join(join(join({{"model", "sssc"}}, noise), patch(b.es3c_side, b.es3c_H)),
                        ea_values("fitparents-randflips", b.es3c_S, b.es3c_np, 1, 1, b.iterations))});
    }
  // Inpainting.
  struct Inpaint {
    std::string name;
    std::string ratio;  // empty: text mask
    std::size_t side, H, S, np, iterations;
  };
  for (const auto& r : std::vector<Inpaint>{{"barbara-missing50", "0.5", 12, 512, 30, 20, 4000},
                                             {"cameraman-missing50", "0.5", 12, 512, 30, 20, 4000},
                                             {"lena-missing50", "0.5", 12, 512, 30, 20, 4000},
                                             {"house-missing50", "0.5", 12, 512, 30, 20, 4000},
                                             {"house-missing80", "0.8", 15, 512, 30, 20, 500},
                                             {"castle-missing50", "0.5", 7, 900, 30, 20, 2000},
                                             {"castle-missing80", "0.8", 7, 900, 60, 60, 200},
                                             {"new-orleans-textmask", "", 14, 900, 60, 60, 3000}}) {
    Values corruption = r.ratio.empty() ? Values{{"corruption", "mask_file"}}
                                        : Values{{"corruption", "random_missing"}, {"missing_ratio", r.ratio}};
    p.push_back({"full-" + r.name + "-es3c", "inpainting, ES3C with fixed mu and Psi",
                 join(join(join({{"model", "sssc"}, {"mu_psi_frozen", "true"}}, corruption), patch(r.side, r.H)),
                      ea_values("fitparents-randflips", r.S, r.np, 1, 1, r.iterations))});
  }

  // Desk-scale variants (reduced H / S / iterations; not the full-scale settings).
  p.push_back({"house-sigma50-es3c-small", "desk scale: denoising sigma=50, ES3C, D=8x8, H=64",
               join(join(join({{"model", "sssc"}}, awg50), patch(8, 64)),
                    ea_values("fitparents-randflips", 30, 6, 5, 2, 100))});
  p.push_back({"house-sigma25-ebsc-small", "desk scale: denoising sigma=25, EBSC, D=8x8, H=64, S=40",
               join(join({{"model", "bsc"}, {"corruption", "awg"}, {"sigma", "25"}}, patch(8, 64)),
                    ea_values("fitparents-randflips", 40, 5, 4, 2, 100))});
  p.push_back({"house-missing50-es3c-small", "desk scale: inpainting 50% missing on a 128x128 crop, ES3C, H=64",
               join(join({{"model", "sssc"},
                          {"mu_psi_frozen", "true"},
                          {"corruption", "random_missing"},
                          {"missing_ratio", "0.5"},
                          {"crop_w", "128"},
                          {"crop_h", "128"}},
                         patch(8, 64)),
                    ea_values("fitparents-randflips", 30, 6, 5, 2, 100))});
  return p;
}

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = build_presets();
  return all;
}

const Preset& find_preset(std::string_view name) {
  // The sigma spelling is accepted as an alias of "sigma".
  std::string key(name);
  for (std::size_t pos; (pos = key.find("\xcf\x83")) != std::string::npos;) key.replace(pos, 2, "sigma");
  for (const auto& p : presets())
    if (p.name == key) return p;
  std::string known;
  for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw ConfigError("unknown preset '" + std::string(name) + "'; known presets: " + known);
}

void apply_preset(RunConfig& config, std::string_view name) {
  const Preset& p = find_preset(name);
  for (const auto& [k, v] : p.values) set_value(config, k, v, Origin{"preset " + p.name, 0});
}

}  // namespace evoem::app
