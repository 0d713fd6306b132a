#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <locale>
#include <ostream>
#include <sstream>

#include "evoem/checkpoint.hpp"
#include "evoem/error.hpp"
#include "evoem/estimator.hpp"
#include "evoem/image_io.hpp"
#include "evoem/model.hpp"
#include "manifest.hpp"

namespace evoem::app {

namespace {

std::ostringstream csv_stream() {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(17);
  return s;
}

// Collects the files a command writes and produces the manifest at the end.
class OutputDir {
 public:
  explicit OutputDir(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }
  bool enabled() const { return !dir_.empty(); }
  std::string path(const std::string& name) {
    files_.push_back(name);
    return (std::filesystem::path(dir_) / name).string();
  }
  void text(const std::string& name, const std::string& content) {
    if (!enabled()) return;
    const std::string p = path(name);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p);
    out << content;
    if (!out) throw IoError("write failed: " + p);
  }
  void manifest(const std::string& command, const RunConfig& config) {
    if (!enabled()) return;
    const auto outputs = files_;
    write_manifest((std::filesystem::path(dir_) / "manifest.json").string(), command, config, outputs);
  }

 private:
  std::string dir_;
  std::vector<std::string> files_;
};

std::string iterations_csv(const std::vector<IterationReport>& reports) {
  auto s = csv_stream();
  s << "iteration,free_energy_before_estep,free_energy_after_estep,min_estep_gain,free_energy,replaced,evaluations,"
       "ridge_used,psi_repaired,froze_mu_psi\n";
  for (const auto& r : reports)
    s << r.iteration << ',' << r.free_energy_before_estep << ',' << r.free_energy_after_estep << ','
      << r.min_estep_gain << ',' << r.free_energy << ',' << r.replaced << ',' << r.evaluations << ','
      << r.mstep.ridge_used << ',' << r.mstep.psi_repaired << ',' << r.mstep.froze_mu_psi << '\n';
  return s.str();
}

std::string trace_csv(const FreeEnergyTrace& trace) {
  std::ostringstream s;
  trace.write_csv(s);
  return s.str();
}

std::string checkpoint_bytes(const EemState& state) {
  std::ostringstream s(std::ios::binary);
  save_checkpoint(s, state);
  return s.str();
}

void write_image_pair(OutputDir& out, const std::string& stem, const Image& image) {
  if (!out.enabled()) return;
  write_pnm(out.path(stem + (image.channels == 3 ? ".ppm" : ".pgm")), image);
  write_raw(out.path(stem + ".eemf"), image);
}

// Model-kind specific initialization shared by all fitting commands.
ModelParams initial_params(const DataSet& data, const RunConfig& c, bool frozen_default) {
  ModelParams params = init_params(c.model, data, c.H, c.eem.seed);
  if (auto* p = std::get_if<SsscParams>(&params); p && c.mu_psi_frozen.value_or(frozen_default)) {
    const auto H = static_cast<Eigen::Index>(p->H());
    p->mu = Eigen::VectorXd::Ones(H);
    p->Psi = Eigen::MatrixXd::Identity(H, H);
    p->mu_psi_frozen = true;
  }
  return params;
}

struct FitHooks {
  std::vector<IterationReport>* reports = nullptr;
  std::function<void(const IterationReport&, const EemState&)> extra;
};

void fit(EemState& state, const DataSet& data, const RunConfig& c, const std::string& command, std::ostream* log,
         const FitHooks& hooks) {
  EemCallbacks cb;
  cb.on_iteration = [&](const IterationReport& r, const EemState& s) {
    if (hooks.reports) hooks.reports->push_back(r);
    if (hooks.extra) hooks.extra(r, s);
    if (log && (r.iteration % std::max<std::size_t>(c.eem.log_every, 1) == 0 || r.iteration == c.eem.iterations))
      *log << '[' << command << "] iteration " << r.iteration << '/' << c.eem.iterations
           << " F/N=" << format_number(r.free_energy) << " replaced=" << r.replaced << '\n';
  };
  cb.on_warning = [&](const std::string& w) {
    if (log) *log << '[' << command << "] warning: " << w << '\n';
  };
  eem_continue(state, data, c.eem, c.ea, cb);
}

Image load_input(const RunConfig& c) {
  Image image = read_image(c.noisy);
  return image;
}

Image crop_if_requested(const Image& image, const RunConfig& c) {
  if (c.crop_w == 0) return image;
  return image.crop(c.crop_x, c.crop_y, c.crop_w, c.crop_h);
}

// Drops grid positions whose patch holds no observed pixel; such patches
// carry no evidence and cannot be trained on.
void drop_unobserved_patches(PatchGrid& grid, const PixelMask& mask) {
  std::vector<std::pair<std::size_t, std::size_t>> kept;
  for (const auto& [x0, y0] : grid.origins) {
    bool any = false;
    for (std::size_t y = 0; y < grid.patch_h && !any; ++y)
      for (std::size_t x = 0; x < grid.patch_w && !any; ++x)
        any = mask[(y0 + y) * grid.image_width + x0 + x] != 0;
    if (any) kept.emplace_back(x0, y0);
  }
  grid.origins = std::move(kept);
}

std::string psnr_csv(const std::vector<std::pair<std::string, double>>& rows) {
  auto s = csv_stream();
  s << "metric,value\n";
  for (const auto& [k, v] : rows) s << k << ',' << format_number(v) << '\n';
  return s.str();
}

std::string psnr_trace_csv(const std::vector<PsnrPoint>& trace, bool with_psnr) {
  auto s = csv_stream();
  s << "iteration,free_energy_per_datapoint" << (with_psnr ? ",psnr_db" : "") << '\n';
  for (const auto& p : trace) {
    s << p.iteration << ',' << p.free_energy_per_datapoint;
    if (with_psnr) s << ',' << format_number(p.psnr.value_or(std::numeric_limits<double>::quiet_NaN()));
    s << '\n';
  }
  return s.str();
}

enum class Task { kDenoise, kInpaint };

RestorationResult restore(const RunOptions& options, Task task) {
  RunConfig c = options.config;
  c.validate();
  if (c.model == ModelKind::kNoisyOr)
    throw ConfigError("noisy-OR has no data estimator; use model = bsc (EBSC) or sssc (ES3C)");
  const std::string command = task == Task::kDenoise ? "denoise" : "inpaint";
  OutputDir out(options.out_dir);
  RestorationResult result;

  if (!c.clean.empty()) result.clean = crop_if_requested(read_image(c.clean), c);
  if (c.noisy.empty() && !result.clean) throw ConfigError(command + ": set 'clean' or 'noisy'");

  CorruptionSpec spec = c.corruption;
  spec.seed = c.eem.seed;
  if (task == Task::kDenoise) {
    if (!c.noisy.empty()) {
      result.input = crop_if_requested(load_input(c), c);
    } else {
      if (spec.kind != CorruptionSpec::Kind::kAwg) throw ConfigError("denoise: corruption must be awg");
      result.input = corrupt(*result.clean, spec).image;
    }
  } else {
    if (!c.noisy.empty()) {
      if (spec.kind != CorruptionSpec::Kind::kMaskFile || spec.mask_path.empty())
        throw ConfigError("inpaint: a corrupted input needs its mask (corruption = mask_file, mask_file = PATH)");
      Image raw = read_image(c.noisy);
      Corrupted cor = corrupt(raw, spec);  // reads and validates the mask; zeroes missing pixels
      result.input = crop_if_requested(cor.image, c);
      Image mask_image(raw.width, raw.height, 1);
      for (std::size_t p = 0; p < raw.positions(); ++p) mask_image.pixels[p] = (*cor.mask)[p];
      const Image cropped = crop_if_requested(mask_image, c);
      result.mask = PixelMask(cropped.pixels.begin(), cropped.pixels.end());
    } else {
      if (spec.kind == CorruptionSpec::Kind::kAwg)
        throw ConfigError("inpaint: corruption must be random_missing or mask_file");
      Corrupted cor = corrupt(*result.clean, spec);
      result.input = std::move(cor.image);
      result.mask = std::move(cor.mask);
    }
  }
  if (result.clean && (result.clean->width != result.input.width || result.clean->height != result.input.height ||
                       result.clean->channels != result.input.channels))
    throw DimensionError(command + ": clean and corrupted images differ in size");

  const PixelMask* mask = result.mask ? &*result.mask : nullptr;
  if (result.clean) {
    result.input_psnr = psnr(*result.clean, result.input);
    if (mask) result.baseline_psnr = psnr(*result.clean, mean_fill(result.input, *mask));
  }
  write_image_pair(out, "input", result.input);
  if (mask && out.enabled()) {
    Image m(result.input.width, result.input.height, 1);
    for (std::size_t p = 0; p < m.positions(); ++p) m.pixels[p] = (*mask)[p] ? 255.0 : 0.0;
    write_pnm(out.path("mask.pgm"), m);
  }

  const bool nothing_missing = mask && std::all_of(mask->begin(), mask->end(), [](std::uint8_t v) { return v != 0; });
  if (nothing_missing) {
    // Nothing to restore: the output is the input.
    if (options.log) *options.log << "[inpaint] mask has no missing pixel; output equals input\n";
    result.restored = result.input;
  } else {
    PatchGrid grid = PatchGrid::sliding(result.input, c.patch_w, c.patch_h, c.channel_joint);
    if (mask) drop_unobserved_patches(grid, *mask);
    const DataSet data = extract_patches(result.input, grid, mask);
    if (options.log)
      *options.log << '[' << command << "] " << data.size() << " patches of dimension " << data.dim() << ", model "
                   << to_string(c.model) << ", H=" << c.H << ", EA " << c.ea.tag() << '\n';
    const MergeMode mode = task == Task::kDenoise ? MergeMode::kDenoise : MergeMode::kInpaint;
    const EstimateTarget target = task == Task::kDenoise ? EstimateTarget::kAll : EstimateTarget::kMissing;
    auto reconstruct = [&](const EemState& s) {
      const auto recs = estimate_all(data, s.sets, s.params, target, c.eem.parallel_degree);
      return merge_patches(recs, grid, result.input, mode, mask, c.merge_weights);
    };

    result.state = eem_start(data, initial_params(data, c, task == Task::kInpaint), c.eem);
    const auto strides = psnr_strides(c.eem.iterations);
    FitHooks hooks;
    hooks.extra = [&](const IterationReport& r, const EemState& s) {
      if (!std::binary_search(strides.begin(), strides.end(), r.iteration)) return;
      PsnrPoint p{r.iteration, r.free_energy, std::nullopt};
      if (result.clean) p.psnr = psnr(*result.clean, reconstruct(s));
      result.trace.push_back(p);
    };
    fit(result.state, data, c, command, options.log, hooks);
    result.restored = reconstruct(result.state);
  }
  if (result.clean) result.restored_psnr = psnr(*result.clean, result.restored);

  write_image_pair(out, "restored", result.restored);
  if (result.clean) {
    std::vector<std::pair<std::string, double>> rows{{"input_psnr_db", *result.input_psnr},
                                                     {"restored_psnr_db", *result.restored_psnr}};
    if (result.baseline_psnr) rows.emplace_back("mean_fill_psnr_db", *result.baseline_psnr);
    if (mask && !nothing_missing) rows.emplace_back("restored_missing_psnr_db", psnr(*result.clean, result.restored, mask));
    out.text("psnr.csv", psnr_csv(rows));
    if (options.log)
      *options.log << '[' << command << "] PSNR input " << format_number(*result.input_psnr) << " dB, restored "
                   << format_number(*result.restored_psnr) << " dB\n";
  }
  if (!nothing_missing) {
    out.text("psnr_trace.csv", psnr_trace_csv(result.trace, result.clean.has_value()));
    out.text("free_energy.csv", trace_csv(result.state.trace));
    out.text("checkpoint.eem", checkpoint_bytes(result.state));
  }
  out.manifest(command, c);
  return result;
}

}  // namespace

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  if (std::isnan(v)) return "nan";
  auto s = csv_stream();
  s << v;
  return s.str();
}

std::vector<std::size_t> psnr_strides(std::size_t iterations) {
  std::vector<std::size_t> out;
  for (std::size_t decade = 1; decade <= iterations; decade *= 10)
    for (std::size_t m : {1, 2, 5})
      if (m * decade <= iterations) out.push_back(m * decade);
  if (iterations > 0 && (out.empty() || out.back() != iterations)) out.push_back(iterations);
  return out;
}

DataSet read_data_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file " + path);
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<std::uint8_t>> masks;
  bool any_missing = false;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::vector<std::uint8_t> mask;
    std::size_t start = 0;
    bool header = false;
    while (true) {
      const std::size_t comma = line.find(',', start);
      std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      cell.erase(0, cell.find_first_not_of(" \t"));
      cell.erase(cell.find_last_not_of(" \t") + 1);
      if (cell.empty() || cell == "nan" || cell == "NaN") {
        row.push_back(0.0);
        mask.push_back(0);
        any_missing = true;
      } else {
        std::istringstream cs(cell);
        cs.imbue(std::locale::classic());
        double v;
        if (!(cs >> v) || !cs.eof()) {
          if (rows.empty() && row.empty()) {
            header = true;
            break;
          }
          throw IoError(path + ":" + std::to_string(number) + ": not a number: '" + cell + "'");
        }
        row.push_back(v);
        mask.push_back(1);
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (header) continue;
    if (!rows.empty() && row.size() != rows.front().size())
      throw DimensionError(path + ":" + std::to_string(number) + ": expected " + std::to_string(rows.front().size()) +
                           " values, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
    masks.push_back(std::move(mask));
  }
  if (rows.empty()) throw IoError(path + ": no data rows");
  const auto N = static_cast<Eigen::Index>(rows.size()), D = static_cast<Eigen::Index>(rows.front().size());
  RowMatrix Y(N, D);
  MaskMatrix M(N, D);
  for (Eigen::Index n = 0; n < N; ++n)
    for (Eigen::Index d = 0; d < D; ++d) {
      Y(n, d) = rows[static_cast<std::size_t>(n)][static_cast<std::size_t>(d)];
      M(n, d) = masks[static_cast<std::size_t>(n)][static_cast<std::size_t>(d)];
    }
  DataSet data(std::move(Y), any_missing ? std::optional<MaskMatrix>(std::move(M)) : std::nullopt);
  data.validate();
  return data;
}

BarsResult run_bars(const RunOptions& options) {
  RunConfig c = options.config;
  c.validate();
  BarsSpec spec = BarsSpec::defaults(c.model, c.bars_R);
  if (c.bars_amplitude) spec.amplitude = *c.bars_amplitude;
  if (c.bars_background) spec.background = *c.bars_background;
  spec.pi_gen = c.bars_pi;
  spec.sigma2_gen = c.bars_sigma2;
  spec.mu_gen = c.bars_mu;
  spec.psi_gen = c.bars_psi;
  spec.seed = c.eem.seed;
  spec.validate();
  if (c.H < spec.H_gen())
    throw ConfigError("bars: H=" + std::to_string(c.H) + " is below the " + std::to_string(spec.H_gen()) +
                      " ground-truth bars");

  OutputDir out(options.out_dir);
  BarsResult result;
  Rng rng = make_stream(c.eem.seed, StreamTag::kSample);
  result.data = generate_bars_dataset(spec, c.bars_N, rng);
  if (options.log)
    *options.log << "[bars] " << c.bars_N << " samples, D=" << spec.D() << ", model " << to_string(c.model)
                 << ", H=" << c.H << ", EA " << c.ea.tag() << ", seed " << c.eem.seed << '\n';
  result.state = eem_start(result.data.data, initial_params(result.data.data, c, false), c.eem);
  FitHooks hooks;
  hooks.reports = &result.iterations;
  fit(result.state, result.data.data, c, "bars", options.log, hooks);
  result.recovery = score_recovery(result.state.params, result.data.truth);
  if (options.log)
    *options.log << "[bars] recovered " << result.recovery.recovered(c.recovery_threshold) << '/'
                 << result.recovery.matches.size() << " bars (min correlation "
                 << format_number(result.recovery.min_correlation) << ")\n";

  if (out.enabled()) {
    std::ostringstream rec;
    result.recovery.write_csv(rec);
    out.text("recovery.csv", rec.str());
    out.text("free_energy.csv", trace_csv(result.state.trace));
    out.text("iterations.csv", iterations_csv(result.iterations));
    out.text("checkpoint.eem", checkpoint_bytes(result.state));
  }
  out.manifest("bars", c);
  return result;
}

EemState run_train(const RunOptions& options) {
  RunConfig c = options.config;
  if (c.data.empty()) throw ConfigError("train: set 'data' to a CSV file");
  const DataSet data = read_data_csv(c.data);
  OutputDir out(options.out_dir);
  EemState state;
  if (!c.checkpoint.empty()) {
    state = load_checkpoint(c.checkpoint);
    if (observed_dim(state.params) != data.dim() || state.sets.size() != data.size())
      throw DimensionError("train: checkpoint " + c.checkpoint + " does not match the data shape");
    c.model = kind_of(state.params);
    c.H = latent_dim(state.params);
    c.eem.seed = state.seed;
    c.eem.S = state.sets.S;
    c.validate();
  } else {
    c.validate();
    state = eem_start(data, initial_params(data, c, false), c.eem);
  }
  std::vector<IterationReport> reports;
  FitHooks hooks;
  hooks.reports = &reports;
  fit(state, data, c, "train", options.log, hooks);
  out.text("free_energy.csv", trace_csv(state.trace));
  out.text("iterations.csv", iterations_csv(reports));
  out.text("checkpoint.eem", checkpoint_bytes(state));
  out.manifest("train", c);
  return state;
}

RestorationResult run_denoise(const RunOptions& options) { return restore(options, Task::kDenoise); }

RestorationResult run_inpaint(const RunOptions& options) { return restore(options, Task::kInpaint); }

EvalResult run_eval(const RunOptions& options) {
  const RunConfig& c = options.config;
  if (c.clean.empty() || c.candidate.empty()) throw ConfigError("eval: set 'clean' and 'candidate'");
  const Image clean = read_image(c.clean);
  const Image cand = read_image(c.candidate);
  EvalResult r;
  if (!c.corruption.mask_path.empty()) {
    CorruptionSpec spec;
    spec.kind = CorruptionSpec::Kind::kMaskFile;
    spec.mask_path = c.corruption.mask_path;
    const Corrupted m = corrupt(clean, spec);
    PixelMask missing = *m.mask;
    r.psnr = psnr(clean, cand, &missing);
  } else {
    r.psnr = psnr(clean, cand);
  }
  OutputDir out(options.out_dir);
  out.text("eval.csv", psnr_csv({{"psnr_db", r.psnr}}));
  out.manifest("eval", c);
  return r;
}

SampleOutput run_sample(const RunOptions& options) {
  RunConfig c = options.config;
  ModelParams params;
  if (!c.checkpoint.empty()) {
    params = load_checkpoint(c.checkpoint).params;
  } else {
    BarsSpec spec = BarsSpec::defaults(c.model, c.bars_R);
    if (c.bars_amplitude) spec.amplitude = *c.bars_amplitude;
    if (c.bars_background) spec.background = *c.bars_background;
    spec.pi_gen = c.bars_pi;
    spec.sigma2_gen = c.bars_sigma2;
    spec.mu_gen = c.bars_mu;
    spec.psi_gen = c.bars_psi;
    spec.seed = c.eem.seed;
    params = bars_ground_truth(spec);
  }
  Rng rng = make_stream(c.eem.seed, StreamTag::kSample);
  SampleOutput result{sample(params, c.sample_N, rng)};
  OutputDir out(options.out_dir);
  if (out.enabled()) {
    const auto& Y = result.sample.data.Y;
    auto s = csv_stream();
    for (Eigen::Index d = 0; d < Y.cols(); ++d) s << (d ? "," : "") << 'y' << d;
    s << '\n';
    for (Eigen::Index n = 0; n < Y.rows(); ++n) {
      for (Eigen::Index d = 0; d < Y.cols(); ++d) s << (d ? "," : "") << Y(n, d);
      s << '\n';
    }
    out.text("samples.csv", s.str());
    auto l = csv_stream();
    const std::size_t H = latent_dim(params);
    for (std::size_t h = 0; h < H; ++h) l << (h ? "," : "") << 's' << h;
    l << '\n';
    for (const auto& st : result.sample.latents) {
      for (std::size_t h = 0; h < H; ++h) l << (h ? "," : "") << (st.test(h) ? 1 : 0);
      l << '\n';
    }
    out.text("latents.csv", l.str());
  }
  out.manifest("sample", c);
  return result;
}

}  // namespace evoem::app
