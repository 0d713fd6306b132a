#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evoem/imaging.hpp"
#include "evoem/learning.hpp"
#include "evoem/model.hpp"
#include "evoem/synthetic.hpp"
#include "run_config.hpp"

namespace evoem::app {

struct RunOptions {
  RunConfig config;
  std::string out_dir;           // created when missing; empty: no files are written
  std::ostream* log = nullptr;   // progress lines; nullptr: silent
};

struct BarsResult {
  BarsData data;
  EemState state;
  std::vector<IterationReport> iterations;
  RecoveryReport recovery;
};

struct PsnrPoint {
  std::size_t iteration = 0;
  double free_energy_per_datapoint = 0.0;
  std::optional<double> psnr;
};

struct RestorationResult {
  Image input;                     // corrupted image the model was trained on
  Image restored;
  std::optional<Image> clean;
  std::optional<PixelMask> mask;   // inpainting only
  std::optional<double> input_psnr;
  std::optional<double> restored_psnr;
  std::optional<double> baseline_psnr;  // inpainting: mean-fill baseline
  std::vector<PsnrPoint> trace;
  EemState state;
};

struct EvalResult {
  double psnr = 0.0;
};

struct SampleOutput {
  SampleResult sample;
};

// bars: generate a bars dataset, fit, score recovery.
// Files: recovery.csv, free_energy.csv, iterations.csv, checkpoint.eem, manifest.json.
BarsResult run_bars(const RunOptions& options);

// train: fit a model to a CSV data file (optionally resuming a checkpoint).
// Files: free_energy.csv, iterations.csv, checkpoint.eem, manifest.json.
EemState run_train(const RunOptions& options);

// denoise: corrupt (when only a clean image is given), fit on patches,
// estimate, merge. Files: restored.pgm/.eemf, input.pgm/.eemf, psnr.csv (when
// a clean reference exists), psnr_trace.csv, free_energy.csv, checkpoint.eem,
// manifest.json.
RestorationResult run_denoise(const RunOptions& options);

// inpaint: as denoise with masked training and inpainting merge; files add
// mask.pgm.
RestorationResult run_inpaint(const RunOptions& options);

// eval: PSNR of candidate against clean (over missing positions of
// mask_file when given). Files: eval.csv, manifest.json.
EvalResult run_eval(const RunOptions& options);

// sample: draws sample_N datapoints from a checkpoint's parameters or from
// the bars ground truth. Files: samples.csv, latents.csv, manifest.json.
SampleOutput run_sample(const RunOptions& options);

// Iterations at which denoising / inpainting measure PSNR: 1, 2, 5, 10, 20,
// 50, ... up to the budget, plus the final iteration.
std::vector<std::size_t> psnr_strides(std::size_t iterations);

// "+inf" for infinite values, otherwise 17 significant digits.
std::string format_number(double v);

// Reads a CSV matrix; empty or "nan" cells are missing.
DataSet read_data_csv(const std::string& path);

}  // namespace evoem::app
