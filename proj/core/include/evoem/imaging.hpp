#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evoem/dataset.hpp"
#include "evoem/estimator.hpp"
#include "evoem/rng.hpp"

namespace evoem {

// Real-valued image, row-major with interleaved channels.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::size_t c, double fill = 0.0);

  double& at(std::size_t x, std::size_t y, std::size_t c = 0) { return pixels[(y * width + x) * channels + c]; }
  double at(std::size_t x, std::size_t y, std::size_t c = 0) const { return pixels[(y * width + x) * channels + c]; }
  std::size_t positions() const noexcept { return width * height; }

  // Throws DimensionError when channels is not 1 or 3 or the buffer length is wrong.
  void validate() const;
  Image crop(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) const;
};

// Per-position observation mask (1 = observed), width * height entries; a
// missing position loses all channels.
using PixelMask = std::vector<std::uint8_t>;

// All sliding-window placements of a patch_w x patch_h window.
struct PatchGrid {
  std::size_t image_width = 0;
  std::size_t image_height = 0;
  std::size_t channels = 1;
  std::size_t patch_w = 0;
  std::size_t patch_h = 0;
  bool channel_joint = true;  // RGB patches hold all channels (interleaved); otherwise one datapoint per channel
  std::vector<std::pair<std::size_t, std::size_t>> origins;  // top-left (x, y), x fastest

  static PatchGrid sliding(const Image& image, std::size_t patch_w, std::size_t patch_h, bool channel_joint = true);

  std::size_t positions() const noexcept { return origins.size(); }
  // Datapoints: positions, times channels when not channel-joint.
  std::size_t patch_count() const noexcept { return channel_joint ? origins.size() : origins.size() * channels; }
  std::size_t patch_dim() const noexcept { return patch_w * patch_h * (channel_joint ? channels : 1); }
};

// Row n = patch n flattened (row-major within the window); the per-pixel
// mask, when given, becomes the DataSet mask.
DataSet extract_patches(const Image& image, const PatchGrid& grid, const PixelMask* mask = nullptr);

enum class MergeMode { kDenoise, kInpaint };
enum class MergeWeights { kUniform, kGaussian };

// Averages the per-patch estimates over all patches covering each pixel.
// Denoise: every covered pixel is replaced. Inpaint: only masked pixels are
// replaced; observed pixels are copied from `original` verbatim.
Image merge_patches(std::span<const Reconstruction> reconstructions, const PatchGrid& grid, const Image& original,
                    MergeMode mode, const PixelMask* mask = nullptr, MergeWeights weights = MergeWeights::kUniform);

struct CorruptionSpec {
  enum class Kind { kAwg, kRandomMissing, kMaskFile };
  Kind kind = Kind::kAwg;
  double sigma = 25.0;    // AWG standard deviation
  double ratio = 0.5;     // fraction of missing positions
  std::string mask_path;  // PGM; zero pixels are missing
  std::uint64_t seed = 0;

  void validate() const;
};

struct Corrupted {
  Image image;
  std::optional<PixelMask> mask;  // present for missing-value corruptions
};

// AWG noise is added unclamped. Missing pixels are set to 0 in the image.
Corrupted corrupt(const Image& image, const CorruptionSpec& spec, Rng& rng);
Corrupted corrupt(const Image& image, const CorruptionSpec& spec);  // stream from spec.seed

// 10 log10(255^2 / MSE) over all values, or over the missing positions of
// `missing_only` when given. Returns +infinity for zero MSE. Throws on
// dimension mismatch or an empty selection.
double psnr(const Image& reference, const Image& candidate, const PixelMask* missing_only = nullptr);

// Replaces missing positions by the mean of the observed values per channel.
Image mean_fill(const Image& image, const PixelMask& mask);

}  // namespace evoem
