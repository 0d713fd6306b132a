#include "evoem/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "evoem/error.hpp"
#include "evoem/image_io.hpp"

namespace evoem {

Image::Image(std::size_t w, std::size_t h, std::size_t c, double fill)
    : width(w), height(h), channels(c), pixels(w * h * c, fill) {}

void Image::validate() const {
  if (channels != 1 && channels != 3) throw DimensionError("image must have 1 or 3 channels");
  if (pixels.size() != width * height * channels) throw DimensionError("image buffer length mismatch");
}

Image Image::crop(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) const {
  if (x0 + w > width || y0 + h > height) throw DimensionError("crop window exceeds the image");
  Image out(w, h, channels);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < channels; ++c) out.at(x, y, c) = at(x0 + x, y0 + y, c);
  return out;
}

PatchGrid PatchGrid::sliding(const Image& image, std::size_t patch_w, std::size_t patch_h, bool channel_joint) {
  image.validate();
  if (patch_w == 0 || patch_h == 0) throw DimensionError("patch size must be positive");
  if (patch_w > image.width || patch_h > image.height)
    throw DimensionError("patch " + std::to_string(patch_w) + "x" + std::to_string(patch_h) + " larger than image " +
                         std::to_string(image.width) + "x" + std::to_string(image.height));
  PatchGrid g;
  g.image_width = image.width;
  g.image_height = image.height;
  g.channels = image.channels;
  g.patch_w = patch_w;
  g.patch_h = patch_h;
  g.channel_joint = channel_joint || image.channels == 1;
  for (std::size_t y = 0; y + patch_h <= image.height; ++y)
    for (std::size_t x = 0; x + patch_w <= image.width; ++x) g.origins.emplace_back(x, y);
  return g;
}

namespace {

void check_grid(const Image& image, const PatchGrid& grid) {
  if (image.width != grid.image_width || image.height != grid.image_height || image.channels != grid.channels)
    throw DimensionError("image does not match the patch grid");
}

void check_mask(const Image& image, const PixelMask* mask) {
  if (mask && mask->size() != image.positions())
    throw DimensionError("mask has " + std::to_string(mask->size()) + " entries, image has " +
                         std::to_string(image.positions()) + " positions");
}

// Calls f(row, d, x, y, c) for every coordinate d of datapoint row.
template <class F>
void for_each_coord(const PatchGrid& grid, F&& f) {
  const std::size_t P = grid.positions();
  const std::size_t plane = grid.channel_joint ? grid.channels : 1;
  const std::size_t passes = grid.channel_joint ? 1 : grid.channels;
  for (std::size_t pass = 0; pass < passes; ++pass) {
    for (std::size_t p = 0; p < P; ++p) {
      const auto [x0, y0] = grid.origins[p];
      const std::size_t row = pass * P + p;
      std::size_t d = 0;
      for (std::size_t dy = 0; dy < grid.patch_h; ++dy)
        for (std::size_t dx = 0; dx < grid.patch_w; ++dx)
          for (std::size_t c = 0; c < plane; ++c, ++d) f(row, d, x0 + dx, y0 + dy, grid.channel_joint ? c : pass);
    }
  }
}

}  // namespace

DataSet extract_patches(const Image& image, const PatchGrid& grid, const PixelMask* mask) {
  image.validate();
  check_grid(image, grid);
  check_mask(image, mask);
  RowMatrix Y(static_cast<Eigen::Index>(grid.patch_count()), static_cast<Eigen::Index>(grid.patch_dim()));
  std::optional<MaskMatrix> M;
  if (mask) M.emplace(Y.rows(), Y.cols());
  for_each_coord(grid, [&](std::size_t row, std::size_t d, std::size_t x, std::size_t y, std::size_t c) {
    const auto r = static_cast<Eigen::Index>(row), k = static_cast<Eigen::Index>(d);
    Y(r, k) = image.at(x, y, c);
    if (M) (*M)(r, k) = (*mask)[y * image.width + x] != 0 ? 1 : 0;
  });
  return DataSet(std::move(Y), std::move(M));
}

Image merge_patches(std::span<const Reconstruction> reconstructions, const PatchGrid& grid, const Image& original,
                    MergeMode mode, const PixelMask* mask, MergeWeights weights) {
  original.validate();
  check_grid(original, grid);
  check_mask(original, mask);
  if (reconstructions.size() != grid.patch_count())
    throw DimensionError("merge_patches: " + std::to_string(reconstructions.size()) + " reconstructions for " +
                         std::to_string(grid.patch_count()) + " patches");
  if (mode == MergeMode::kInpaint && !mask) throw ConfigError("merge_patches: inpainting requires a mask");

  // Window weight per coordinate.
  const std::size_t D = grid.patch_dim();
  const std::size_t plane = grid.channel_joint ? grid.channels : 1;
  std::vector<double> window(D, 1.0);
  if (weights == MergeWeights::kGaussian) {
    const double cx = (static_cast<double>(grid.patch_w) - 1.0) / 2.0;
    const double cy = (static_cast<double>(grid.patch_h) - 1.0) / 2.0;
    const double s = std::max<double>(grid.patch_w, grid.patch_h) / 4.0;
    for (std::size_t d = 0; d < D; ++d) {
      const std::size_t pix = d / plane;
      const double dx = static_cast<double>(pix % grid.patch_w) - cx;
      const double dy = static_cast<double>(pix / grid.patch_w) - cy;
      window[d] = std::exp(-(dx * dx + dy * dy) / (2.0 * s * s));
    }
  }

  // Scatter the estimates of each datapoint into pixel sums.
  std::vector<double> sum(original.pixels.size(), 0.0), weight(original.pixels.size(), 0.0);
  std::vector<std::ptrdiff_t> slot(D);
  const std::size_t P = grid.positions();
  for (std::size_t row = 0; row < reconstructions.size(); ++row) {
    const Reconstruction& r = reconstructions[row];
    if (r.values.size() != r.coords.size()) throw DimensionError("merge_patches: malformed reconstruction");
    const std::size_t pass = row / P;
    const auto [x0, y0] = grid.origins[row % P];
    for (std::size_t k = 0; k < r.coords.size(); ++k) {
      const auto d = static_cast<std::size_t>(r.coords[k]);
      if (d >= D) throw DimensionError("merge_patches: coordinate out of range");
      const std::size_t pix = d / plane;
      const std::size_t c = grid.channel_joint ? d % plane : pass;
      const std::size_t x = x0 + pix % grid.patch_w, y = y0 + pix / grid.patch_w;
      const std::size_t i = (y * original.width + x) * original.channels + c;
      sum[i] += window[d] * r.values[k];
      weight[i] += window[d];
    }
  }

  Image out = original;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    if (mode == MergeMode::kInpaint) {
      const bool observed = (*mask)[i / original.channels] != 0;
      if (observed) continue;
      if (weight[i] == 0.0) throw Error("merge_patches: a missing pixel is covered by no estimate");
    } else if (weight[i] == 0.0) {
      continue;
    }
    out.pixels[i] = sum[i] / weight[i];
  }
  return out;
}

void CorruptionSpec::validate() const {
  switch (kind) {
    case Kind::kAwg:
      if (!(sigma > 0.0)) throw ConfigError("AWG sigma must be positive");
      break;
    case Kind::kRandomMissing:
      if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("missing ratio must lie in (0, 1)");
      break;
    case Kind::kMaskFile:
      if (mask_path.empty()) throw ConfigError("mask file path is empty");
      break;
  }
}

Corrupted corrupt(const Image& image, const CorruptionSpec& spec, Rng& rng) {
  image.validate();
  spec.validate();
  Corrupted out{image, std::nullopt};
  switch (spec.kind) {
    case CorruptionSpec::Kind::kAwg:
      for (double& v : out.image.pixels) v += spec.sigma * standard_normal(rng);
      break;
    case CorruptionSpec::Kind::kRandomMissing: {
      const std::size_t P = image.positions();
      const auto missing = static_cast<std::size_t>(std::ceil(spec.ratio * static_cast<double>(P) - 1e-9));
      std::vector<std::size_t> order(P);
      std::iota(order.begin(), order.end(), std::size_t{0});
      for (std::size_t k = 0; k < missing; ++k) std::swap(order[k], order[k + uniform_index(rng, P - k)]);
      PixelMask mask(P, 1);
      for (std::size_t k = 0; k < missing; ++k) mask[order[k]] = 0;
      out.mask = std::move(mask);
      break;
    }
    case CorruptionSpec::Kind::kMaskFile: {
      const Image m = read_image(spec.mask_path);
      if (m.width != image.width || m.height != image.height)
        throw DimensionError("mask file " + spec.mask_path + " is " + std::to_string(m.width) + "x" +
                             std::to_string(m.height) + ", image is " + std::to_string(image.width) + "x" +
                             std::to_string(image.height));
      PixelMask mask(image.positions(), 1);
      for (std::size_t p = 0; p < mask.size(); ++p) {
        bool zero = true;
        for (std::size_t c = 0; c < m.channels; ++c) zero = zero && m.pixels[p * m.channels + c] == 0.0;
        mask[p] = zero ? 0 : 1;
      }
      out.mask = std::move(mask);
      break;
    }
  }
  if (out.mask)
    for (std::size_t p = 0; p < out.mask->size(); ++p)
      if ((*out.mask)[p] == 0)
        for (std::size_t c = 0; c < image.channels; ++c) out.image.pixels[p * image.channels + c] = 0.0;
  return out;
}

Corrupted corrupt(const Image& image, const CorruptionSpec& spec) {
  Rng rng = make_stream(spec.seed, StreamTag::kCorrupt);
  return corrupt(image, spec, rng);
}

double psnr(const Image& reference, const Image& candidate, const PixelMask* missing_only) {
  if (reference.width != candidate.width || reference.height != candidate.height ||
      reference.channels != candidate.channels || reference.pixels.size() != candidate.pixels.size())
    throw DimensionError("psnr: images differ in size");
  check_mask(reference, missing_only);
  double se = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < reference.pixels.size(); ++i) {
    if (missing_only && (*missing_only)[i / reference.channels] != 0) continue;
    const double e = reference.pixels[i] - candidate.pixels[i];
    se += e * e;
    ++count;
  }
  if (count == 0) throw Error("psnr: empty-selection (no coordinates to evaluate)");
  const double mse = se / static_cast<double>(count);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

Image mean_fill(const Image& image, const PixelMask& mask) {
  image.validate();
  check_mask(image, &mask);
  std::vector<double> sum(image.channels, 0.0);
  std::size_t observed = 0;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (mask[p] == 0) continue;
    ++observed;
    for (std::size_t c = 0; c < image.channels; ++c) sum[c] += image.pixels[p * image.channels + c];
  }
  if (observed == 0) throw Error("mean_fill: no observed pixels");
  Image out = image;
  for (std::size_t p = 0; p < mask.size(); ++p)
    if (mask[p] == 0)
      for (std::size_t c = 0; c < image.channels; ++c)
        out.pixels[p * image.channels + c] = sum[c] / static_cast<double>(observed);
  return out;
}

}  // namespace evoem
