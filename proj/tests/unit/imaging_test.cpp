#include <doctest.h>

#include <cmath>
#include <sstream>

#include "evoem/image_io.hpp"
#include "evoem/imaging.hpp"
#include "evoem/rng.hpp"

namespace {

evoem::Image ramp(std::size_t w, std::size_t h, std::size_t c = 1) {
  evoem::Image img(w, h, c);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<double>(i % 256);
  return img;
}

std::string data_path(const char* name) { return std::string(EVOEM_TEST_DATA_DIR) + "/" + name; }

}  // namespace

TEST_CASE("patch grid") {
  SUBCASE("3x3 image, 2x2 patches") {
    const auto grid = evoem::PatchGrid::sliding(ramp(3, 3), 2, 2);
    REQUIRE(grid.positions() == 4);
    CHECK(grid.origins[0] == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(grid.origins[1] == std::pair<std::size_t, std::size_t>{1, 0});
    CHECK(grid.origins[2] == std::pair<std::size_t, std::size_t>{0, 1});
    CHECK(grid.origins[3] == std::pair<std::size_t, std::size_t>{1, 1});
  }
  SUBCASE("256x256 image, 8x8 patches") {
    CHECK(evoem::PatchGrid::sliding(ramp(256, 256), 8, 8).patch_count() == 62001);
  }
  SUBCASE("patch as large as the image") {
    const auto img = ramp(5, 4);
    const auto grid = evoem::PatchGrid::sliding(img, 5, 4);
    const auto data = evoem::extract_patches(img, grid);
    REQUIRE(data.size() == 1);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(data.Y(0, static_cast<Eigen::Index>(i)) == img.pixels[i]);
  }
  SUBCASE("RGB patches, joint and per channel") {
    const auto img = ramp(4, 4, 3);
    CHECK(evoem::PatchGrid::sliding(img, 2, 2, true).patch_dim() == 12);
    const auto split = evoem::PatchGrid::sliding(img, 2, 2, false);
    CHECK(split.patch_dim() == 4);
    CHECK(split.patch_count() == 27);
  }
}

TEST_CASE("merge") {
  const auto img = ramp(3, 1);
  const auto grid = evoem::PatchGrid::sliding(img, 2, 1);  // origins x = 0, 1
  SUBCASE("overlap averages with equal weights") {
    std::vector<evoem::Reconstruction> r{{{0.0, 1.0}, {0, 1}}, {{3.0, 5.0}, {0, 1}}};
    const auto out = evoem::merge_patches(r, grid, img, evoem::MergeMode::kDenoise);
    CHECK(out.pixels[0] == 0.0);
    CHECK(out.pixels[1] == 2.0);
    CHECK(out.pixels[2] == 5.0);
  }
  SUBCASE("constant estimates give a constant image") {
    std::vector<evoem::Reconstruction> r{{{7.0, 7.0}, {0, 1}}, {{7.0, 7.0}, {0, 1}}};
    for (double v : evoem::merge_patches(r, grid, img, evoem::MergeMode::kDenoise).pixels) CHECK(v == 7.0);
  }
  SUBCASE("inpainting keeps observed pixels") {
    const evoem::PixelMask mask{1, 0, 1};
    std::vector<evoem::Reconstruction> r{{{9.0}, {1}}, {{11.0}, {0}}};
    const auto out = evoem::merge_patches(r, grid, img, evoem::MergeMode::kInpaint, &mask);
    CHECK(out.pixels[0] == img.pixels[0]);
    CHECK(out.pixels[1] == 10.0);
    CHECK(out.pixels[2] == img.pixels[2]);
  }
}

TEST_CASE("corruption") {
  const auto img = ramp(256, 256);
  SUBCASE("vanishing noise leaves the image") {
    evoem::CorruptionSpec spec;
    spec.sigma = 1e-300;
    const auto out = evoem::corrupt(img, spec);
    double worst = 0.0;
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      worst = std::max(worst, std::abs(out.image.pixels[i] - img.pixels[i]));
    CHECK(worst < 1e-290);
  }
  SUBCASE("missing ratio is exact") {
    evoem::CorruptionSpec spec;
    spec.kind = evoem::CorruptionSpec::Kind::kRandomMissing;
    spec.ratio = 0.5;
    const auto out = evoem::corrupt(img, spec);
    REQUIRE(out.mask);
    CHECK(std::count(out.mask->begin(), out.mask->end(), 0) == 32768);
  }
  SUBCASE("AWG PSNR matches the analytic value") {
    evoem::CorruptionSpec spec;
    spec.sigma = 25.0;
    spec.seed = 3;
    const auto out = evoem::corrupt(img, spec);
    CHECK(std::abs(evoem::psnr(img, out.image) - 20.0 * std::log10(255.0 / 25.0)) < 0.1);
  }
  SUBCASE("mask file with wrong dimensions") {
    evoem::CorruptionSpec spec;
    spec.kind = evoem::CorruptionSpec::Kind::kMaskFile;
    spec.mask_path = data_path("mask_20x16.pgm");
    CHECK_THROWS_AS(evoem::corrupt(img, spec), evoem::DimensionError);
  }
}

TEST_CASE("PSNR") {
  evoem::Image a(4, 4, 1, 100.0);
  auto b = a;
  CHECK(std::isinf(evoem::psnr(a, b)));
  for (std::size_t i = 0; i < b.pixels.size(); ++i) b.pixels[i] += (i % 2 ? 1.0 : -1.0);
  CHECK(evoem::psnr(a, b) == doctest::Approx(48.1308).epsilon(1e-6));
  evoem::Image black(4, 4, 1, 0.0), white(4, 4, 1, 255.0);
  CHECK(evoem::psnr(black, white) == doctest::Approx(0.0));
  const evoem::PixelMask none(16, 1);
  CHECK_THROWS_AS(evoem::psnr(a, b, &none), evoem::Error);
  CHECK_THROWS_AS(evoem::psnr(a, evoem::Image(3, 4, 1)), evoem::DimensionError);
}

TEST_CASE("mean fill") {
  evoem::Image img(2, 2, 1);
  img.pixels = {10.0, 0.0, 30.0, 0.0};
  const evoem::PixelMask mask{1, 0, 1, 0};
  const auto out = evoem::mean_fill(img, mask);
  CHECK(out.pixels == std::vector<double>{10.0, 20.0, 30.0, 20.0});
}

TEST_CASE("image I/O") {
  SUBCASE("P5 header") {
    std::istringstream in(std::string("P5\n2 2\n255\n") + std::string("\x01\x02\x03\xff", 4));
    const auto img = evoem::read_image(in);
    CHECK(img.width == 2);
    CHECK(img.height == 2);
    CHECK(img.pixels == std::vector<double>{1.0, 2.0, 3.0, 255.0});
  }
  SUBCASE("PGM and PPM round trip of integral images") {
    for (std::size_t c : {1u, 3u}) {
      const auto img = ramp(7, 5, c);
      std::stringstream buf;
      evoem::write_pnm(buf, img);
      CHECK(evoem::read_image(buf).pixels == img.pixels);
    }
  }
  SUBCASE("raw container is lossless") {
    auto img = ramp(3, 2);
    img.pixels[0] = -0.123456789012345;
    std::stringstream buf;
    evoem::write_raw(buf, img);
    CHECK(evoem::read_image(buf).pixels == img.pixels);
  }
  SUBCASE("8-bit export rounds half to even and clamps") {
    CHECK(evoem::to_byte(2.5) == 2);
    CHECK(evoem::to_byte(3.5) == 4);
    CHECK(evoem::to_byte(-4.0) == 0);
    CHECK(evoem::to_byte(300.0) == 255);
  }
  SUBCASE("truncated payload") {
    std::istringstream in(std::string("P5\n2 2\n255\n") + std::string("\x01\x02", 2));
    CHECK_THROWS_AS(evoem::read_image(in), evoem::IoError);
  }
  SUBCASE("fixture") {
    const auto img = evoem::read_image(data_path("camera256.pgm"));
    CHECK(img.width == 256);
    CHECK(img.height == 256);
  }
}
