#include "evoem/image_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "evoem/error.hpp"

namespace evoem {

namespace {

constexpr std::array<char, 4> kRawMagic{'E', 'E', 'M', 'F'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& name) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError(name + ": truncated raw header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

// Skips whitespace and '#' comments in a PNM header.
void skip_space(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

std::size_t read_header_int(std::istream& in, const std::string& name) {
  skip_space(in);
  std::size_t v = 0;
  int digits = 0;
  while (std::isdigit(in.peek())) {
    v = v * 10 + static_cast<std::size_t>(in.get() - '0');
    if (++digits > 9) throw IoError(name + ": header value too large");
  }
  if (digits == 0) throw IoError(name + ": malformed PNM header");
  return v;
}

Image read_pnm(std::istream& in, std::size_t channels, const std::string& name) {
  Image img;
  img.channels = channels;
  img.width = read_header_int(in, name);
  img.height = read_header_int(in, name);
  const std::size_t maxval = read_header_int(in, name);
  if (img.width == 0 || img.height == 0) throw IoError(name + ": zero image dimension");
  if (maxval == 0 || maxval > 255) throw IoError(name + ": only 8-bit PNM (maxval <= 255) is supported");
  const int sep = in.get();
  if (sep != ' ' && sep != '\t' && sep != '\n' && sep != '\r') throw IoError(name + ": malformed PNM header");
  std::vector<unsigned char> bytes(img.width * img.height * channels);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw IoError(name + ": truncated PNM payload");
  img.pixels.assign(bytes.begin(), bytes.end());
  return img;
}

Image read_raw(std::istream& in, const std::string& name) {
  Image img;
  img.width = get_u32(in, name);
  img.height = get_u32(in, name);
  img.channels = get_u32(in, name);
  if (img.channels != 1 && img.channels != 3) throw IoError(name + ": raw image must have 1 or 3 channels");
  const std::size_t count = img.width * img.height * img.channels;
  std::vector<unsigned char> bytes(count * 8);
  if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
    throw IoError(name + ": truncated raw payload");
  img.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[i * 8 + static_cast<std::size_t>(b)];
    img.pixels[i] = std::bit_cast<double>(bits);
  }
  return img;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

}  // namespace

Image read_image(std::istream& in, const std::string& name) {
  char magic[4] = {};
  if (!in.read(magic, 2)) throw IoError(name + ": empty or unreadable image");
  if (magic[0] == 'P' && magic[1] == '5') return read_pnm(in, 1, name);
  if (magic[0] == 'P' && magic[1] == '6') return read_pnm(in, 3, name);
  if (magic[0] == kRawMagic[0] && magic[1] == kRawMagic[1]) {
    if (!in.read(magic + 2, 2) || magic[2] != kRawMagic[2] || magic[3] != kRawMagic[3])
      throw IoError(name + ": bad raw image magic");
    return read_raw(in, name);
  }
  throw IoError(name + ": unsupported image format (expected P5, P6 or EEMF)");
}

Image read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path);
  return read_image(in, path);
}

unsigned char to_byte(double v) {
  if (std::isnan(v)) return 0;
  const double r = std::nearbyint(std::clamp(v, 0.0, 255.0));  // default rounding mode: half to even
  return static_cast<unsigned char>(r);
}

void write_pnm(std::ostream& out, const Image& image) {
  image.validate();
  out << (image.channels == 1 ? "P5" : "P6") << '\n' << image.width << ' ' << image.height << "\n255\n";
  std::vector<unsigned char> bytes(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), bytes.begin(), to_byte);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_pnm(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image " + path);
  write_pnm(out, image);
  if (!out) throw IoError("write failed: " + path);
}

void write_raw(std::ostream& out, const Image& image) {
  image.validate();
  out.write(kRawMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(image.width));
  put_u32(out, static_cast<std::uint32_t>(image.height));
  put_u32(out, static_cast<std::uint32_t>(image.channels));
  for (double v : image.pixels) put_f64(out, v);
}

void write_raw(const std::string& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image " + path);
  write_raw(out, image);
  if (!out) throw IoError("write failed: " + path);
}

void write_image(const std::string& path, const Image& image) {
  if (has_suffix(path, ".eemf"))
    write_raw(path, image);
  else
    write_pnm(path, image);
}

}  // namespace evoem
