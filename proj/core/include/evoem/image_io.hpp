#pragma once

#include <iosfwd>
#include <string>

#include "evoem/imaging.hpp"

namespace evoem {

// Reads binary PGM (P5) / PPM (P6) with maxval <= 255, or the lossless raw
// container ("EEMF" magic, u32-LE width, height, channels, f64-LE pixels).
// Throws IoError on malformed headers or truncated payloads.
Image read_image(const std::string& path);
Image read_image(std::istream& in, const std::string& name = "<stream>");

// 8-bit export: values clamped to [0, 255] and rounded half-to-even. P5 for
// grayscale, P6 for RGB.
void write_pnm(const std::string& path, const Image& image);
void write_pnm(std::ostream& out, const Image& image);

// Lossless real-valued container.
void write_raw(const std::string& path, const Image& image);
void write_raw(std::ostream& out, const Image& image);

// Dispatches on the extension: ".eemf" writes the raw container, anything
// else PGM/PPM.
void write_image(const std::string& path, const Image& image);

// Quantizes a value the way write_pnm does.
unsigned char to_byte(double v);

}  // namespace evoem
