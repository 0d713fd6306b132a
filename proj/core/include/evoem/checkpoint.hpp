#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "evoem/learning.hpp"

namespace evoem {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  ModelKind kind = ModelKind::kBsc;
  std::uint64_t H = 0, D = 0, S = 0, N = 0;
  std::uint64_t iteration = 0;
  std::uint64_t seed = 0;
};

// Self-describing little-endian container: "EEM1" magic, header, named f64
// arrays for every parameter, bit-packed state sets with their lpj caches,
// and the free-energy trace. Serialization is canonical: equal states give
// equal bytes.
void save_checkpoint(std::ostream& out, const EemState& state);
void save_checkpoint(const std::string& path, const EemState& state);

// Throws IoError on malformed input and on a format version other than
// kCheckpointVersion.
EemState load_checkpoint(std::istream& in, const std::string& name = "<stream>");
EemState load_checkpoint(const std::string& path);

CheckpointHeader read_checkpoint_header(const std::string& path);

}  // namespace evoem
