#include "evoem/binary_state.hpp"

#include <stdexcept>

namespace evoem {

namespace {

constexpr Word mix(Word x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

std::size_t StateView::hash() const noexcept {
  Word h = 0x9e3779b97f4a7c15ULL ^ size_;
  for (Word w : words_) h = mix(h ^ mix(w + 0x9e3779b97f4a7c15ULL));
  return static_cast<std::size_t>(h);
}

std::string StateView::to_string() const {
  std::string out(size_, '0');
  for_each_active([&](int h) { out[static_cast<std::size_t>(h)] = '1'; });
  return out;
}

bool operator==(const StateView& a, const StateView& b) noexcept {
  if (a.size_ != b.size_) return false;
  for (std::size_t i = 0; i < a.words_.size(); ++i)
    if (a.words_[i] != b.words_[i]) return false;
  return true;
}

std::strong_ordering operator<=>(const StateView& a, const StateView& b) noexcept {
  const std::size_t n = std::min(a.words_.size(), b.words_.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Word diff = a.words_[i] ^ b.words_[i];
    if (diff == 0) continue;
    const Word lowest = diff & (~diff + 1);
    return (a.words_[i] & lowest) ? std::strong_ordering::greater : std::strong_ordering::less;
  }
  return a.size_ <=> b.size_;
}

BinaryState BinaryState::from_string(std::string_view bits) {
  BinaryState s(bits.size());
  for (std::size_t h = 0; h < bits.size(); ++h) {
    if (bits[h] == '1')
      s.set(h);
    else if (bits[h] != '0')
      throw std::invalid_argument("BinaryState::from_string: expected '0' or '1'");
  }
  return s;
}

BinaryState BinaryState::from_bits(std::initializer_list<int> bits) {
  BinaryState s(bits.size());
  std::size_t h = 0;
  for (int b : bits) s.set(h++, b != 0);
  return s;
}

std::size_t hamming_distance(StateView a, StateView b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.words().size(); ++i)
    d += static_cast<std::size_t>(std::popcount(a.words()[i] ^ b.words()[i]));
  return d;
}

}  // namespace evoem
