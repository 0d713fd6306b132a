#pragma once

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/container/small_vector.hpp>

namespace evoem {

using Word = std::uint64_t;

inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for(std::size_t bits) { return (bits + kWordBits - 1) / kWordBits; }

// Non-owning view of a bit-packed latent state. Bit h lives in word h / 64 at
// position h % 64; padding bits past size() are always zero.
class StateView {
 public:
  StateView() = default;
  StateView(std::span<const Word> words, std::size_t size) : words_(words), size_(size) {}

  std::size_t size() const noexcept { return size_; }
  std::span<const Word> words() const noexcept { return words_; }

  bool test(std::size_t h) const noexcept { return (words_[h / kWordBits] >> (h % kWordBits)) & 1U; }

  std::size_t count() const noexcept {
    std::size_t c = 0;
    for (Word w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  bool none() const noexcept {
    for (Word w : words_)
      if (w != 0) return false;
    return true;
  }

  template <class F>
  void for_each_active(F&& f) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      Word w = words_[i];
      while (w != 0) {
        const int bit = std::countr_zero(w);
        f(static_cast<int>(i * kWordBits) + bit);
        w &= w - 1;
      }
    }
  }

  // Appends the indices of set bits in increasing order.
  void active_indices(std::vector<int>& out) const {
    out.clear();
    for_each_active([&](int h) { out.push_back(h); });
  }
  std::vector<int> active_indices() const {
    std::vector<int> out;
    active_indices(out);
    return out;
  }

  std::size_t hash() const noexcept;
  std::string to_string() const;

  friend bool operator==(const StateView& a, const StateView& b) noexcept;

  // Lexicographic order over bit positions 0..H-1: at the first differing
  // position the state holding 0 sorts first.
  friend std::strong_ordering operator<=>(const StateView& a, const StateView& b) noexcept;

 private:
  std::span<const Word> words_;
  std::size_t size_ = 0;
};

// Owning binary latent vector s in {0,1}^H. Up to 256 bits live inline, so
// offspring generation does not touch the heap for typical H.
class BinaryState {
 public:
  BinaryState() = default;
  explicit BinaryState(std::size_t size) : words_(words_for(size), 0), size_(size) {}
  explicit BinaryState(StateView v) : words_(v.words().begin(), v.words().end()), size_(v.size()) {}

  // "0110" -> bit 0 = 0, bit 1 = 1, ...
  static BinaryState from_string(std::string_view bits);
  static BinaryState from_bits(std::initializer_list<int> bits);

  std::size_t size() const noexcept { return size_; }
  std::span<const Word> words() const noexcept { return {words_.data(), words_.size()}; }
  std::span<Word> words() noexcept { return {words_.data(), words_.size()}; }

  StateView view() const noexcept { return {words(), size_}; }
  operator StateView() const noexcept { return view(); }  // NOLINT(google-explicit-constructor)

  bool test(std::size_t h) const noexcept { return view().test(h); }
  void set(std::size_t h, bool value = true) noexcept {
    const Word m = Word{1} << (h % kWordBits);
    if (value)
      words_[h / kWordBits] |= m;
    else
      words_[h / kWordBits] &= ~m;
  }
  void flip(std::size_t h) noexcept { words_[h / kWordBits] ^= Word{1} << (h % kWordBits); }

  std::size_t count() const noexcept { return view().count(); }
  bool none() const noexcept { return view().none(); }
  std::vector<int> active_indices() const { return view().active_indices(); }
  std::string to_string() const { return view().to_string(); }
  std::size_t hash() const noexcept { return view().hash(); }

  friend bool operator==(const BinaryState& a, const BinaryState& b) noexcept { return a.view() == b.view(); }
  friend std::strong_ordering operator<=>(const BinaryState& a, const BinaryState& b) noexcept {
    return a.view() <=> b.view();
  }

 private:
  boost::container::small_vector<Word, 4> words_;
  std::size_t size_ = 0;
};

struct StateHash {
  std::size_t operator()(const BinaryState& s) const noexcept { return s.hash(); }
  std::size_t operator()(const StateView& s) const noexcept { return s.hash(); }
};

// Number of differing bits.
std::size_t hamming_distance(StateView a, StateView b);

}  // namespace evoem
