#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bellcert/core.hpp"

namespace bellcert {

// Packed bit string. Bit i lives in word i/64 at position i%64.
class BitString {
 public:
  BitString() = default;
  explicit BitString(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

  std::size_t size() const { return n_; }
  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
  void set(std::size_t i, bool v) {
    const std::uint64_t m = std::uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= m;
    else
      words_[i >> 6] &= ~m;
  }
  void push_back(bool v) {
    if ((n_ & 63) == 0) words_.push_back(0);
    ++n_;
    set(n_ - 1, v);
  }

  // len <= 64 bits starting at pos; bit pos lands in bit 0. Bits past the end read as 0.
  std::uint64_t get_word(std::size_t pos, unsigned len) const;

  const std::vector<std::uint64_t>& words() const { return words_; }

  // Bit file payload: most significant bit first within each byte.
  std::vector<std::uint8_t> to_bytes_msb() const;
  static BitString from_bytes_msb(std::span<const std::uint8_t> bytes, std::size_t nbits);

  std::string to_hex() const;

  friend bool operator==(const BitString& l, const BitString& r) {
    return l.n_ == r.n_ && l.words_ == r.words_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

// Trial i contributes a_i at bit 2i and b_i at bit 2i+1.
BitString outcome_bits(std::span<const TrialRecord> trials);

}  // namespace bellcert
