#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cqba {

using Bytes = std::vector<std::uint8_t>;

/// Fixed-length bit string packed little-endian into 64-bit words: bit i lives
/// in word i / 64 at position i % 64. Bits past size() are always zero.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t nbits);

  /// Expands bytes most-significant-bit first: bit 7 of byte 0 becomes index 0.
  static BitVec from_bytes(std::span<const std::uint8_t> bytes, std::size_t nbits);
  static BitVec from_bytes(std::span<const std::uint8_t> bytes) {
    return from_bytes(bytes, bytes.size() * 8);
  }
  /// Parses a '0'/'1' string, character i giving bit i.
  static BitVec from_string(std::string_view bits);
  static BitVec random(std::size_t nbits, std::mt19937_64& rng);
  static BitVec ones(std::size_t nbits);

  std::size_t size() const { return nbits_; }
  bool empty() const { return nbits_ == 0; }
  std::size_t word_count() const { return words_.size(); }

  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i, bool v);
  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  bool none() const;
  std::size_t count() const;

  BitVec& operator^=(const BitVec& other);
  friend BitVec operator^(BitVec a, const BitVec& b) { return a ^= b; }
  friend bool operator==(const BitVec&, const BitVec&) = default;

  /// Appends other's bits after the current last bit.
  void append(const BitVec& other);
  BitVec slice(std::size_t pos, std::size_t len) const;

  /// Packs MSB-first, padding the final byte with zero bits.
  Bytes to_bytes() const;
  std::string to_string() const;
  std::string to_hex() const;

  /// Lexicographic order on the bit string read from index 0; a proper prefix
  /// sorts first. For equal lengths this matches byte-wise order of to_bytes().
  friend bool lex_less(const BitVec& a, const BitVec& b);

 private:
  void clear_tail();

  std::size_t nbits_ = 0;
  std::vector<std::uint64_t> words_;
};

BitVec concat(std::span<const BitVec> parts);

}  // namespace cqba
