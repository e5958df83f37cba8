#include "cqba/bitvec.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace cqba {

namespace {
constexpr std::size_t words_for(std::size_t nbits) { return (nbits + 63) / 64; }
}  // namespace

BitVec::BitVec(std::size_t nbits) : nbits_(nbits), words_(words_for(nbits), 0) {}

BitVec BitVec::from_bytes(std::span<const std::uint8_t> bytes, std::size_t nbits) {
  if (nbits > bytes.size() * 8) throw std::invalid_argument("BitVec::from_bytes: not enough bytes");
  BitVec out(nbits);
  for (std::size_t i = 0; i < nbits; ++i) {
    if ((bytes[i >> 3] >> (7 - (i & 7))) & 1u) out.words_[i >> 6] |= std::uint64_t{1} << (i & 63);
  }
  return out;
}

BitVec BitVec::from_string(std::string_view bits) {
  BitVec out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      out.set(i, true);
    } else if (bits[i] != '0') {
      throw std::invalid_argument("BitVec::from_string: expected only '0' and '1'");
    }
  }
  return out;
}

BitVec BitVec::random(std::size_t nbits, std::mt19937_64& rng) {
  BitVec out(nbits);
  for (auto& w : out.words_) w = rng();
  out.clear_tail();
  return out;
}

BitVec BitVec::ones(std::size_t nbits) {
  BitVec out(nbits);
  std::fill(out.words_.begin(), out.words_.end(), ~std::uint64_t{0});
  out.clear_tail();
  return out;
}

void BitVec::set(std::size_t i, bool v) {
  const std::uint64_t mask = std::uint64_t{1} << (i & 63);
  if (v) {
    words_[i >> 6] |= mask;
  } else {
    words_[i >> 6] &= ~mask;
  }
}

bool BitVec::none() const {
  return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
}

std::size_t BitVec::count() const {
  std::size_t c = 0;
  for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

BitVec& BitVec::operator^=(const BitVec& other) {
  if (other.nbits_ != nbits_) throw std::invalid_argument("BitVec xor: length mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= other.words_[i];
  return *this;
}

void BitVec::append(const BitVec& other) {
  const std::size_t shift = nbits_ & 63;
  const std::size_t base = nbits_ >> 6;
  nbits_ += other.nbits_;
  words_.resize(words_for(nbits_), 0);
  for (std::size_t i = 0; i < other.words_.size(); ++i) {
    const std::uint64_t w = other.words_[i];
    words_[base + i] |= w << shift;
    if (shift != 0 && base + i + 1 < words_.size()) words_[base + i + 1] |= w >> (64 - shift);
  }
}

BitVec BitVec::slice(std::size_t pos, std::size_t len) const {
  if (pos > nbits_ || len > nbits_ - pos) throw std::out_of_range("BitVec::slice");
  BitVec out(len);
  const std::size_t shift = pos & 63;
  const std::size_t base = pos >> 6;
  for (std::size_t i = 0; i < out.words_.size(); ++i) {
    std::uint64_t w = words_[base + i] >> shift;
    if (shift != 0 && base + i + 1 < words_.size()) w |= words_[base + i + 1] << (64 - shift);
    out.words_[i] = w;
  }
  out.clear_tail();
  return out;
}

Bytes BitVec::to_bytes() const {
  Bytes out((nbits_ + 7) / 8, 0);
  for (std::size_t i = 0; i < nbits_; ++i) {
    if (get(i)) out[i >> 3] |= static_cast<std::uint8_t>(0x80u >> (i & 7));
  }
  return out;
}

std::string BitVec::to_string() const {
  std::string s(nbits_, '0');
  for (std::size_t i = 0; i < nbits_; ++i) {
    if (get(i)) s[i] = '1';
  }
  return s;
}

std::string BitVec::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  for (auto b : to_bytes()) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 15]);
  }
  return s;
}

bool lex_less(const BitVec& a, const BitVec& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const bool x = a.get(i);
    const bool y = b.get(i);
    if (x != y) return y;
  }
  return a.size() < b.size();
}

void BitVec::clear_tail() {
  if ((nbits_ & 63) != 0 && !words_.empty()) {
    words_.back() &= (std::uint64_t{1} << (nbits_ & 63)) - 1;
  }
}

BitVec concat(std::span<const BitVec> parts) {
  BitVec out;
  for (const auto& p : parts) out.append(p);
  return out;
}

}  // namespace cqba
