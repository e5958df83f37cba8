#include <bit>
#include <cassert>

#include "kernels_internal.hpp"

namespace cqba::simd {

namespace {

void xor_into_scalar(std::span<std::uint64_t> dst, std::span<const std::uint64_t> src) {
  assert(dst.size() == src.size());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
}

bool and_parity_scalar(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  assert(a.size() == b.size());
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc ^= a[i] & b[i];
  return (std::popcount(acc) & 1) != 0;
}

void toeplitz_stream_scalar(std::span<std::uint64_t> column, std::span<const std::uint64_t> feedback,
                            std::size_t nbits, std::span<const std::uint64_t> message,
                            std::size_t msg_bits, std::span<std::uint64_t> digest) {
  const std::size_t words = column.size();
  const std::size_t top_word = (nbits - 1) >> 6;
  const std::uint64_t top_bit = std::uint64_t{1} << ((nbits - 1) & 63);

  if (words == 1) {
    std::uint64_t col = column[0];
    std::uint64_t dig = digest[0];
    const std::uint64_t fb = feedback[0];
    for (std::size_t k = 0; k < msg_bits; ++k) {
      const std::uint64_t take = 0 - ((message[k >> 6] >> (k & 63)) & 1u);
      dig ^= col & take;
      const std::uint64_t newbit = static_cast<std::uint64_t>(std::popcount(col & fb) & 1);
      col = (col >> 1) | (top_bit & (0 - newbit));
    }
    column[0] = col;
    digest[0] = dig;
    return;
  }

  for (std::size_t k = 0; k < msg_bits; ++k) {
    const std::uint64_t take = 0 - ((message[k >> 6] >> (k & 63)) & 1u);
    std::uint64_t parity = 0;
    for (std::size_t i = 0; i < words; ++i) {
      const std::uint64_t c = column[i];
      digest[i] ^= c & take;
      parity ^= c & feedback[i];
      const std::uint64_t hi = (i + 1 < words) ? column[i + 1] : 0;
      column[i] = (c >> 1) | (hi << 63);
    }
    if (std::popcount(parity) & 1) column[top_word] |= top_bit;
  }
}

// 64x64 -> 128 carry-less multiply, shift-and-xor.
inline void clmul64(std::uint64_t a, std::uint64_t b, std::uint64_t& lo, std::uint64_t& hi) {
  lo = 0;
  hi = 0;
  for (int i = 0; i < 64; ++i) {
    if ((b >> i) & 1u) {
      lo ^= a << i;
      if (i != 0) hi ^= a >> (64 - i);
    }
  }
}

void clmul_scalar(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                  std::span<std::uint64_t> out) {
  assert(out.size() == a.size() + b.size());
  for (auto& w : out) w = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) {
      std::uint64_t lo, hi;
      clmul64(a[i], b[j], lo, hi);
      out[i + j] ^= lo;
      out[i + j + 1] ^= hi;
    }
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Backend::scalar, xor_into_scalar, and_parity_scalar,
                                 toeplitz_stream_scalar, clmul_scalar};
  return table;
}

}  // namespace cqba::simd
