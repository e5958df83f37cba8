// Compiled with -mavx2 -mpclmul; only reached after a CPUID check.
#include <immintrin.h>

#include <algorithm>
#include <bit>
#include <cassert>
#include <vector>

#include "kernels_internal.hpp"

namespace cqba::simd::detail {

namespace {

constexpr std::size_t kLanes = 4;

inline std::uint64_t hxor(__m256i v) {
  const __m128i x = _mm_xor_si128(_mm256_castsi256_si128(v), _mm256_extracti128_si256(v, 1));
  return static_cast<std::uint64_t>(_mm_cvtsi128_si64(x)) ^
         static_cast<std::uint64_t>(_mm_extract_epi64(x, 1));
}

void xor_into_avx2(std::span<std::uint64_t> dst, std::span<const std::uint64_t> src) {
  assert(dst.size() == src.size());
  std::size_t i = 0;
  for (; i + kLanes <= dst.size(); i += kLanes) {
    auto* d = reinterpret_cast<__m256i*>(dst.data() + i);
    const auto* s = reinterpret_cast<const __m256i*>(src.data() + i);
    _mm256_storeu_si256(d, _mm256_xor_si256(_mm256_loadu_si256(d), _mm256_loadu_si256(s)));
  }
  for (; i < dst.size(); ++i) dst[i] ^= src[i];
}

bool and_parity_avx2(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  assert(a.size() == b.size());
  __m256i acc = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + kLanes <= a.size(); i += kLanes) {
    const __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a.data() + i));
    const __m256i y = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b.data() + i));
    acc = _mm256_xor_si256(acc, _mm256_and_si256(x, y));
  }
  std::uint64_t tail = hxor(acc);
  for (; i < a.size(); ++i) tail ^= a[i] & b[i];
  return (std::popcount(tail) & 1) != 0;
}

// The register is copied into a buffer padded to a multiple of four words
// plus one guard word, so every chunk can load its right neighbour unaligned.
void toeplitz_stream_avx2(std::span<std::uint64_t> column, std::span<const std::uint64_t> feedback,
                          std::size_t nbits, std::span<const std::uint64_t> message,
                          std::size_t msg_bits, std::span<std::uint64_t> digest) {
  const std::size_t words = column.size();
  const std::size_t padded = (words + kLanes - 1) / kLanes * kLanes;
  std::vector<std::uint64_t> col(padded + 1, 0), fb(padded, 0), dig(padded, 0);
  std::copy(column.begin(), column.end(), col.begin());
  std::copy(feedback.begin(), feedback.end(), fb.begin());
  std::copy(digest.begin(), digest.end(), dig.begin());

  const std::size_t top_word = (nbits - 1) >> 6;
  const std::uint64_t top_bit = std::uint64_t{1} << ((nbits - 1) & 63);

  for (std::size_t k = 0; k < msg_bits; ++k) {
    const long long take = -static_cast<long long>((message[k >> 6] >> (k & 63)) & 1u);
    const __m256i mask = _mm256_set1_epi64x(take);
    __m256i parity = _mm256_setzero_si256();
    for (std::size_t i = 0; i < padded; i += kLanes) {
      auto* cp = reinterpret_cast<__m256i*>(col.data() + i);
      auto* dp = reinterpret_cast<__m256i*>(dig.data() + i);
      const __m256i c = _mm256_loadu_si256(cp);
      const __m256i f = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(fb.data() + i));
      const __m256i hi = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(col.data() + i + 1));
      _mm256_storeu_si256(dp, _mm256_xor_si256(_mm256_loadu_si256(dp), _mm256_and_si256(c, mask)));
      parity = _mm256_xor_si256(parity, _mm256_and_si256(c, f));
      _mm256_storeu_si256(cp, _mm256_or_si256(_mm256_srli_epi64(c, 1), _mm256_slli_epi64(hi, 63)));
    }
    if (std::popcount(hxor(parity)) & 1) col[top_word] |= top_bit;
  }

  std::copy_n(col.begin(), words, column.begin());
  std::copy_n(dig.begin(), words, digest.begin());
}

void clmul_pclmul(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                  std::span<std::uint64_t> out) {
  assert(out.size() == a.size() + b.size());
  std::fill(out.begin(), out.end(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    const __m128i x = _mm_cvtsi64_si128(static_cast<long long>(a[i]));
    for (std::size_t j = 0; j < b.size(); ++j) {
      const __m128i y = _mm_cvtsi64_si128(static_cast<long long>(b[j]));
      const __m128i p = _mm_clmulepi64_si128(x, y, 0x00);
      out[i + j] ^= static_cast<std::uint64_t>(_mm_cvtsi128_si64(p));
      out[i + j + 1] ^= static_cast<std::uint64_t>(_mm_extract_epi64(p, 1));
    }
  }
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{Backend::avx2, xor_into_avx2, and_parity_avx2, toeplitz_stream_avx2,
                                 clmul_pclmul};
  return table;
}

}  // namespace cqba::simd::detail
