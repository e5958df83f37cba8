#pragma once

// Word-level GF(2) kernels used by the polynomial and hashing code.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2/PCLMUL
// variant. The active table is chosen once at startup from CPUID and can be
// overridden (tests do this to compare backends on identical inputs).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace cqba::simd {

enum class Backend { scalar, avx2 };

std::string_view backend_name(Backend b);

struct KernelTable {
  Backend backend;

  /// dst ^= src, element-wise. Sizes must match.
  void (*xor_into)(std::span<std::uint64_t> dst, std::span<const std::uint64_t> src);

  /// Parity of popcount(a & b).
  bool (*and_parity)(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

  /// Streams an LFSR-generated Toeplitz matrix against a message.
  ///
  /// `column` holds an `nbits`-bit register (H_1 on entry). For each message
  /// bit k (in index order) the register is XORed into `digest` when the bit
  /// is set, then advanced: the new top bit (index nbits-1) is
  /// parity(feedback & column) and every other bit moves down by one.
  /// `column`, `feedback` and `digest` have ceil(nbits / 64) words.
  void (*toeplitz_stream)(std::span<std::uint64_t> column, std::span<const std::uint64_t> feedback,
                          std::size_t nbits, std::span<const std::uint64_t> message,
                          std::size_t msg_bits, std::span<std::uint64_t> digest);

  /// Carry-less product of two word vectors; out.size() == a.size() + b.size().
  void (*clmul)(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                std::span<std::uint64_t> out);
};

const KernelTable& scalar_kernels();

/// True when the CPU and the build both support the backend.
bool backend_available(Backend b);

/// Table for a specific backend; throws std::runtime_error if unavailable.
const KernelTable& kernels_for(Backend b);

/// The table selected for this process.
const KernelTable& active();

/// Overrides runtime selection. Not thread-safe against concurrent kernel use.
void force_backend(Backend b);

}  // namespace cqba::simd
