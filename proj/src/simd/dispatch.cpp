#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "kernels_internal.hpp"

namespace cqba::simd {

namespace {

bool cpu_has_avx2() {
#if defined(CQBA_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("pclmul") &&
         __builtin_cpu_supports("popcnt");
#else
  return false;
#endif
}

// CQBA_SIMD=scalar pins the reference kernels.
const KernelTable* select_default() {
  if (const char* env = std::getenv("CQBA_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
    return &scalar_kernels();
  }
  return cpu_has_avx2() ? &kernels_for(Backend::avx2) : &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{select_default()};
  return table;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend b) {
  if (b == Backend::scalar) return true;
  return cpu_has_avx2();
}

const KernelTable& kernels_for(Backend b) {
  if (b == Backend::scalar) return scalar_kernels();
#if defined(CQBA_HAVE_AVX2_KERNELS)
  if (cpu_has_avx2()) return detail::avx2_kernels();
#endif
  throw std::runtime_error("SIMD backend not available on this machine");
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void force_backend(Backend b) { current().store(&kernels_for(b), std::memory_order_relaxed); }

}  // namespace cqba::simd
