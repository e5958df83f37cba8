#pragma once

#include "cqba/simd/kernels.hpp"

namespace cqba::simd::detail {

#if defined(CQBA_HAVE_AVX2_KERNELS)
const KernelTable& avx2_kernels();
#endif

}  // namespace cqba::simd::detail
