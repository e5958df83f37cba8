#include "cqba/lfsr_toeplitz.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cqba/simd/kernels.hpp"

namespace cqba {

HashParams::HashParams(BitVec key, Poly2 poly, bool check_irreducible)
    : key_(std::move(key)), poly_(std::move(poly)) {
  if (key_.empty()) throw std::invalid_argument("HashParams: empty key");
  if (poly_.degree() != static_cast<int>(key_.size())) {
    throw std::invalid_argument("HashParams: key length must equal polynomial degree");
  }
  if (check_irreducible && !is_irreducible(poly_)) {
    throw std::invalid_argument("HashParams: polynomial is reducible");
  }
  feedback_ = poly_.low_coeffs(key_.size());
}

BitVec lfsr_step(const BitVec& column, const Poly2& poly) {
  if (poly.degree() != static_cast<int>(column.size()) || column.empty()) {
    throw std::invalid_argument("lfsr_step: column length must equal polynomial degree");
  }
  const std::size_t n = column.size();
  const BitVec fb = poly.low_coeffs(n);
  BitVec out = column;
  BitVec digest(n);
  const std::uint64_t zero = 0;
  simd::active().toeplitz_stream(out.words(), fb.words(), n, std::span<const std::uint64_t>(&zero, 1), 1,
                                 digest.words());
  return out;
}

Digest hash(const HashParams& params, const BitVec& message) {
  if (message.empty()) throw std::invalid_argument("hash: empty message");
  const std::size_t n = params.digest_len();
  BitVec column = params.key();
  Digest digest(n);
  simd::active().toeplitz_stream(column.words(), params.feedback().words(), n, message.words(),
                                 message.size(), digest.words());
  return digest;
}

double log2_forgery_bound(double msg_bits, double digest_bits) {
  return std::log2(msg_bits) + 1.0 - digest_bits;
}

double forgery_bound(double msg_bits, double digest_bits) {
  return std::min(1.0, std::exp2(log2_forgery_bound(msg_bits, digest_bits)));
}

}  // namespace cqba
