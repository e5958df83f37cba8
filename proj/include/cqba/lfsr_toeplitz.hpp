#pragma once

#include <cstddef>

#include "cqba/bitvec.hpp"
#include "cqba/gf2poly.hpp"

namespace cqba {

/// Parameters of one member H_{s,p} of the LFSR-Toeplitz hash family.
/// The key s is an N-bit vector (bit i = s_i) and p a degree-N irreducible
/// polynomial whose low coefficients drive the feedback.
class HashParams {
 public:
  /// Throws std::invalid_argument if the key length differs from the degree
  /// of poly, or poly is not irreducible (the check can be skipped by callers
  /// that have already verified it).
  HashParams(BitVec key, Poly2 poly, bool check_irreducible = true);

  const BitVec& key() const { return key_; }
  const Poly2& poly() const { return poly_; }
  /// p_0..p_{N-1} as a bit vector.
  const BitVec& feedback() const { return feedback_; }
  std::size_t digest_len() const { return key_.size(); }

 private:
  BitVec key_;
  Poly2 poly_;
  BitVec feedback_;
};

using Digest = BitVec;

/// One step of the column recurrence: the new top entry (index N-1) is the
/// inner product of p with the column; the other entries move down by one and
/// entry 0 is dropped.
BitVec lfsr_step(const BitVec& column, const Poly2& poly);

/// XOR of the Toeplitz columns H_k for every set message bit k.
/// Throws std::invalid_argument for an empty message.
Digest hash(const HashParams& params, const BitVec& message);

/// M * 2^(1-N), clamped to 1.
double forgery_bound(double msg_bits, double digest_bits);
/// log2 of the unclamped bound; usable where the bound underflows a double.
double log2_forgery_bound(double msg_bits, double digest_bits);

}  // namespace cqba
