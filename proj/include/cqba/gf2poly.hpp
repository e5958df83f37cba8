#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cqba/bitvec.hpp"

namespace cqba {

/// Polynomial over GF(2). Coefficient of x^k is bit k; storage is kept
/// normalized (no high zero words), so the zero polynomial has no words.
class Poly2 {
 public:
  Poly2() = default;

  static Poly2 from_words(std::vector<std::uint64_t> words);
  static Poly2 from_uint(std::uint64_t bits) { return from_words({bits}); }
  /// Coefficient vector: coeffs[k] is the coefficient of x^k.
  static Poly2 from_coeffs(const BitVec& coeffs);
  static Poly2 monomial(std::size_t k);
  /// x^n + sum_{k<n} low[k] x^k, with n = low.size().
  static Poly2 monic(const BitVec& low);

  bool is_zero() const { return words_.empty(); }
  /// Degree, or -1 for the zero polynomial.
  int degree() const;
  bool coeff(std::size_t k) const {
    return (k >> 6) < words_.size() && ((words_[k >> 6] >> (k & 63)) & 1u);
  }

  /// The n low-order coefficients (x^0..x^{n-1}) as a bit vector.
  BitVec low_coeffs(std::size_t n) const;
  std::span<const std::uint64_t> words() const { return words_; }

  Poly2& operator^=(const Poly2& other);
  friend Poly2 operator^(Poly2 a, const Poly2& b) { return a ^= b; }
  friend bool operator==(const Poly2&, const Poly2&) = default;

  /// Human-readable form such as "x^3+x+1".
  std::string to_string() const;

 private:
  void normalize();
  std::vector<std::uint64_t> words_;

  friend Poly2 multiply(const Poly2& a, const Poly2& b);
  friend Poly2 mod(const Poly2& a, const Poly2& modulus);
};

Poly2 multiply(const Poly2& a, const Poly2& b);
/// Remainder of a divided by modulus; throws std::invalid_argument on zero modulus.
Poly2 mod(const Poly2& a, const Poly2& modulus);
/// a*b mod modulus over GF(2); throws std::invalid_argument on zero modulus.
Poly2 multiply_mod(const Poly2& a, const Poly2& b, const Poly2& modulus);
Poly2 gcd(Poly2 a, Poly2 b);

/// Rabin's test: p of degree N is irreducible iff x^(2^N) = x (mod p) and
/// gcd(x^(2^(N/q)) - x, p) = 1 for every prime q dividing N.
/// Throws std::invalid_argument for constant polynomials.
bool is_irreducible(const Poly2& p);

/// Uniformly random monic irreducible polynomial of the given degree (>= 2),
/// by rejection sampling. Deterministic for a given generator state.
Poly2 random_irreducible(std::size_t degree, std::mt19937_64& rng);

}  // namespace cqba
