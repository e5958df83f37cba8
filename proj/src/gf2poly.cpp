#include "cqba/gf2poly.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

#include "cqba/simd/kernels.hpp"

namespace cqba {

namespace {

// dst ^= src << shift, with dst large enough to hold the result.
void xor_shifted(std::vector<std::uint64_t>& dst, std::span<const std::uint64_t> src, std::size_t shift) {
  const std::size_t ws = shift >> 6;
  const std::size_t bs = shift & 63;
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i + ws] ^= src[i] << bs;
    if (bs != 0 && i + ws + 1 < dst.size()) dst[i + ws + 1] ^= src[i] >> (64 - bs);
  }
}

int degree_of(std::span<const std::uint64_t> w) {
  for (std::size_t i = w.size(); i-- > 0;) {
    if (w[i] != 0) return static_cast<int>(i * 64 + 63 - std::countl_zero(w[i]));
  }
  return -1;
}

std::vector<std::size_t> prime_factors(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t q = 2; q * q <= n; ++q) {
    if (n % q == 0) {
      out.push_back(q);
      while (n % q == 0) n /= q;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

Poly2 square_mod(const Poly2& a, const Poly2& m) { return multiply_mod(a, a, m); }

// x^(2^k) mod p for k = 0..kmax, by repeated squaring.
std::vector<Poly2> frobenius_powers(const Poly2& p, std::size_t kmax) {
  std::vector<Poly2> out;
  out.reserve(kmax + 1);
  out.push_back(mod(Poly2::monomial(1), p));
  for (std::size_t k = 1; k <= kmax; ++k) out.push_back(square_mod(out.back(), p));
  return out;
}

}  // namespace

Poly2 Poly2::from_words(std::vector<std::uint64_t> words) {
  Poly2 p;
  p.words_ = std::move(words);
  p.normalize();
  return p;
}

Poly2 Poly2::from_coeffs(const BitVec& coeffs) {
  return from_words({coeffs.words().begin(), coeffs.words().end()});
}

Poly2 Poly2::monomial(std::size_t k) {
  std::vector<std::uint64_t> w(k / 64 + 1, 0);
  w[k / 64] = std::uint64_t{1} << (k & 63);
  return from_words(std::move(w));
}

Poly2 Poly2::monic(const BitVec& low) {
  Poly2 p = from_coeffs(low);
  return p ^ monomial(low.size());
}

int Poly2::degree() const { return degree_of(words_); }

BitVec Poly2::low_coeffs(std::size_t n) const {
  BitVec out(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (coeff(k)) out.set(k, true);
  }
  return out;
}

Poly2& Poly2::operator^=(const Poly2& other) {
  if (other.words_.size() > words_.size()) words_.resize(other.words_.size(), 0);
  for (std::size_t i = 0; i < other.words_.size(); ++i) words_[i] ^= other.words_[i];
  normalize();
  return *this;
}

std::string Poly2::to_string() const {
  if (is_zero()) return "0";
  std::string s;
  for (int k = degree(); k >= 0; --k) {
    if (!coeff(static_cast<std::size_t>(k))) continue;
    if (!s.empty()) s += "+";
    if (k == 0) {
      s += "1";
    } else if (k == 1) {
      s += "x";
    } else {
      s += "x^" + std::to_string(k);
    }
  }
  return s;
}

void Poly2::normalize() {
  while (!words_.empty() && words_.back() == 0) words_.pop_back();
}

Poly2 multiply(const Poly2& a, const Poly2& b) {
  if (a.is_zero() || b.is_zero()) return {};
  std::vector<std::uint64_t> out(a.words_.size() + b.words_.size(), 0);
  simd::active().clmul(a.words_, b.words_, out);
  return Poly2::from_words(std::move(out));
}

Poly2 mod(const Poly2& a, const Poly2& modulus) {
  const int dm = modulus.degree();
  if (dm < 0) throw std::invalid_argument("mod: zero modulus");
  std::vector<std::uint64_t> r = a.words_;
  for (int d = degree_of(r); d >= dm; d = degree_of(r)) {
    xor_shifted(r, modulus.words_, static_cast<std::size_t>(d - dm));
  }
  return Poly2::from_words(std::move(r));
}

Poly2 multiply_mod(const Poly2& a, const Poly2& b, const Poly2& modulus) {
  if (modulus.is_zero()) throw std::invalid_argument("multiply_mod: zero modulus");
  return mod(multiply(mod(a, modulus), mod(b, modulus)), modulus);
}

Poly2 gcd(Poly2 a, Poly2 b) {
  while (!b.is_zero()) {
    Poly2 r = mod(a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

bool is_irreducible(const Poly2& p) {
  const int deg = p.degree();
  if (deg < 1) throw std::invalid_argument("is_irreducible: constant polynomial");
  const auto n = static_cast<std::size_t>(deg);
  const Poly2 x = mod(Poly2::monomial(1), p);
  const auto powers = frobenius_powers(p, n);
  if (powers[n] != x) return false;
  const Poly2 one = Poly2::from_uint(1);
  for (std::size_t q : prime_factors(n)) {
    if (gcd(p, powers[n / q] ^ x) != one) return false;
  }
  return true;
}

Poly2 random_irreducible(std::size_t degree, std::mt19937_64& rng) {
  if (degree < 2) throw std::invalid_argument("random_irreducible: degree must be >= 2");
  const Poly2 one = Poly2::from_uint(1);
  // Factors of degree <= sieve_depth are found by gcd with x^(2^k) - x
  // before paying for the full test.
  const std::size_t sieve_depth = std::min<std::size_t>(8, degree / 2);
  for (;;) {
    const Poly2 candidate = Poly2::monic(BitVec::random(degree, rng));
    if (!candidate.coeff(0)) continue;
    const Poly2 x = mod(Poly2::monomial(1), candidate);
    Poly2 power = x;
    bool has_small_factor = false;
    for (std::size_t k = 1; k <= sieve_depth && !has_small_factor; ++k) {
      power = square_mod(power, candidate);
      has_small_factor = gcd(candidate, power ^ x) != one;
    }
    if (has_small_factor) continue;
    if (is_irreducible(candidate)) return candidate;
  }
}

}  // namespace cqba
