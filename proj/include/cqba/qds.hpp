#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cqba/bitvec.hpp"
#include "cqba/gf2poly.hpp"

namespace cqba {

class KeyExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KeyReuse : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// One party's (X, Y, Z) key strings for a session. Copies refer to the same
/// key material and share its spent flag.
class KeyTriple {
 public:
  KeyTriple() = default;
  KeyTriple(BitVec x, BitVec y, BitVec z);

  const BitVec& x() const { return x_; }
  const BitVec& y() const { return y_; }
  const BitVec& z() const { return z_; }
  std::size_t n() const { return x_.size(); }

  bool spent() const { return spent_ && *spent_; }
  /// Marks the material used; throws KeyReuse if it already was.
  void consume() const;

  /// Concatenation x || y || z.
  BitVec material() const;

  /// Component-wise XOR. The result is fresh, unspent material.
  friend KeyTriple operator^(const KeyTriple& a, const KeyTriple& b);

 private:
  BitVec x_, y_, z_;
  std::shared_ptr<bool> spent_;
};

/// A pairwise secret-key pool (one end of a QKD link). Bits are handed out
/// strictly once, in order, and every allocation is logged.
class KeySource {
 public:
  struct Allocation {
    std::uint64_t offset;
    std::uint64_t bits;
    std::string label;
  };

  /// Pseudo-random material from a seed, limited to capacity_bits in total.
  KeySource(std::string name, std::uint64_t seed, std::uint64_t capacity_bits);
  /// Fixed material; capacity is its length.
  static KeySource from_bits(std::string name, BitVec material);

  const std::string& name() const { return name_; }
  std::uint64_t capacity() const { return capacity_; }
  std::uint64_t used() const { return cursor_; }
  std::uint64_t remaining() const { return capacity_ - cursor_; }

  /// Throws KeyExhausted (consuming nothing) when fewer than nbits remain.
  BitVec take(std::size_t nbits, std::string label = {});
  const std::vector<Allocation>& allocations() const { return log_; }

 private:
  KeySource() = default;
  bool next_bit();

  std::string name_;
  std::uint64_t capacity_ = 0;
  std::uint64_t cursor_ = 0;
  std::optional<BitVec> fixed_;
  std::mt19937_64 rng_;
  std::uint64_t pool_ = 0;
  int pool_left_ = 0;
  std::vector<Allocation> log_;
};

struct SessionKeys {
  KeyTriple signer;
  KeyTriple forwarder;
  KeyTriple verifier;

  /// signer == forwarder ^ verifier bitwise.
  bool consistent() const;
};

/// Forwarder triple from sf, verifier triple from sv, signer = XOR.
/// Either both sources supply 3n bits or nothing is consumed.
SessionKeys derive_session_keys(KeySource& sf, KeySource& sv, std::size_t n);

/// Star-network form: the signer's triple comes from the signer-CA link, the
/// forwarder's from the forwarder-CA link, and the CA (verifier) holds their
/// XOR. Only links to the CA are used.
SessionKeys derive_star_session_keys(KeySource& signer_link, KeySource& forwarder_link,
                                     std::size_t n, const std::string& label = {});

struct SignedPackage {
  std::uint64_t session_id = 0;
  BitVec message;
  BitVec signature;
  BitVec encrypted_poly;

  /// session_id (8 bytes BE) || message bit length (8 bytes BE) || message ||
  /// signature || encrypted_poly, each bit string packed MSB-first.
  Bytes serialize() const;
  /// Inverse of serialize for signature length n; throws std::invalid_argument.
  static SignedPackage parse(std::span<const std::uint8_t> bytes, std::size_t n);

  friend bool operator==(const SignedPackage&, const SignedPackage&) = default;
};

enum class Verdict { accept, reject_digest, reject_reducible, reject_malformed };

std::string_view verdict_name(Verdict v);

/// Signs with fresh irreducible p_s drawn from poly_rng; consumes keys.
/// Throws KeyReuse for spent keys and std::invalid_argument for an empty message.
SignedPackage sign(const KeyTriple& keys, const BitVec& message, std::mt19937_64& poly_rng,
                   std::uint64_t session_id = 0);

/// Checks pkg against the signer-equivalent keys without consuming anything.
Verdict check_package(const SignedPackage& pkg, const KeyTriple& signer_keys);

/// Forwarder side: reconstructs the signer keys from its own triple and the
/// verifier's announced one. Consumes `own`.
Verdict verify_as_forwarder(const SignedPackage& pkg, const KeyTriple& own,
                            const KeyTriple& received_verifier_keys);

/// CA side, symmetric to verify_as_forwarder. Consumes `own`.
Verdict verify_as_ca(const SignedPackage& pkg, const KeyTriple& own,
                     const KeyTriple& received_forwarder_keys);

/// KR / (3n).
double signature_rate(double key_rate_bits_per_s, std::size_t n);

}  // namespace cqba
