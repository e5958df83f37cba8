#include "cqba/qds.hpp"

#include <stdexcept>

#include "cqba/lfsr_toeplitz.hpp"

namespace cqba {

namespace {

void put_be64(Bytes& out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_be64(std::span<const std::uint8_t> b, std::size_t pos) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | b[pos + i];
  return v;
}

void append_bytes(Bytes& out, const BitVec& v) {
  const Bytes b = v.to_bytes();
  out.insert(out.end(), b.begin(), b.end());
}

}  // namespace

KeyTriple::KeyTriple(BitVec x, BitVec y, BitVec z)
    : x_(std::move(x)), y_(std::move(y)), z_(std::move(z)), spent_(std::make_shared<bool>(false)) {
  if (x_.size() != y_.size() || x_.size() != z_.size()) {
    throw std::invalid_argument("KeyTriple: x, y, z must have equal length");
  }
}

void KeyTriple::consume() const {
  if (!spent_) throw KeyReuse("KeyTriple: empty key material");
  if (*spent_) throw KeyReuse("KeyTriple: key material already used");
  *spent_ = true;
}

BitVec KeyTriple::material() const {
  BitVec out = x_;
  out.append(y_);
  out.append(z_);
  return out;
}

KeyTriple operator^(const KeyTriple& a, const KeyTriple& b) {
  return KeyTriple(a.x_ ^ b.x_, a.y_ ^ b.y_, a.z_ ^ b.z_);
}

KeySource::KeySource(std::string name, std::uint64_t seed, std::uint64_t capacity_bits)
    : name_(std::move(name)), capacity_(capacity_bits), rng_(seed) {}

KeySource KeySource::from_bits(std::string name, BitVec material) {
  KeySource s;
  s.name_ = std::move(name);
  s.capacity_ = material.size();
  s.fixed_ = std::move(material);
  return s;
}

bool KeySource::next_bit() {
  if (pool_left_ == 0) {
    pool_ = rng_();
    pool_left_ = 64;
  }
  const bool b = pool_ & 1u;
  pool_ >>= 1;
  --pool_left_;
  return b;
}

BitVec KeySource::take(std::size_t nbits, std::string label) {
  if (nbits > remaining()) {
    throw KeyExhausted("key source '" + name_ + "' exhausted: requested " + std::to_string(nbits) +
                       " bits, " + std::to_string(remaining()) + " left");
  }
  BitVec out;
  if (fixed_) {
    out = fixed_->slice(cursor_, nbits);
  } else {
    out = BitVec(nbits);
    for (std::size_t i = 0; i < nbits; ++i) out.set(i, next_bit());
  }
  log_.push_back({cursor_, nbits, std::move(label)});
  cursor_ += nbits;
  return out;
}

bool SessionKeys::consistent() const {
  const KeyTriple x = forwarder ^ verifier;
  return x.x() == signer.x() && x.y() == signer.y() && x.z() == signer.z();
}

namespace {

KeyTriple take_triple(KeySource& src, std::size_t n, const std::string& label) {
  BitVec m = src.take(3 * n, label);
  return KeyTriple(m.slice(0, n), m.slice(n, n), m.slice(2 * n, n));
}

}  // namespace

SessionKeys derive_session_keys(KeySource& sf, KeySource& sv, std::size_t n) {
  if (n == 0) throw std::invalid_argument("derive_session_keys: n must be positive");
  if (sf.remaining() < 3 * n || sv.remaining() < 3 * n) {
    throw KeyExhausted("derive_session_keys: insufficient key material");
  }
  SessionKeys k;
  k.forwarder = take_triple(sf, n, "forwarder");
  k.verifier = take_triple(sv, n, "verifier");
  k.signer = k.forwarder ^ k.verifier;
  return k;
}

SessionKeys derive_star_session_keys(KeySource& signer_link, KeySource& forwarder_link, std::size_t n,
                                     const std::string& label) {
  if (n == 0) throw std::invalid_argument("derive_star_session_keys: n must be positive");
  if (signer_link.remaining() < 3 * n || forwarder_link.remaining() < 3 * n) {
    throw KeyExhausted("insufficient key material on '" +
                       (signer_link.remaining() < 3 * n ? signer_link.name() : forwarder_link.name()) +
                       "'");
  }
  SessionKeys k;
  k.signer = take_triple(signer_link, n, label);
  k.forwarder = take_triple(forwarder_link, n, label);
  k.verifier = k.signer ^ k.forwarder;
  return k;
}

Bytes SignedPackage::serialize() const {
  Bytes out;
  put_be64(out, session_id);
  put_be64(out, message.size());
  append_bytes(out, message);
  append_bytes(out, signature);
  append_bytes(out, encrypted_poly);
  return out;
}

SignedPackage SignedPackage::parse(std::span<const std::uint8_t> bytes, std::size_t n) {
  if (bytes.size() < 16) throw std::invalid_argument("SignedPackage::parse: truncated header");
  SignedPackage p;
  p.session_id = get_be64(bytes, 0);
  const std::uint64_t mbits = get_be64(bytes, 8);
  const std::size_t mbytes = (mbits + 7) / 8;
  const std::size_t nbytes = (n + 7) / 8;
  if (mbits > bytes.size() * 8 || bytes.size() != 16 + mbytes + 2 * nbytes) {
    throw std::invalid_argument("SignedPackage::parse: length mismatch");
  }
  p.message = BitVec::from_bytes(bytes.subspan(16, mbytes), mbits);
  p.signature = BitVec::from_bytes(bytes.subspan(16 + mbytes, nbytes), n);
  p.encrypted_poly = BitVec::from_bytes(bytes.subspan(16 + mbytes + nbytes, nbytes), n);
  return p;
}

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::accept:
      return "accept";
    case Verdict::reject_digest:
      return "reject_digest";
    case Verdict::reject_reducible:
      return "reject_reducible";
    case Verdict::reject_malformed:
      return "reject_malformed";
  }
  return "unknown";
}

SignedPackage sign(const KeyTriple& keys, const BitVec& message, std::mt19937_64& poly_rng,
                   std::uint64_t session_id) {
  if (message.empty()) throw std::invalid_argument("sign: empty message");
  if (keys.n() < 2) throw std::invalid_argument("sign: signature length must be at least 2");
  keys.consume();
  const std::size_t n = keys.n();
  const Poly2 ps = random_irreducible(n, poly_rng);
  const HashParams hp(keys.x(), ps, false);
  SignedPackage pkg;
  pkg.session_id = session_id;
  pkg.message = message;
  pkg.signature = hash(hp, message) ^ keys.y();
  pkg.encrypted_poly = ps.low_coeffs(n) ^ keys.z();
  return pkg;
}

Verdict check_package(const SignedPackage& pkg, const KeyTriple& signer_keys) {
  const std::size_t n = signer_keys.n();
  if (n < 2 || pkg.message.empty() || pkg.signature.size() != n || pkg.encrypted_poly.size() != n) {
    return Verdict::reject_malformed;
  }
  const Poly2 poly = Poly2::monic(pkg.encrypted_poly ^ signer_keys.z());
  if (!is_irreducible(poly)) return Verdict::reject_reducible;
  const HashParams hp(signer_keys.x(), poly, false);
  const BitVec expected = pkg.signature ^ signer_keys.y();
  return hash(hp, pkg.message) == expected ? Verdict::accept : Verdict::reject_digest;
}

namespace {

Verdict verify_reconstructed(const SignedPackage& pkg, const KeyTriple& own, const KeyTriple& other) {
  own.consume();
  if (own.n() != other.n()) return Verdict::reject_malformed;
  return check_package(pkg, own ^ other);
}

}  // namespace

Verdict verify_as_forwarder(const SignedPackage& pkg, const KeyTriple& own,
                            const KeyTriple& received_verifier_keys) {
  return verify_reconstructed(pkg, own, received_verifier_keys);
}

Verdict verify_as_ca(const SignedPackage& pkg, const KeyTriple& own,
                     const KeyTriple& received_forwarder_keys) {
  return verify_reconstructed(pkg, own, received_forwarder_keys);
}

double signature_rate(double key_rate_bits_per_s, std::size_t n) {
  if (n == 0) throw std::invalid_argument("signature_rate: n must be positive");
  return key_rate_bits_per_s / (3.0 * static_cast<double>(n));
}

}  // namespace cqba
