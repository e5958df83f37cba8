#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "cqba/adversary.hpp"
#include "cqba/bitvec.hpp"
#include "cqba/orders.hpp"
#include "cqba/qds.hpp"

namespace cqba {

/// Party ids: 0 is the commanding general, 1..N-1 the lieutenants, N the CA.
inline int ca_id(int players) { return players; }

enum class ChannelClass { classical_auth, key_delivery };

/// What an event carries, for logging and capability checks.
struct EventTag {
  std::uint64_t session_id = 0;
  int round = 0;
  int phase = 0;
  int initiator = 0;
  int hop = 0;
  std::string kind;
  /// Parties of the QDS session the event belongs to.
  int signer = -1;
  int forwarder = -1;
  bool key_bearing = false;
};

/// Message passing between parties. The protocol engine calls transmit for
/// every delivery and continues with the payload as received.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Bytes transmit(int src, int dst, ChannelClass cls, Bytes payload, const EventTag& tag) = 0;
};

/// Delivers everything unchanged and records nothing.
class DirectTransport : public Transport {
 public:
  Bytes transmit(int, int, ChannelClass, Bytes payload, const EventTag&) override { return payload; }
};

struct LedgerKey {
  int round = 0;
  int phase = 0;
  /// Phase 1: the receiving lieutenant. Phase 2: the gathering's initiator.
  int initiator = 0;
  /// 0 in phase 1; 1..N-1 in phase 2.
  int hop = 0;

  friend auto operator<=>(const LedgerKey&, const LedgerKey&) = default;
};

/// The CA's append-only record of every accepted signature and the
/// signer-equivalent keys needed to re-check it.
class CaRecord {
 public:
  struct Entry {
    LedgerKey key;
    int signer;
    SignedPackage package;
    KeyTriple signer_keys;
  };

  /// Throws std::logic_error if the key is already present.
  void append(Entry e);
  const Entry* find(const LedgerKey& k) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Length-prefixed (4 bytes BE) canonical package serializations in
  /// append order.
  Bytes to_log() const;

 private:
  std::vector<Entry> entries_;
  std::map<LedgerKey, std::size_t> index_;
};

struct RoleConfig {
  int players = 4;
  int malicious = 0;
  bool general_honest = true;
  std::size_t message_bits = 8;
  std::size_t signature_bits = 32;
  int retry_budget = 32;

  int lieutenants() const { return players - 1; }
  /// Throws std::invalid_argument when the coalition does not fit the config.
  void validate(const Coalition& coalition) const;
};

/// One QDS attempt.
struct QdsRecord {
  int round = 0;
  int phase = 0;
  int initiator = 0;
  int hop = 0;
  int signer = 0;
  int forwarder = 0;
  int attempt = 0;
  std::uint64_t session_id = 0;
  std::size_t msg_bits = 0;
  Verdict ca_verdict = Verdict::reject_malformed;
  /// CA check of embedded signatures against its ledger (phase 2 only).
  bool ledger_ok = true;
  /// CA check of embedded orders against recorded signatures (phase 2 only).
  bool orders_ok = true;
  /// Unset when the CA rejected and the forwarder never got to verify.
  std::optional<Verdict> forwarder_verdict;
  bool accepted = false;
};

using DecisionFn = std::function<BitVec(std::span<const BitVec>)>;

/// Most frequent order; ties go to the lexicographically smallest.
BitVec majority_decision(std::span<const BitVec> orders);

struct RoundResult {
  int round = 0;
  bool aborted = false;
  std::string abort_reason;
  /// Indexed by lieutenant id (entry 0 unused); empty for aborted rounds.
  std::vector<std::optional<BitVec>> outputs;
  std::vector<GatherState> final_states;
  std::vector<QdsRecord> qds;
  std::size_t qds_accepted = 0;
  std::size_t restarts = 0;
  std::vector<std::string> forgery_events;
  /// Orders the general sent to each lieutenant.
  std::vector<BitVec> sent_orders;
};

/// Drives rounds of the protocol over a transport. Quantum keys come from a
/// star of pairwise links, one per player, each shared with the CA.
class Protocol {
 public:
  Protocol(RoleConfig config, Coalition& coalition, std::vector<KeySource>& links, Transport& transport,
           std::uint64_t seed, DecisionFn decide = majority_decision);

  RoundResult run_round(int round, const BitVec& m0);

  const CaRecord& ledger() const { return ledger_; }

 private:
  /// One full QDS step with restarts. `make_package` is called per attempt
  /// with the fresh signer keys and returns the signer's wire package;
  /// `ca_checks` runs the CA's extra checks on the package it received.
  std::optional<SignedPackage> qds_step(
      RoundResult& result, StepContext ctx, int signer, int forwarder,
      const std::function<SignedPackage(const KeyTriple&, std::uint64_t, const StepContext&)>& make_package,
      const std::function<std::pair<bool, bool>(const SignedPackage&)>& ca_checks, LedgerKey key);

  std::pair<bool, bool> check_gather(const SignedPackage& pkg, int round, int initiator, int hop) const;
  std::mt19937_64& party_rng(int party);
  static std::uint64_t session_id(const StepContext& ctx);

  RoleConfig cfg_;
  Coalition& coalition_;
  std::vector<KeySource>& links_;
  Transport& net_;
  DecisionFn decide_;
  CaRecord ledger_;
  std::vector<std::mt19937_64> rngs_;
};

/// Exact signing-input length at hop j with uniform order length m.
inline std::size_t gather_length(std::size_t j, std::size_t m, std::size_t n) { return j * m + (2 * j - 1) * n; }

}  // namespace cqba
