#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqba/adversary.hpp"
#include "cqba/channel.hpp"
#include "cqba/consensus.hpp"
#include "cqba/keyrate.hpp"
#include "json.hpp"

namespace cqba {

/// Malformed or inconsistent scenario.
class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ChannelScenario {
  LinkGeometry geometry;
  OpticsParams optics;
};

struct Scenario {
  RoleConfig role;
  std::vector<StrategySpec> adversary;
  std::uint64_t seed = 1;
  int rounds = 1;
  /// Capacity of each star link's key pool.
  std::uint64_t key_budget_bits = std::uint64_t{1} << 32;
  /// Order of the general, hex MSB-first; random per round when absent.
  std::optional<std::string> order_hex;
  std::optional<ChannelScenario> channel;
  std::optional<DecoyParams> decoy;

  /// Unknown fields anywhere are rejected. Throws ScenarioError.
  static Scenario from_json(const nlohmann::json& j);
  static Scenario load(const std::filesystem::path& path);
  void validate() const;
};

struct Event {
  std::uint64_t tick = 0;
  std::uint64_t seq = 0;
  int src = 0;
  int dst = 0;
  ChannelClass cls = ChannelClass::classical_auth;
  EventTag tag;
  std::size_t bytes = 0;
  std::string sha256;
  /// Delivered to, or sent by, a dishonest party.
  bool adversary_visible = false;
};

/// Single-threaded simulated network. Every delivery becomes one event; the
/// logical clock advances once per QDS attempt.
class EventLoop : public Transport {
 public:
  EventLoop(int players, const Coalition& coalition);

  Bytes transmit(int src, int dst, ChannelClass cls, Bytes payload, const EventTag& tag) override;

  const std::vector<Event>& events() const { return events_; }
  /// Star links (party ids) that carried key material.
  const std::set<int>& quantum_links_used() const { return links_used_; }

 private:
  void check_taint(const Event& e, const Bytes& payload);

  int players_;
  const Coalition& coalition_;
  std::vector<Event> events_;
  std::uint64_t tick_ = 0;
  std::uint64_t last_session_ = ~std::uint64_t{0};
  std::set<int> links_used_;
  /// Key material handed to honest parties and not yet released by protocol.
  std::vector<Bytes> honest_keys_;
};

struct RoundCheck {
  bool ic1 = true;
  /// Vacuous (true) when the general is dishonest.
  bool ic2 = true;
};

RoundCheck check_round(const RoundResult& r, const Coalition& coalition, const BitVec& m0, bool general_honest);

struct Transcript {
  Scenario scenario;
  std::vector<BitVec> orders;
  std::vector<RoundResult> rounds;
  std::vector<RoundCheck> checks;
  std::vector<Event> events;
  std::set<int> quantum_links_used;
  std::vector<std::vector<KeySource::Allocation>> allocations;
  Bytes ledger_log;
  std::optional<Bb84Point> link_rate;
  std::size_t signature_bits_for_rate = 0;

  bool ok() const;
  std::size_t qds_count() const;
  std::size_t restart_count() const;

  std::string events_csv() const;
  /// One row per QDS attempt.
  std::string qds_csv() const;
  std::string keys_csv() const;
  nlohmann::json summary() const;
};

/// Throws ScenarioError for invalid scenarios.
Transcript run(const Scenario& s);

/// events.csv, transcript.csv, keys.csv, summary.json, ledger.bin.
void write_transcript(const Transcript& t, const std::filesystem::path& dir);

std::string sha256_hex(std::span<const std::uint8_t> data);

}  // namespace cqba
