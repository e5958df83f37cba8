#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cqba/bitvec.hpp"
#include "cqba/orders.hpp"
#include "cqba/qds.hpp"

namespace cqba {

enum class StrategyKind {
  passive,
  forge_pair,
  forge_message_only,
  tamper_hop_sigs,
  random_hash_forgery,
  distinct_orders_general,
};

std::string_view strategy_name(StrategyKind k);
/// Throws std::invalid_argument for unknown names.
StrategyKind parse_strategy(std::string_view name);

struct StrategySpec {
  StrategyKind kind = StrategyKind::passive;
  /// Party id: 0 is the general, 1..N-1 are lieutenants.
  int party = 0;
  /// Position in the gathered list to attack; -1 picks one at random.
  int target = -1;
  /// Number of attempts per protocol step that are tampered with.
  int persistence = 1;
};

/// Where in a round a hook is being invoked.
struct StepContext {
  int round = 0;
  int phase = 0;
  int initiator = 0;
  int hop = 0;
  int attempt = 0;
};

/// All dishonest parties of a run. They share one seeded random source and
/// one pooled view of everything delivered to any member. Hooks are only
/// callable for members and only see the inputs handed to them.
class Coalition {
 public:
  Coalition() = default;
  /// Throws std::invalid_argument for a general-only kind on a lieutenant,
  /// a lieutenant kind on the general, or two strategies for one party.
  Coalition(std::vector<StrategySpec> specs, std::uint64_t seed, bool general_dishonest = false);

  bool is_dishonest(int party) const;
  const StrategySpec* strategy(int party) const;
  std::vector<int> members() const;

  /// Order handed to `lieutenant` by a dishonest general. Orders differ per
  /// lieutenant under distinct_orders_general; otherwise m0 is used.
  BitVec general_order(int lieutenant, const BitVec& m0);

  /// A member acting as forwarder passes `received` on to the CA, possibly
  /// altered.
  SignedPackage forward_to_ca(int party, const StepContext& ctx, const SignedPackage& received);

  /// A member holding a gathering alters it before signing the next hop.
  /// Returns true if anything was changed.
  bool tamper_gather(int party, const StepContext& ctx, GatherState& g);

  /// Records traffic delivered to a member.
  void observe(int party, std::string_view what, std::span<const std::uint8_t> bytes);
  std::size_t view_size() const { return view_.size(); }

 private:
  bool acts(const StrategySpec& s, const StepContext& ctx) const {
    return ctx.attempt < s.persistence;
  }
  const StrategySpec& require_member(int party) const;
  BitVec random_nonzero(std::size_t nbits);
  std::size_t pick_target(const StrategySpec& s, std::size_t count);

  std::map<int, StrategySpec> specs_;
  bool general_dishonest_ = false;
  std::mt19937_64 rng_;
  std::map<int, BitVec> general_orders_;

  struct Observation {
    int party;
    std::string what;
    Bytes payload;
  };
  std::vector<Observation> view_;
};

}  // namespace cqba
