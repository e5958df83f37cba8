#include "cqba/adversary.hpp"

#include <algorithm>
#include <stdexcept>

namespace cqba {

namespace {

constexpr std::pair<StrategyKind, std::string_view> kNames[] = {
    {StrategyKind::passive, "passive"},
    {StrategyKind::forge_pair, "forge_pair"},
    {StrategyKind::forge_message_only, "forge_message_only"},
    {StrategyKind::tamper_hop_sigs, "tamper_hop_sigs"},
    {StrategyKind::random_hash_forgery, "random_hash_forgery"},
    {StrategyKind::distinct_orders_general, "distinct_orders_general"},
};

}  // namespace

std::string_view strategy_name(StrategyKind k) {
  for (auto& [kind, name] : kNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  for (auto& [kind, n] : kNames) {
    if (n == name) return kind;
  }
  throw std::invalid_argument("unknown adversary kind '" + std::string(name) + "'");
}

Coalition::Coalition(std::vector<StrategySpec> specs, std::uint64_t seed, bool general_dishonest)
    : general_dishonest_(general_dishonest), rng_(seed) {
  for (auto& s : specs) {
    if (s.party < 0) throw std::invalid_argument("adversary party must be non-negative");
    if (s.persistence < 0) throw std::invalid_argument("adversary persistence must be non-negative");
    const bool general_kind = s.kind == StrategyKind::distinct_orders_general;
    if (s.party == 0 && !(general_kind || s.kind == StrategyKind::passive)) {
      throw std::invalid_argument("strategy '" + std::string(strategy_name(s.kind)) +
                                  "' cannot be assigned to the general");
    }
    if (s.party != 0 && general_kind) {
      throw std::invalid_argument("distinct_orders_general applies to the general only");
    }
    if (!specs_.emplace(s.party, s).second) {
      throw std::invalid_argument("two strategies for party " + std::to_string(s.party));
    }
  }
  if (specs_.count(0) != 0) general_dishonest_ = true;
  if (general_dishonest_ && specs_.count(0) == 0) specs_.emplace(0, StrategySpec{StrategyKind::passive, 0});
}

bool Coalition::is_dishonest(int party) const { return specs_.count(party) != 0; }

const StrategySpec* Coalition::strategy(int party) const {
  auto it = specs_.find(party);
  return it == specs_.end() ? nullptr : &it->second;
}

std::vector<int> Coalition::members() const {
  std::vector<int> out;
  for (auto& [p, s] : specs_) out.push_back(p);
  return out;
}

const StrategySpec& Coalition::require_member(int party) const {
  const StrategySpec* s = strategy(party);
  if (s == nullptr) throw std::logic_error("adversary hook invoked for honest party " + std::to_string(party));
  return *s;
}

BitVec Coalition::random_nonzero(std::size_t nbits) {
  for (;;) {
    BitVec v = BitVec::random(nbits, rng_);
    if (!v.none()) return v;
  }
}

std::size_t Coalition::pick_target(const StrategySpec& s, std::size_t count) {
  if (s.target >= 0) return std::min<std::size_t>(static_cast<std::size_t>(s.target), count - 1);
  return static_cast<std::size_t>(rng_() % count);
}

BitVec Coalition::general_order(int lieutenant, const BitVec& m0) {
  const StrategySpec& s = require_member(0);
  if (s.kind != StrategyKind::distinct_orders_general) return m0;
  auto it = general_orders_.find(lieutenant);
  if (it != general_orders_.end()) return it->second;
  // Every lieutenant gets its own order, none equal to another's.
  for (;;) {
    BitVec cand = lieutenant == 1 ? m0 : m0 ^ random_nonzero(m0.size());
    bool fresh = true;
    for (auto& [l, o] : general_orders_) fresh = fresh && o != cand;
    if (fresh || general_orders_.size() >= (std::size_t{1} << std::min<std::size_t>(m0.size(), 20))) {
      general_orders_.emplace(lieutenant, cand);
      return cand;
    }
  }
}

SignedPackage Coalition::forward_to_ca(int party, const StepContext& ctx, const SignedPackage& received) {
  const StrategySpec& s = require_member(party);
  SignedPackage out = received;
  if (!acts(s, ctx)) return out;
  const std::size_t n = received.signature.size();
  switch (s.kind) {
    case StrategyKind::random_hash_forgery:
      out.message ^= random_nonzero(received.message.size());
      out.signature ^= BitVec::random(n, rng_);
      break;
    case StrategyKind::forge_pair:
      if (ctx.phase == 1) {
        const KeyTriple own(BitVec::random(n, rng_), BitVec::random(n, rng_), BitVec::random(n, rng_));
        out = sign(own, received.message ^ random_nonzero(received.message.size()), rng_, received.session_id);
      }
      break;
    case StrategyKind::forge_message_only:
      if (ctx.phase == 1) out.message ^= random_nonzero(received.message.size());
      break;
    case StrategyKind::tamper_hop_sigs:
      if (ctx.phase == 1) out.signature ^= random_nonzero(n);
      break;
    case StrategyKind::passive:
    case StrategyKind::distinct_orders_general:
      break;
  }
  return out;
}

bool Coalition::tamper_gather(int party, const StepContext& ctx, GatherState& g) {
  const StrategySpec& s = require_member(party);
  if (!acts(s, ctx) || g.orders.empty()) return false;
  const std::size_t k = pick_target(s, g.orders.size());
  OrderList& o = g.orders[k];
  switch (s.kind) {
    case StrategyKind::forge_pair: {
      const std::size_t n = o.signature.size();
      const KeyTriple own(BitVec::random(n, rng_), BitVec::random(n, rng_), BitVec::random(n, rng_));
      const BitVec forged = o.message ^ random_nonzero(o.message.size());
      o = OrderList{forged, sign(own, forged, rng_).signature};
      return true;
    }
    case StrategyKind::forge_message_only:
      o.message ^= random_nonzero(o.message.size());
      return true;
    case StrategyKind::tamper_hop_sigs:
      if (g.hop_sigs.empty()) {
        o.signature ^= random_nonzero(o.signature.size());
      } else {
        BitVec& h = g.hop_sigs[k % g.hop_sigs.size()];
        h ^= random_nonzero(h.size());
      }
      return true;
    case StrategyKind::random_hash_forgery:
    case StrategyKind::passive:
    case StrategyKind::distinct_orders_general:
      return false;
  }
  return false;
}

void Coalition::observe(int party, std::string_view what, std::span<const std::uint8_t> bytes) {
  require_member(party);
  view_.push_back({party, std::string(what), Bytes(bytes.begin(), bytes.end())});
}

}  // namespace cqba
