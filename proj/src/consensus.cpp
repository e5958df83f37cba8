#include "cqba/consensus.hpp"

#include <algorithm>
#include <stdexcept>

#include "cqba/rng.hpp"

namespace cqba {

void CaRecord::append(Entry e) {
  if (index_.count(e.key) != 0) throw std::logic_error("CaRecord: entry already recorded");
  index_.emplace(e.key, entries_.size());
  entries_.push_back(std::move(e));
}

const CaRecord::Entry* CaRecord::find(const LedgerKey& k) const {
  auto it = index_.find(k);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

Bytes CaRecord::to_log() const {
  Bytes out;
  for (const auto& e : entries_) {
    const Bytes b = e.package.serialize();
    const auto len = static_cast<std::uint32_t>(b.size());
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

void RoleConfig::validate(const Coalition& coalition) const {
  if (players < 3 || players > 4095) throw std::invalid_argument("players must be in 3..4095");
  if (malicious < 0) throw std::invalid_argument("malicious must be non-negative");
  if (message_bits < 1) throw std::invalid_argument("message_bits must be at least 1");
  if (signature_bits < 2) throw std::invalid_argument("signature_bits must be at least 2");
  if (retry_budget < 0 || retry_budget > 4000) throw std::invalid_argument("retry_budget must be in 0..4000");
  const auto members = coalition.members();
  for (int p : members) {
    if (p < 0 || p >= players) throw std::invalid_argument("adversary party " + std::to_string(p) + " out of range");
  }
  if (general_honest == coalition.is_dishonest(0)) {
    throw std::invalid_argument("general_honest disagrees with the adversary assignment");
  }
  if (static_cast<int>(members.size()) > malicious) {
    throw std::invalid_argument("more dishonest parties than 'malicious' allows");
  }
}

BitVec majority_decision(std::span<const BitVec> orders) {
  if (orders.empty()) throw std::invalid_argument("majority_decision: no orders");
  std::vector<BitVec> sorted(orders.begin(), orders.end());
  std::sort(sorted.begin(), sorted.end(), [](const BitVec& a, const BitVec& b) { return lex_less(a, b); });
  // Scanning in lexicographic order, a strictly larger run is needed to
  // displace the current best, so ties keep the smallest.
  std::size_t best = 0, best_len = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    if (j - i > best_len) {
      best = i;
      best_len = j - i;
    }
    i = j;
  }
  return sorted[best];
}

Protocol::Protocol(RoleConfig config, Coalition& coalition, std::vector<KeySource>& links, Transport& transport,
                   std::uint64_t seed, DecisionFn decide)
    : cfg_(config), coalition_(coalition), links_(links), net_(transport), decide_(std::move(decide)) {
  cfg_.validate(coalition_);
  if (static_cast<int>(links_.size()) != cfg_.players) {
    throw std::invalid_argument("one key link per player is required");
  }
  for (int p = 0; p < cfg_.players; ++p) rngs_.emplace_back(derive_seed(seed, "party", static_cast<std::uint64_t>(p)));
}

std::mt19937_64& Protocol::party_rng(int party) { return rngs_.at(static_cast<std::size_t>(party)); }

std::uint64_t Protocol::session_id(const StepContext& ctx) {
  return (static_cast<std::uint64_t>(ctx.round) << 40) | (static_cast<std::uint64_t>(ctx.phase) << 36) |
         (static_cast<std::uint64_t>(ctx.initiator) << 24) | (static_cast<std::uint64_t>(ctx.hop) << 12) |
         static_cast<std::uint64_t>(ctx.attempt);
}

std::pair<bool, bool> Protocol::check_gather(const SignedPackage& pkg, int round, int initiator, int hop) const {
  const std::size_t m = cfg_.message_bits, n = cfg_.signature_bits;
  if (pkg.message.size() != gather_length(static_cast<std::size_t>(hop), m, n)) return {false, false};
  const GatherState g = GatherState::parse(pkg.message, initiator, static_cast<std::size_t>(hop), m, n);
  bool ledger_ok = true, orders_ok = true;
  for (std::size_t k = 0; k < g.orders.size(); ++k) {
    const int owner = owner_at(initiator, k, cfg_.lieutenants());
    const CaRecord::Entry* e = ledger_.find({round, 1, owner, 0});
    if (e == nullptr || e->package.signature != g.orders[k].signature) {
      ledger_ok = false;
      continue;
    }
    const SignedPackage embedded{e->package.session_id, g.orders[k].message, g.orders[k].signature,
                                 e->package.encrypted_poly};
    if (check_package(embedded, e->signer_keys) != Verdict::accept) orders_ok = false;
  }
  for (std::size_t k = 0; k < g.hop_sigs.size(); ++k) {
    const CaRecord::Entry* e = ledger_.find({round, 2, initiator, static_cast<int>(k) + 1});
    if (e == nullptr || e->package.signature != g.hop_sigs[k]) ledger_ok = false;
  }
  return {ledger_ok, orders_ok};
}

std::optional<SignedPackage> Protocol::qds_step(
    RoundResult& result, StepContext ctx, int signer, int forwarder,
    const std::function<SignedPackage(const KeyTriple&, std::uint64_t, const StepContext&)>& make_package,
    const std::function<std::pair<bool, bool>(const SignedPackage&)>& ca_checks, LedgerKey key) {
  const int ca = ca_id(cfg_.players);
  const std::size_t n = cfg_.signature_bits;
  const bool bad_signer = coalition_.is_dishonest(signer);
  const bool bad_forwarder = coalition_.is_dishonest(forwarder);

  for (int attempt = 0; attempt <= cfg_.retry_budget; ++attempt) {
    ctx.attempt = attempt;
    if (attempt > 0) ++result.restarts;
    const std::uint64_t sid = session_id(ctx);
    EventTag tag{sid, ctx.round, ctx.phase, ctx.initiator, ctx.hop, "", signer, forwarder, false};
    auto send = [&](int src, int dst, ChannelClass cls, Bytes payload, const char* kind, bool keys) {
      tag.kind = kind;
      tag.key_bearing = keys;
      Bytes got = net_.transmit(src, dst, cls, std::move(payload), tag);
      if (coalition_.is_dishonest(dst)) coalition_.observe(dst, kind, got);
      return got;
    };

    const SessionKeys keys = derive_star_session_keys(links_[static_cast<std::size_t>(signer)],
                                                      links_[static_cast<std::size_t>(forwarder)], n,
                                                      "session " + std::to_string(sid));
    send(ca, signer, ChannelClass::key_delivery, keys.signer.material().to_bytes(), "key_signer", true);
    send(ca, forwarder, ChannelClass::key_delivery, keys.forwarder.material().to_bytes(), "key_forwarder", true);

    const SignedPackage wire = make_package(keys.signer, sid, ctx);
    const Bytes at_forwarder = send(signer, forwarder, ChannelClass::classical_auth, wire.serialize(), "package", false);
    const SignedPackage received = SignedPackage::parse(at_forwarder, n);

    const SignedPackage to_ca = bad_forwarder ? coalition_.forward_to_ca(forwarder, ctx, received) : received;
    Bytes announce = to_ca.serialize();
    const std::size_t pkg_len = announce.size();
    const Bytes fkeys = keys.forwarder.material().to_bytes();
    announce.insert(announce.end(), fkeys.begin(), fkeys.end());
    const Bytes at_ca = send(forwarder, ca, ChannelClass::classical_auth, std::move(announce), "package_to_ca", true);

    const SignedPackage ca_pkg = SignedPackage::parse(std::span(at_ca).first(pkg_len), n);
    const BitVec announced = BitVec::from_bytes(std::span(at_ca).subspan(pkg_len), 3 * n);
    const KeyTriple announced_keys(announced.slice(0, n), announced.slice(n, n), announced.slice(2 * n, n));

    QdsRecord rec;
    rec.round = ctx.round;
    rec.phase = ctx.phase;
    rec.initiator = ctx.initiator;
    rec.hop = ctx.hop;
    rec.signer = signer;
    rec.forwarder = forwarder;
    rec.attempt = attempt;
    rec.session_id = sid;
    rec.msg_bits = wire.message.size();
    rec.ca_verdict = verify_as_ca(ca_pkg, keys.verifier, announced_keys);
    if (rec.ca_verdict == Verdict::accept && ca_checks) std::tie(rec.ledger_ok, rec.orders_ok) = ca_checks(ca_pkg);
    const bool ca_ok = rec.ca_verdict == Verdict::accept && rec.ledger_ok && rec.orders_ok;

    Bytes reply{static_cast<std::uint8_t>(ca_ok)};
    if (ca_ok) {
      const Bytes vkeys = keys.verifier.material().to_bytes();
      reply.insert(reply.end(), vkeys.begin(), vkeys.end());
    }
    send(ca, forwarder, ChannelClass::classical_auth, std::move(reply), "ca_verdict", ca_ok);

    if (ca_ok) {
      Verdict v = verify_as_forwarder(received, keys.forwarder, keys.verifier);
      // A dishonest forwarder goes along with whatever the CA accepted.
      if (bad_forwarder) v = Verdict::accept;
      rec.forwarder_verdict = v;
    }
    rec.accepted = ca_ok && rec.forwarder_verdict == Verdict::accept;
    send(forwarder, ca, ChannelClass::classical_auth, Bytes{static_cast<std::uint8_t>(rec.accepted)},
         "forwarder_verdict", false);
    result.qds.push_back(rec);

    if (rec.accepted) {
      ++result.qds_accepted;
      if (!bad_signer && ca_pkg != wire) {
        result.forgery_events.push_back("CA accepted a package not sent by honest party " + std::to_string(signer) +
                                        " (session " + std::to_string(sid) + ")");
      }
      ledger_.append({key, signer, ca_pkg, keys.verifier ^ announced_keys});
      return ca_pkg;
    }
  }
  return std::nullopt;
}

RoundResult Protocol::run_round(int round, const BitVec& m0) {
  if (m0.size() != cfg_.message_bits) throw std::invalid_argument("order length differs from message_bits");
  const int lieutenants = cfg_.lieutenants();
  const std::size_t m = cfg_.message_bits, n = cfg_.signature_bits;
  RoundResult result;
  result.round = round;
  result.sent_orders.assign(static_cast<std::size_t>(lieutenants) + 1, BitVec{});
  std::vector<OrderList> held(static_cast<std::size_t>(lieutenants) + 1);

  auto abort = [&](std::string why) {
    result.aborted = true;
    result.abort_reason = std::move(why);
    result.outputs.clear();
    return result;
  };

  try {
    for (int i = 1; i <= lieutenants; ++i) {
      const BitVec order = cfg_.general_honest ? m0 : coalition_.general_order(i, m0);
      result.sent_orders[static_cast<std::size_t>(i)] = order;
      const StepContext ctx{round, 1, i, 0, 0};
      auto pkg = qds_step(
          result, ctx, 0, i,
          [&](const KeyTriple& k, std::uint64_t sid, const StepContext&) {
            return sign(k, order, party_rng(0), sid);
          },
          nullptr, {round, 1, i, 0});
      if (!pkg) return abort("retry budget exhausted distributing the order to lieutenant " + std::to_string(i));
      held[static_cast<std::size_t>(i)] = OrderList{pkg->message, pkg->signature};
    }

    result.final_states.assign(static_cast<std::size_t>(lieutenants) + 1, GatherState{});
    for (int i = 1; i <= lieutenants; ++i) {
      GatherState g;
      g.initiator = i;
      int holder = i;
      bool substituted = false;
      for (int hop = 1; hop <= lieutenants; ++hop) {
        const int fwd = next_lieutenant(holder, lieutenants);
        const StepContext ctx{round, 2, i, hop, 0};
        auto pkg = qds_step(
            result, ctx, holder, fwd,
            [&](const KeyTriple& k, std::uint64_t sid, const StepContext& c) {
              GatherState out = g;
              out.orders.push_back(held[static_cast<std::size_t>(holder)]);
              out.current_hop = hop;
              if (coalition_.is_dishonest(holder)) coalition_.tamper_gather(holder, c, out);
              return sign(k, out.signing_input(), party_rng(holder), sid);
            },
            [&](const SignedPackage& p) { return check_gather(p, round, i, hop); }, {round, 2, i, hop});
        if (!pkg) {
          return abort("retry budget exhausted in the gathering of lieutenant " + std::to_string(i) + " at hop " +
                       std::to_string(hop));
        }
        g = GatherState::parse(pkg->message, i, static_cast<std::size_t>(hop), m, n);
        g.hop_sigs.push_back(pkg->signature);
        g.current_hop = hop;
        for (std::size_t k = 0; k < g.orders.size(); ++k) {
          const auto* e = ledger_.find({round, 1, owner_at(i, k, lieutenants), 0});
          if (!substituted && e != nullptr && e->package.message != g.orders[k].message) {
            substituted = true;
            result.forgery_events.push_back("gathering of lieutenant " + std::to_string(i) + " carries a substituted order at hop " +
                                            std::to_string(hop));
          }
        }
        holder = fwd;
      }
      result.final_states[static_cast<std::size_t>(i)] = g;
    }
  } catch (const KeyExhausted& e) {
    return abort(std::string("key exhaustion: ") + e.what());
  }

  result.outputs.assign(static_cast<std::size_t>(lieutenants) + 1, std::nullopt);
  for (int i = 1; i <= lieutenants; ++i) {
    std::vector<BitVec> f;
    for (const auto& o : result.final_states[static_cast<std::size_t>(i)].orders) f.push_back(o.message);
    result.outputs[static_cast<std::size_t>(i)] = decide_(f);
  }
  return result;
}

}  // namespace cqba
