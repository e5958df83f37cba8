#include "cqba/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "cqba/rng.hpp"
#include "cqba/security_bounds.hpp"

namespace cqba {

using nlohmann::json;

namespace {

constexpr std::size_t kMinTaintBytes = 8;

void only_fields(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ScenarioError(std::string(where) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; })) {
      throw ScenarioError(std::string("unknown field '") + it.key() + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("field '") + key + "': " + e.what());
  }
}

const char* channel_name(ChannelClass c) { return c == ChannelClass::key_delivery ? "key_delivery" : "classical_auth"; }

Bytes parse_hex(const std::string& s) {
  if (s.size() % 2 != 0) throw ScenarioError("order_hex needs an even number of digits");
  Bytes out;
  for (std::size_t i = 0; i < s.size(); i += 2) {
    auto nib = [&](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      throw ScenarioError("order_hex has a non-hex digit");
    };
    out.push_back(static_cast<std::uint8_t>(nib(s[i]) << 4 | nib(s[i + 1])));
  }
  return out;
}

ChannelScenario parse_channel(const json& j) {
  only_fields(j, "channel",
              {"altitude_km", "zenith_rad", "wavelength_nm", "initial_waist_m", "aperture_m", "pointing_error_rad",
               "wander_std_m", "turbulence_scale"});
  ChannelScenario c;
  double alt_km = c.geometry.altitude / 1e3, wl_nm = c.optics.wavelength * 1e9;
  read(j, "altitude_km", alt_km);
  read(j, "zenith_rad", c.geometry.zenith);
  read(j, "wavelength_nm", wl_nm);
  read(j, "initial_waist_m", c.optics.initial_waist);
  read(j, "aperture_m", c.optics.aperture);
  read(j, "pointing_error_rad", c.optics.pointing_error);
  read(j, "wander_std_m", c.optics.wander_std);
  read(j, "turbulence_scale", c.optics.turbulence_scale);
  c.geometry.altitude = alt_km * 1e3;
  c.optics.wavelength = wl_nm * 1e-9;
  if (j.contains("wavelength_nm")) {
    try {
      c.optics.sea_level_extinction = OpticsParams::extinction_for_wavelength(c.optics.wavelength);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(e.what());
    }
  }
  return c;
}

DecoyParams parse_decoy(const json& j) {
  only_fields(j, "decoy",
              {"mu", "p", "qx", "n_pulses", "eps_sec", "eps_cor", "eps_pa", "f_ec", "detector_efficiency", "dark_count",
               "misalignment", "rep_rate"});
  DecoyParams d;
  read(j, "mu", d.mu);
  read(j, "p", d.p);
  read(j, "qx", d.qx);
  read(j, "n_pulses", d.n_pulses);
  read(j, "eps_sec", d.eps_sec);
  read(j, "eps_cor", d.eps_cor);
  read(j, "eps_pa", d.eps_pa);
  read(j, "f_ec", d.f_ec);
  read(j, "detector_efficiency", d.detector_efficiency);
  read(j, "dark_count", d.dark_count);
  read(j, "misalignment", d.misalignment);
  read(j, "rep_rate", d.rep_rate);
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  return d;
}

BitVec round_order(const Scenario& s, int round) {
  const std::size_t m = s.role.message_bits;
  if (s.order_hex) return BitVec::from_bytes(parse_hex(*s.order_hex), m);
  std::mt19937_64 rng(derive_seed(s.seed, "order", static_cast<std::uint64_t>(round)));
  return BitVec::random(m, rng);
}

std::string yes_no(bool b) { return b ? "1" : "0"; }

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

Scenario Scenario::from_json(const json& j) {
  only_fields(j, "scenario",
              {"players", "malicious", "general_honest", "message_bits", "signature_bits", "adversary", "seed", "rounds",
               "key_budget_bits", "retry_budget", "order_hex", "ca_honest", "channel", "decoy"});
  Scenario s;
  read(j, "players", s.role.players);
  read(j, "malicious", s.role.malicious);
  read(j, "general_honest", s.role.general_honest);
  read(j, "message_bits", s.role.message_bits);
  read(j, "signature_bits", s.role.signature_bits);
  read(j, "retry_budget", s.role.retry_budget);
  read(j, "seed", s.seed);
  read(j, "rounds", s.rounds);
  read(j, "key_budget_bits", s.key_budget_bits);
  if (j.contains("order_hex")) {
    std::string h;
    read(j, "order_hex", h);
    s.order_hex = h;
  }
  bool ca_honest = true;
  read(j, "ca_honest", ca_honest);
  if (!ca_honest) throw ScenarioError("a dishonest CA is outside the model");
  if (j.contains("adversary")) {
    const json& a = j.at("adversary");
    if (!a.is_array()) throw ScenarioError("adversary must be an array");
    for (const json& e : a) {
      only_fields(e, "adversary entry", {"kind", "party", "target", "persistence"});
      if (!e.contains("kind") || !e.contains("party")) throw ScenarioError("adversary entries need kind and party");
      StrategySpec spec;
      std::string kind;
      read(e, "kind", kind);
      try {
        spec.kind = parse_strategy(kind);
      } catch (const std::invalid_argument& ex) {
        throw ScenarioError(ex.what());
      }
      read(e, "party", spec.party);
      read(e, "target", spec.target);
      read(e, "persistence", spec.persistence);
      s.adversary.push_back(spec);
    }
  }
  if (j.contains("channel")) s.channel = parse_channel(j.at("channel"));
  if (j.contains("decoy")) s.decoy = parse_decoy(j.at("decoy"));
  s.validate();
  return s;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("malformed scenario JSON: ") + e.what());
  }
  return from_json(j);
}

void Scenario::validate() const {
  if (rounds < 1) throw ScenarioError("rounds must be at least 1");
  if (role.players >= 3 && !fault_tolerance_ok(role.players, role.malicious)) {
    throw ScenarioError("malicious must not exceed players - 2");
  }
  if (order_hex) {
    const Bytes b = parse_hex(*order_hex);
    if (b.size() * 8 < role.message_bits) throw ScenarioError("order_hex is shorter than message_bits");
  }
  if (channel) {
    try {
      channel->geometry.validate();
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(e.what());
    }
  }
  try {
    Coalition c(adversary, seed, !role.general_honest);
    role.validate(c);
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
}

EventLoop::EventLoop(int players, const Coalition& coalition) : players_(players), coalition_(coalition) {}

Bytes EventLoop::transmit(int src, int dst, ChannelClass cls, Bytes payload, const EventTag& tag) {
  if (tag.session_id != last_session_) {
    ++tick_;
    last_session_ = tag.session_id;
  }
  Event e;
  e.tick = tick_;
  e.seq = events_.size();
  e.src = src;
  e.dst = dst;
  e.cls = cls;
  e.tag = tag;
  e.bytes = payload.size();
  e.sha256 = sha256_hex(payload);
  e.adversary_visible = coalition_.is_dishonest(src) || coalition_.is_dishonest(dst);
  if (cls == ChannelClass::key_delivery) {
    // Key delivery runs over the star: CA to one player.
    if (src != ca_id(players_) || dst < 0 || dst >= players_) throw std::logic_error("key delivery off the star");
    links_used_.insert(dst);
    if (!coalition_.is_dishonest(dst)) honest_keys_.push_back(payload);
  }
  check_taint(e, payload);
  events_.push_back(std::move(e));
  // Authenticated channels: delivered exactly as sent.
  return payload;
}

void EventLoop::check_taint(const Event& e, const Bytes& payload) {
  if (!e.adversary_visible) return;
  for (const Bytes& k : honest_keys_) {
    // Shorter keys match random payload bytes by chance.
    if (k.size() < kMinTaintBytes || k.size() > payload.size()) continue;
    if (std::search(payload.begin(), payload.end(), k.begin(), k.end()) != payload.end()) {
      throw std::logic_error("honest key material visible to the adversary (event " + std::to_string(e.seq) + ")");
    }
  }
}

RoundCheck check_round(const RoundResult& r, const Coalition& coalition, const BitVec& m0, bool general_honest) {
  RoundCheck c;
  if (r.aborted) return c;
  std::optional<BitVec> first;
  for (std::size_t i = 1; i < r.outputs.size(); ++i) {
    if (coalition.is_dishonest(static_cast<int>(i)) || !r.outputs[i]) continue;
    const BitVec& out = *r.outputs[i];
    if (!first) first = out;
    if (out != *first) c.ic1 = false;
    if (general_honest && out != m0) c.ic2 = false;
  }
  return c;
}

bool Transcript::ok() const {
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    if (rounds[i].aborted || !checks[i].ic1 || !checks[i].ic2) return false;
  }
  return true;
}

std::size_t Transcript::qds_count() const {
  std::size_t n = 0;
  for (const auto& r : rounds) n += r.qds_accepted;
  return n;
}

std::size_t Transcript::restart_count() const {
  std::size_t n = 0;
  for (const auto& r : rounds) n += r.restarts;
  return n;
}

std::string Transcript::events_csv() const {
  std::ostringstream o;
  o << "tick,seq,src,dst,channel,kind,round,phase,initiator,hop,session_id,signer,forwarder,key_bearing,"
       "adversary_visible,bytes,sha256\n";
  for (const auto& e : events) {
    o << e.tick << ',' << e.seq << ',' << e.src << ',' << e.dst << ',' << channel_name(e.cls) << ',' << e.tag.kind << ','
      << e.tag.round << ',' << e.tag.phase << ',' << e.tag.initiator << ',' << e.tag.hop << ',' << e.tag.session_id
      << ',' << e.tag.signer << ',' << e.tag.forwarder << ',' << yes_no(e.tag.key_bearing) << ','
      << yes_no(e.adversary_visible) << ',' << e.bytes << ',' << e.sha256 << '\n';
  }
  return o.str();
}

std::string Transcript::qds_csv() const {
  std::ostringstream o;
  o << "round,phase,initiator,hop,signer,forwarder,attempt,session_id,msg_bits,ca_verdict,ledger_ok,orders_ok,"
       "forwarder_verdict,accepted\n";
  for (const auto& r : rounds) {
    for (const auto& q : r.qds) {
      o << q.round << ',' << q.phase << ',' << q.initiator << ',' << q.hop << ',' << q.signer << ',' << q.forwarder
        << ',' << q.attempt << ',' << q.session_id << ',' << q.msg_bits << ',' << verdict_name(q.ca_verdict) << ','
        << yes_no(q.ledger_ok) << ',' << yes_no(q.orders_ok) << ','
        << (q.forwarder_verdict ? std::string(verdict_name(*q.forwarder_verdict)) : std::string("none")) << ','
        << yes_no(q.accepted) << '\n';
    }
  }
  return o.str();
}

std::string Transcript::keys_csv() const {
  std::ostringstream o;
  o << "link,offset,bits,label\n";
  for (std::size_t l = 0; l < allocations.size(); ++l) {
    for (const auto& a : allocations[l]) o << l << ',' << a.offset << ',' << a.bits << ',' << a.label << '\n';
  }
  return o.str();
}

json Transcript::summary() const {
  json j;
  j["players"] = scenario.role.players;
  j["malicious"] = scenario.role.malicious;
  j["general_honest"] = scenario.role.general_honest;
  j["message_bits"] = scenario.role.message_bits;
  j["signature_bits"] = scenario.role.signature_bits;
  j["seed"] = scenario.seed;
  json adv = json::array();
  for (const auto& s : scenario.adversary) {
    adv.push_back({{"kind", strategy_name(s.kind)}, {"party", s.party}, {"target", s.target},
                   {"persistence", s.persistence}});
  }
  j["adversary"] = adv;
  json rs = json::array();
  std::size_t forgeries = 0;
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    const RoundResult& r = rounds[i];
    json outs = json::object();
    for (std::size_t l = 1; l < r.outputs.size(); ++l) {
      outs[std::to_string(l)] = r.outputs[l] ? json(r.outputs[l]->to_hex()) : json(nullptr);
    }
    forgeries += r.forgery_events.size();
    rs.push_back({{"round", r.round},
                  {"order", orders[i].to_hex()},
                  {"aborted", r.aborted},
                  {"abort_reason", r.abort_reason},
                  {"outputs", outs},
                  {"ic1", checks[i].ic1},
                  {"ic2", checks[i].ic2},
                  {"qds", r.qds_accepted},
                  {"qds_attempts", r.qds.size()},
                  {"restarts", r.restarts},
                  {"forgery_events", r.forgery_events}});
  }
  j["rounds"] = rs;
  j["qds_count"] = qds_count();
  j["restart_count"] = restart_count();
  j["forgery_event_count"] = forgeries;
  j["quantum_links_used"] = quantum_links_used;
  j["quantum_link_count"] = quantum_links_used.size();
  j["event_count"] = events.size();
  const std::string ev = events_csv();
  j["events_sha256"] = sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(ev.data()), ev.size()));
  j["ok"] = ok();
  if (link_rate) {
    const double kr = link_rate->key_rate;
    j["link"] = {{"eta_mean", link_rate->link.eta_mean},
                 {"l_key", link_rate->key.bits},
                 {"key_rate_bps", kr},
                 {"signature_rate", signature_rate(kr, signature_bits_for_rate)},
                 {"consensus_rate", consensus_rate(std::span(&kr, 1), scenario.role.players, signature_bits_for_rate)}};
  }
  return j;
}

Transcript run(const Scenario& s) {
  s.validate();
  Transcript t;
  t.scenario = s;
  Coalition coalition(s.adversary, derive_seed(s.seed, "coalition", 0), !s.role.general_honest);
  std::vector<KeySource> links;
  for (int p = 0; p < s.role.players; ++p) {
    links.emplace_back("link" + std::to_string(p), derive_seed(s.seed, "link", static_cast<std::uint64_t>(p)),
                       s.key_budget_bits);
  }
  EventLoop loop(s.role.players, coalition);
  Protocol proto(s.role, coalition, links, loop, derive_seed(s.seed, "protocol", 0));
  for (int r = 0; r < s.rounds; ++r) {
    const BitVec m0 = round_order(s, r);
    t.orders.push_back(m0);
    t.rounds.push_back(proto.run_round(r, m0));
    t.checks.push_back(check_round(t.rounds.back(), coalition, m0, s.role.general_honest));
    if (t.rounds.back().aborted) break;
  }
  t.events = loop.events();
  t.quantum_links_used = loop.quantum_links_used();
  for (const auto& l : links) t.allocations.push_back(l.allocations());
  t.ledger_log = proto.ledger().to_log();
  if (s.channel || s.decoy) {
    const ChannelScenario ch = s.channel.value_or(ChannelScenario{});
    t.link_rate = evaluate_bb84(ch.geometry, ch.optics, s.decoy.value_or(DecoyParams{}));
    t.signature_bits_for_rate = s.role.signature_bits;
  }
  return t;
}

void write_transcript(const Transcript& t, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& body) {
    std::ofstream o(dir / name, std::ios::binary);
    o << body;
    if (!o) throw std::runtime_error(std::string("cannot write ") + (dir / name).string());
  };
  put("events.csv", t.events_csv());
  put("transcript.csv", t.qds_csv());
  put("keys.csv", t.keys_csv());
  put("summary.json", t.summary().dump(2) + "\n");
  put("ledger.bin", std::string(t.ledger_log.begin(), t.ledger_log.end()));
}

}  // namespace cqba
