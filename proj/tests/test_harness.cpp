#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "cqba/harness.hpp"
#include "doctest.h"

using namespace cqba;
using nlohmann::json;

namespace {

Scenario honest(int N, std::uint64_t seed = 3) {
  return Scenario::from_json(json{{"players", N}, {"message_bits", 8}, {"signature_bits", 32}, {"seed", seed}});
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream o;
  o << in.rdbuf();
  return o.str();
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("scenario parsing") {
    const Scenario s = Scenario::from_json(json::parse(R"({
      "players": 5, "malicious": 2, "general_honest": true, "message_bits": 4, "signature_bits": 24,
      "adversary": [{"kind": "forge_pair", "party": 2, "persistence": 3},
                    {"kind": "passive", "party": 4}],
      "seed": 9, "rounds": 2, "order_hex": "a0",
      "channel": {"altitude_km": 500, "zenith_rad": 0.3}, "decoy": {"qx": 0.8}
    })"));
    CHECK(s.role.players == 5);
    CHECK(s.adversary.size() == 2);
    CHECK(s.adversary[0].persistence == 3);
    CHECK(s.channel->geometry.altitude == 500e3);
    CHECK(s.decoy->qx == 0.8);

    CHECK_THROWS_AS(Scenario::from_json(json{{"players", 4}, {"bogus", 1}}), ScenarioError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"players", 4}, {"channel", {{"altitude", 3}}}}), ScenarioError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"players", 4}, {"ca_honest", false}}), ScenarioError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"players", 4}, {"malicious", 3}}), ScenarioError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"players", 4}, {"malicious", 1},
                                             {"adversary", json::array({{{"kind", "nope"}, {"party", 1}}})}}),
                    ScenarioError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"players", 4}, {"malicious", 0},
                                             {"adversary", json::array({{{"kind", "passive"}, {"party", 1}}})}}),
                    ScenarioError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"players", "four"}}), ScenarioError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"players", 4}, {"message_bits", 12}, {"order_hex", "ab"}}), ScenarioError);
    CHECK_THROWS_AS(Scenario::from_json(json{{"players", 4}, {"decoy", {{"mu", {0.1, 0.2, 0.3}}}}}), ScenarioError);

    const auto dir = std::filesystem::temp_directory_path() / "cqba_harness_parse";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "bad.json") << "{ players: 4 ";
    CHECK_THROWS_AS(Scenario::load(dir / "bad.json"), ScenarioError);
    CHECK_THROWS_AS(Scenario::load(dir / "missing.json"), ScenarioError);
  }

  TEST_CASE("honest run touches exactly N star links") {
    for (int N : {3, 5, 8}) {
      const Transcript t = run(honest(N));
      CHECK(t.ok());
      CHECK(t.quantum_links_used.size() == static_cast<std::size_t>(N));
      CHECK(t.qds_count() == static_cast<std::size_t>(N * N - N));
      CHECK(t.restart_count() == 0);
      // Six deliveries per QDS attempt.
      CHECK(t.events.size() == 6 * t.qds_count());
      for (const auto& e : t.events) CHECK_FALSE(e.adversary_visible);
    }
  }

  TEST_CASE("events are ordered and tick once per attempt") {
    const Transcript t = run(honest(4));
    for (std::size_t i = 0; i < t.events.size(); ++i) {
      CHECK(t.events[i].seq == i);
      if (i > 0) CHECK(t.events[i].tick >= t.events[i - 1].tick);
    }
    CHECK(t.events.back().tick == 12);
    for (const auto& e : t.events) {
      if (e.cls == ChannelClass::key_delivery) CHECK(e.src == ca_id(4));
    }
  }

  TEST_CASE("determinism") {
    Scenario s = Scenario::from_json(json{{"players", 6},
                                          {"malicious", 2},
                                          {"message_bits", 6},
                                          {"signature_bits", 16},
                                          {"seed", 77},
                                          {"rounds", 3},
                                          {"adversary", json::array({{{"kind", "random_hash_forgery"}, {"party", 2}},
                                                                     {{"kind", "tamper_hop_sigs"}, {"party", 4}}})}});
    const Transcript a = run(s), b = run(s);
    CHECK(a.events_csv() == b.events_csv());
    CHECK(a.qds_csv() == b.qds_csv());
    CHECK(a.keys_csv() == b.keys_csv());
    CHECK(a.summary().dump() == b.summary().dump());
    CHECK(a.ledger_log == b.ledger_log);
    s.seed = 78;
    CHECK(run(s).events_csv() != a.events_csv());

    const auto d1 = std::filesystem::temp_directory_path() / "cqba_det_1";
    const auto d2 = std::filesystem::temp_directory_path() / "cqba_det_2";
    write_transcript(a, d1);
    write_transcript(b, d2);
    for (const char* f : {"events.csv", "transcript.csv", "keys.csv", "summary.json", "ledger.bin"}) {
      CHECK(slurp(d1 / f) == slurp(d2 / f));
      CHECK(!slurp(d1 / f).empty());
    }
  }

  TEST_CASE("interposition only on adversary-owned links") {
    std::mt19937_64 rng(5);
    const char* kinds[] = {"forge_pair", "forge_message_only", "tamper_hop_sigs", "random_hash_forgery"};
    for (int trial = 0; trial < 40; ++trial) {
      const int N = 4 + static_cast<int>(rng() % 4);
      const int bad = 1 + static_cast<int>(rng() % static_cast<unsigned>(N - 1));
      Scenario s = Scenario::from_json(
          json{{"players", N},
               {"malicious", 1},
               {"message_bits", 4},
               {"signature_bits", 24},
               {"seed", trial},
               {"adversary", json::array({{{"kind", kinds[trial % 4]}, {"party", bad}, {"persistence", 2}}})}});
      const Transcript t = run(s);
      for (const auto& r : t.rounds) {
        for (const auto& q : r.qds) {
          if (!q.accepted) CHECK((q.signer == bad || q.forwarder == bad));
        }
      }
      for (const auto& e : t.events) CHECK(e.adversary_visible == (e.src == bad || e.dst == bad));
      CHECK(t.checks[0].ic1);
      CHECK(t.checks[0].ic2);
    }
  }

  TEST_CASE("key exhaustion aborts the round") {
    Scenario s = honest(5);
    s.key_budget_bits = 3 * 32 * 5;
    const Transcript t = run(s);
    REQUIRE(t.rounds.size() == 1);
    CHECK(t.rounds[0].aborted);
    CHECK(t.rounds[0].abort_reason.find("key exhaustion") != std::string::npos);
    CHECK_FALSE(t.ok());
  }

  TEST_CASE("summary contents") {
    Scenario s = Scenario::from_json(json{{"players", 4},
                                          {"message_bits", 8},
                                          {"order_hex", "c3"},
                                          {"channel", {{"altitude_km", 300}}}});
    const Transcript t = run(s);
    const json j = t.summary();
    CHECK(j["rounds"][0]["order"] == "c3");
    CHECK(j["rounds"][0]["outputs"]["1"] == "c3");
    CHECK(j["qds_count"] == 12);
    CHECK(j["quantum_link_count"] == 4);
    CHECK(j["ok"] == true);
    CHECK(j["link"]["key_rate_bps"].get<double>() > 0);
    CHECK(j["link"]["consensus_rate"].get<double>() ==
          doctest::Approx(j["link"]["key_rate_bps"].get<double>() / (3 * 32) / 12));
  }

  TEST_CASE("dishonest general with distinct orders") {
    Scenario s = Scenario::from_json(json{{"players", 6},
                                          {"malicious", 2},
                                          {"general_honest", false},
                                          {"seed", 4},
                                          {"adversary", json::array({{{"kind", "distinct_orders_general"}, {"party", 0}},
                                                                     {{"kind", "forge_pair"}, {"party", 3}}})}});
    const Transcript t = run(s);
    CHECK(t.checks[0].ic1);
    CHECK(t.ok());
  }
}
