#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cqba::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct Csv {
  std::vector<std::string> meta;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;

  double num(std::size_t r, const std::string& c) const { return std::stod(rows.at(r).at(c)); }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  return cells;
}

Csv parse(const std::string& text) {
  Csv csv;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) {
    if (line.starts_with("#")) {
      csv.meta.push_back(line);
    } else if (csv.header.empty()) {
      csv.header = split(line);
    } else {
      const auto cells = split(line);
      REQUIRE(cells.size() == csv.header.size());
      std::map<std::string, std::string> row;
      for (std::size_t i = 0; i < cells.size(); ++i) row[csv.header[i]] = cells[i];
      csv.rows.push_back(row);
    }
  }
  return csv;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cqba_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_file(const std::string& name, const std::string& body) {
  const fs::path p = scratch(name);
  std::ofstream(p) << body;
  return p;
}

const char* kHonest = R"({"players": 4, "malicious": 2, "general_honest": true,
  "message_bits": 64, "signature_bits": 64, "adversary": [], "seed": 7})";

const char* kTinyForgery = R"({"players": 4, "malicious": 1, "general_honest": true,
  "message_bits": 64, "signature_bits": 2, "rounds": 4, "seed": 3,
  "adversary": [{"kind": "random_hash_forgery", "party": 2, "persistence": 8}]})";

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("golden headers") {
    const std::map<std::string, std::vector<std::string>> golden{
        {"bounds", {"protocol,N,f,m,n,eps_case1,eps_case2,eps_qba,complexity,complexity_sci,log2_eps_qba"}},
        {"channel", {"altitude,zenith,eta_ext,W_ST,eta_mean,xi"}},
        {"keyrate", {"altitude,zenith,eta_mean,l_key,KR_bps,SR,CR"}},
        {"consensus-rate", {"curve,altitude,zenith,eta_mean,KR_bps,SR,CR"}},
        {"cvmodel", {"record,mode,quadrature,x,outcome,value"}},
        {"forge-bench", {"n,msg_bits,trials,successes,frequency,bound,sigma,threshold,within_bound"}},
    };
    for (const auto& [cmd, header] : golden) {
      CAPTURE(cmd);
      std::vector<std::string> args{cmd};
      if (cmd == "forge-bench") args.insert(args.end(), {"--trials", "100"});
      const Result r = cli(args);
      REQUIRE(r.code == 0);
      const Csv c = parse(r.out);
      CHECK(join(c.header) == header[0]);
      REQUIRE(!c.meta.empty());
      CHECK(c.meta[0] == "# cqba " + cmd);
      CHECK(!c.rows.empty());
    }
    const fs::path s = write_file("honest.json", kHonest);
    const Result r = cli({"simulate", s.string(), "--out", scratch("honest_out").string()});
    REQUIRE(r.code == 0);
    CHECK(join(parse(r.out).header) == "round,aborted,ic1,ic2,qds,qds_attempts,restarts,forgery_events");
  }

  TEST_CASE("assumptions are echoed") {
    const std::string out = cli({"keyrate"}).out;
    for (const char* key : {"# wander_std_m=1 (assumed input)", "# rep_rate_hz=1000000000 (assumed)", "# dark_count=1e-08",
                            "# misalignment=0.02", "# detector_efficiency=0.7", "# f_ec=1.1", "# block_size=1e+10"}) {
      CAPTURE(key);
      CHECK(out.find(std::string(key) + "\n") != std::string::npos);
    }
  }

  TEST_CASE("determinism under fixed flags") {
    const fs::path s = write_file("tiny.json", kTinyForgery);
    const std::vector<std::vector<std::string>> cmds{
        {"bounds", "--f", "0:12"},
        {"channel", "--sweep", "zenith:0:1.3:0.1"},
        {"keyrate", "--sweep", "altitude:200:1000:100"},
        {"consensus-rate"},
        {"cvmodel", "--eta", "0.4"},
        {"--seed", "5", "forge-bench", "--n", "4", "--trials", "2000"},
        {"--format", "json", "bounds", "--f", "3"},
        {"simulate", s.string(), "--out", scratch("det").string()},
    };
    for (const auto& args : cmds) {
      CAPTURE(join(args));
      const Result a = cli(args), b = cli(args);
      CHECK(a.code == b.code);
      CHECK(a.out == b.out);
      CHECK(a.err == b.err);
    }
  }

  TEST_CASE("--out writes the same bytes as stdout") {
    const fs::path f = scratch("channel.csv");
    const Result to_file = cli({"--out", f.string(), "channel"});
    REQUIRE(to_file.code == 0);
    CHECK(to_file.out.empty());
    CHECK(slurp(f) == cli({"channel"}).out);
  }

  TEST_CASE("json format") {
    const Result r = cli({"--format", "json", "channel", "--sweep", "altitude:300:500:100"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["command"] == "channel");
    CHECK(j["rows"].size() == 3);
    CHECK(j["columns"][4] == "eta_mean");
    CHECK(j["meta"]["wavelength_nm"] == "1550");
  }

  TEST_CASE("exit codes") {
    CHECK(cli({}).code == 2);
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"bounds", "--help"}).code == 0);
    CHECK(cli({"nonsense"}).code == 2);
    CHECK(cli({"bounds", "--bogus"}).code == 2);
    CHECK(cli({"--format", "xml", "bounds"}).code == 2);
    CHECK(cli({"bounds", "--f", "3:1"}).code == 2);
    CHECK(cli({"bounds", "--f", "x"}).code == 2);
    CHECK(cli({"channel", "--sweep", "height:1:2:1"}).code == 2);
    CHECK(cli({"channel", "--sweep", "altitude:1:2:0"}).code == 2);
    CHECK(cli({"channel", "--wavelength-nm", "1000"}).code == 2);
    CHECK(cli({"channel", "--zenith-rad", "2"}).code == 2);
    CHECK(cli({"keyrate", "--protocol", "cv"}).code == 2);
    CHECK(cli({"keyrate", "--players", "2"}).code == 2);
    CHECK(cli({"keyrate", "--qx", "1.5"}).code == 2);
    CHECK(cli({"forge-bench", "--n", "1"}).code == 2);

    const Result cv = cli({"cvmodel", "--key-rate"});
    CHECK(cv.code == 2);
    CHECK(cv.err.find("not implemented") != std::string::npos);
  }

  TEST_CASE("simulate exit codes") {
    const fs::path dir = scratch("sim");
    CHECK(cli({"simulate", write_file("honest.json", kHonest).string(), "--out", dir.string()}).code == 0);
    for (const char* f : {"events.csv", "transcript.csv", "keys.csv", "summary.json", "ledger.bin"}) {
      CHECK(fs::exists(dir / f));
    }

    const Result bad = cli({"simulate", write_file("bad.json", "{\"players\": 4,").string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("error:") == 0);
    CHECK(cli({"simulate", scratch("missing.json").string()}).code == 2);
    CHECK(cli({"simulate", write_file("extra.json", R"({"players": 4, "colour": 1})").string()}).code == 2);
    CHECK(cli({"simulate", write_file("f.json", R"({"players": 4, "malicious": 3})").string()}).code == 2);
    CHECK(cli({"simulate"}).code == 2);

    const Result forged = cli({"simulate", write_file("tiny.json", kTinyForgery).string(), "--out", dir.string()});
    CHECK(forged.code == 1);
    CHECK(forged.err.find("forgery:") != std::string::npos);
  }

  TEST_CASE("simulate seed override and json summary") {
    const fs::path s = write_file("honest.json", kHonest);
    const auto base = nlohmann::json::parse(cli({"--format", "json", "simulate", s.string(), "--out", scratch("a").string()}).out);
    CHECK(base["seed"] == 7);
    CHECK(base["qds_count"] == 12);
    CHECK(base["ok"] == true);
    const auto other =
        nlohmann::json::parse(cli({"--seed", "99", "--format", "json", "simulate", s.string(), "--out", scratch("b").string()}).out);
    CHECK(other["seed"] == 99);
    CHECK(other["events_sha256"] != base["events_sha256"]);
    CHECK(slurp(scratch("a") / "summary.json") != slurp(scratch("b") / "summary.json"));
  }

  TEST_CASE("bounds table") {
    const Csv c = parse(cli({"bounds", "--f", "10"}).out);
    REQUIRE(c.rows.size() == 3);
    CHECK(c.rows[0].at("protocol") == "circular");
    CHECK(c.rows[0].at("N") == "12");
    CHECK(c.rows[0].at("complexity") == "132");
    CHECK(c.rows[1].at("protocol") == "qkd_based");
    CHECK(c.rows[1].at("N") == "31");
    CHECK(c.rows[1].at("complexity_sci") == "2.30e+15");
    CHECK(c.rows[2].at("protocol") == "recursive");
    CHECK(c.rows[2].at("N") == "21");
    CHECK(c.rows[2].at("complexity_sci") == "7.44e+12");
    CHECK(c.rows[1].at("eps_qba") == "NA");

    const Csv zero = parse(cli({"bounds", "--f", "0"}).out);
    REQUIRE(zero.rows.size() == 1);
    CHECK(zero.rows[0].at("protocol") == "circular");
    CHECK(zero.rows[0].at("complexity") == "6");

    const Csv one = parse(cli({"bounds", "--f", "1"}).out);
    CHECK(one.rows.back().at("protocol") == "detectable");
    CHECK(one.rows.back().at("complexity") == "NA");

    // Explicit N: rows only where the protocol tolerates f.
    const Csv grid = parse(cli({"bounds", "--f", "2", "--N", "4:6"}).out);
    std::map<std::string, int> per;
    for (const auto& r : grid.rows) {
      ++per[r.at("protocol")];
      const int N = std::stoi(r.at("N"));
      if (r.at("protocol") == "circular") CHECK(r.at("complexity") == std::to_string(N * N - N));
    }
    CHECK(per["circular"] == 3);
    CHECK(per["recursive"] == 2);
    CHECK(per["qkd_based"] == 0);
  }

  TEST_CASE("consensus-rate identity and trends") {
    const Csv c = parse(cli({"consensus-rate"}).out);
    int n = 0;
    for (const auto& m : c.meta) {
      if (m.starts_with("# signature_bits=")) n = std::stoi(m.substr(17));
    }
    REQUIRE(n == 67);
    double prev_zenith_cr = 1e300;
    std::size_t alt = 0, zen = 0;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
      const double kr = c.num(i, "KR_bps"), cr = c.num(i, "CR");
      CHECK(cr == doctest::Approx(kr / (3.0 * n) / 42).epsilon(1e-8));
      CHECK(c.num(i, "SR") == doctest::Approx(kr / (3.0 * n)).epsilon(1e-8));
      if (c.rows[i].at("curve") == "zenith") {
        CHECK(cr < prev_zenith_cr);
        prev_zenith_cr = cr;
        ++zen;
      } else {
        ++alt;
      }
    }
    CHECK(alt == 17);
    CHECK(zen == 14);
    CHECK(c.num(2, "altitude") == 300);
    CHECK(c.num(2, "CR") > 1e3);
  }

  TEST_CASE("channel single point matches sweep") {
    const Csv one = parse(cli({"channel", "--altitude-km", "500", "--zenith-rad", "0.5"}).out);
    const Csv sweep = parse(cli({"channel", "--zenith-rad", "0.5", "--sweep", "altitude:300:700:200"}).out);
    REQUIRE(one.rows.size() == 1);
    REQUIRE(sweep.rows.size() == 3);
    CHECK(one.rows[0] == sweep.rows[1]);
  }

  TEST_CASE("cvmodel rows are normalized") {
    const Csv c = parse(cli({"cvmodel"}).out);
    std::map<std::string, double> sums;
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
      const auto& r = c.rows[i];
      if (r.at("record") != "probability") continue;
      sums[r.at("mode") + r.at("quadrature") + r.at("x")] += c.num(i, "value");
    }
    CHECK(sums.size() == 12);
    for (const auto& [k, v] : sums) {
      CAPTURE(k);
      CHECK(v == doctest::Approx(1).epsilon(1e-6));
    }
    const Csv het = parse(cli({"cvmodel", "--detection", "heterodyne"}).out);
    for (const auto& r : het.rows) CHECK(r.at("mode") == "heterodyne");
  }

  TEST_CASE("forge-bench") {
    const Csv tiny = parse(cli({"forge-bench", "--n", "2", "--trials", "500"}).out);
    CHECK(tiny.num(0, "bound") == 1);
    CHECK(tiny.rows[0].at("within_bound") == "1");

    const Csv std16 = parse(cli({"forge-bench", "--trials", "5000"}).out);
    CHECK(std16.num(0, "bound") == doctest::Approx(64.0 / 32768));
    CHECK(std16.num(0, "trials") == 5000);

    // The seed drives the trials.
    const std::string a = cli({"--seed", "1", "forge-bench", "--n", "3", "--trials", "3000"}).out;
    const std::string b = cli({"--seed", "2", "forge-bench", "--n", "3", "--trials", "3000"}).out;
    CHECK(a != b);
  }
}
