#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <utility>

#include "cqba/channel.hpp"
#include "cqba/gf2poly.hpp"
#include "cqba/harness.hpp"
#include "cqba/keyrate.hpp"
#include "cqba/lfsr_toeplitz.hpp"
#include "cqba/qds.hpp"
#include "cqba/rng.hpp"
#include "cqba/security_bounds.hpp"
#include "json.hpp"

namespace cqba::cli {

namespace {

using nlohmann::json;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string num(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

/// Output table: '#' metadata lines, a header and rows. Cells are already
/// formatted; JSON output keeps them as strings except where marked numeric.
struct Table {
  std::string command;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  void add(std::vector<json> row) { rows.push_back(std::move(row)); }

  std::string csv() const {
    std::ostringstream o;
    o << "# cqba " << command << '\n';
    for (const auto& [k, v] : meta) o << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) o << (i ? "," : "") << columns[i];
    o << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) o << ',';
        const json& c = r[i];
        if (c.is_string()) {
          o << c.get<std::string>();
        } else if (c.is_boolean()) {
          o << (c.get<bool>() ? 1 : 0);
        } else if (c.is_number_integer()) {
          o << c.dump();
        } else if (c.is_number_float()) {
          o << num(c.get<double>());
        } else {
          o << "NA";
        }
      }
      o << '\n';
    }
    return o.str();
  }

  std::string as_json() const {
    json j;
    j["command"] = command;
    json m = json::object();
    for (const auto& [k, v] : meta) m[k] = v;
    j["meta"] = m;
    j["columns"] = columns;
    j["rows"] = rows;
    return j.dump(2) + "\n";
  }
};

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
};

void emit(const Globals& g, const std::string& body, std::ostream& out) {
  if (g.out.empty()) {
    out << body;
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f) throw UsageError("cannot write " + g.out);
  f << body;
}

void emit(const Globals& g, const Table& t, std::ostream& out) { emit(g, g.format == "json" ? t.as_json() : t.csv(), out); }

struct Range {
  long lo = 0, hi = 0;
};

Range parse_range(const std::string& s, const char* what) {
  try {
    const auto colon = s.find(':');
    Range r;
    std::size_t used = 0;
    if (colon == std::string::npos) {
      r.lo = r.hi = std::stol(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } else {
      r.lo = std::stol(s.substr(0, colon), &used);
      r.hi = std::stol(s.substr(colon + 1));
    }
    if (r.hi < r.lo) throw std::invalid_argument(s);
    return r;
  } catch (const std::exception&) {
    throw UsageError(std::string("bad range for ") + what + ": '" + s + "' (use A or A:B)");
  }
}

struct ChannelOpts {
  double altitude_km = 300;
  double zenith = 0;
  double wavelength_nm = 1550;
  double waist = 0.15;
  double aperture = 0.75;
  double pointing = 1e-6;
  double wander = 1.0;
  double turbulence_scale = 1;
  double xi_ch = 0.01;
  double xi_det = 0.01;
  std::string sweep;

  void attach(CLI::App* app) {
    app->add_option("--altitude-km", altitude_km, "Satellite altitude (km)")->capture_default_str();
    app->add_option("--zenith-rad", zenith, "Zenith angle (rad)")->capture_default_str();
    app->add_option("--wavelength-nm", wavelength_nm, "Wavelength (nm), 800 or 1550")->capture_default_str();
    app->add_option("--waist-m", waist, "Initial beam waist (m)")->capture_default_str();
    app->add_option("--aperture-m", aperture, "Receiver aperture radius (m)")->capture_default_str();
    app->add_option("--pointing-rad", pointing, "Pointing error (rad)")->capture_default_str();
    app->add_option("--wander-m", wander, "Beam-wander standard deviation (m)")->capture_default_str();
    app->add_option("--turbulence-scale", turbulence_scale, "Multiplier on the Cn2 profile")->capture_default_str();
  }

  void attach_noise(CLI::App* app) {
    app->add_option("--xi-ch", xi_ch, "Channel excess noise")->capture_default_str();
    app->add_option("--xi-det", xi_det, "Homodyne detector excess noise")->capture_default_str();
  }

  OpticsParams optics() const {
    OpticsParams o;
    o.wavelength = wavelength_nm * 1e-9;
    o.initial_waist = waist;
    o.aperture = aperture;
    o.pointing_error = pointing;
    o.wander_std = wander;
    o.turbulence_scale = turbulence_scale;
    try {
      o.sea_level_extinction = OpticsParams::extinction_for_wavelength(o.wavelength);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (!(waist > 0 && aperture > 0 && pointing >= 0 && wander >= 0 && turbulence_scale >= 0)) {
      throw UsageError("optics parameters must be positive");
    }
    return o;
  }

  LinkGeometry at(double alt_km, double zen) const {
    LinkGeometry g{alt_km * 1e3, zen};
    try {
      g.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return g;
  }

  void describe(Table& t) const {
    const OpticsParams o = optics();
    t.meta.push_back({"link", "downlink, spherical earth"});
    t.meta.push_back({"wavelength_nm", num(wavelength_nm)});
    t.meta.push_back({"initial_waist_m", num(waist)});
    t.meta.push_back({"aperture_m", num(aperture)});
    t.meta.push_back({"pointing_error_rad", num(pointing)});
    t.meta.push_back({"wander_std_m", num(wander) + " (assumed input)"});
    t.meta.push_back({"sea_level_extinction_per_m", num(o.sea_level_extinction)});
    t.meta.push_back({"turbulence", "Hufnagel-Valley, wind " + num(o.wind_speed) + " m/s, scale " + num(turbulence_scale)});
  }
};

struct SweepPoint {
  double altitude_km, zenith;
};

std::vector<SweepPoint> parse_sweep(const std::string& spec, double alt_km, double zen, std::string* axis = nullptr) {
  if (spec.empty()) return {{alt_km, zen}};
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 4 || (parts[0] != "altitude" && parts[0] != "zenith")) {
    throw UsageError("sweep must be altitude:LO:HI:STEP (km) or zenith:LO:HI:STEP (rad)");
  }
  double lo, hi, step;
  try {
    lo = std::stod(parts[1]);
    hi = std::stod(parts[2]);
    step = std::stod(parts[3]);
  } catch (const std::exception&) {
    throw UsageError("sweep bounds must be numbers");
  }
  if (!(step > 0) || hi < lo) throw UsageError("sweep needs STEP > 0 and HI >= LO");
  const long count = std::lround(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 100000) throw UsageError("sweep has too many points");
  if (axis) *axis = parts[0];
  std::vector<SweepPoint> pts;
  for (long i = 0; i < count; ++i) {
    const double v = lo + step * static_cast<double>(i);
    pts.push_back(parts[0] == "altitude" ? SweepPoint{v, zen} : SweepPoint{alt_km, v});
  }
  return pts;
}

struct DecoyOpts {
  DecoyParams d;

  void attach(CLI::App* app) {
    app->add_option("--block-size", d.n_pulses, "Pulses per finite-key block")->capture_default_str();
    app->add_option("--qx", d.qx, "X-basis probability")->capture_default_str();
    app->add_option("--dark-count", d.dark_count, "Dark-count probability per pulse")->capture_default_str();
    app->add_option("--misalignment", d.misalignment, "Misalignment error")->capture_default_str();
    app->add_option("--detector-efficiency", d.detector_efficiency, "Detector efficiency")->capture_default_str();
    app->add_option("--f-ec", d.f_ec, "Error-correction efficiency")->capture_default_str();
    app->add_option("--rep-rate", d.rep_rate, "Source repetition rate (Hz)")->capture_default_str();
    app->add_option("--eps-sec", d.eps_sec, "Secrecy parameter")->capture_default_str();
  }

  const DecoyParams& get() const {
    try {
      d.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return d;
  }

  void describe(Table& t) const {
    t.meta.push_back({"decoy_mu", num(d.mu[0]) + "/" + num(d.mu[1]) + "/" + num(d.mu[2])});
    t.meta.push_back({"decoy_p", num(d.p[0]) + "/" + num(d.p[1]) + "/" + num(d.p[2])});
    t.meta.push_back({"qx", num(d.qx)});
    t.meta.push_back({"block_size", num(d.n_pulses)});
    t.meta.push_back({"eps_sec", num(d.eps_sec)});
    t.meta.push_back({"eps_cor", num(d.eps_cor)});
    t.meta.push_back({"eps_pa", num(d.eps_pa)});
    t.meta.push_back({"f_ec", num(d.f_ec)});
    t.meta.push_back({"detector_efficiency", num(d.detector_efficiency)});
    t.meta.push_back({"dark_count", num(d.dark_count)});
    t.meta.push_back({"misalignment", num(d.misalignment)});
    t.meta.push_back({"rep_rate_hz", num(d.rep_rate) + " (assumed)"});
  }
};

struct QbaOpts {
  int players = 7;
  int malicious = -1;
  double message_bits = 1e8;
  double target_eps = 1e-10;
  std::size_t signature_bits = 0;

  void attach(CLI::App* app) {
    app->add_option("--players", players, "Players N including the general")->capture_default_str();
    app->add_option("--malicious", malicious, "Tolerated malicious players (default N-2)");
    app->add_option("--message-bits", message_bits, "Order length m (bits)")->capture_default_str();
    app->add_option("--target-eps", target_eps, "Target QBA failure probability")->capture_default_str();
    app->add_option("--signature-bits", signature_bits, "Signature length n (default: smallest meeting the target)");
  }

  int f() const { return malicious < 0 ? players - 2 : malicious; }

  std::size_t n() const {
    if (players < 3 || f() > players - 2) throw UsageError("need N >= 3 and 0 <= malicious <= N-2");
    if (!(message_bits >= 1)) throw UsageError("message-bits must be at least 1");
    if (signature_bits != 0) return signature_bits;
    try {
      return signature_length_planner(players, f(), message_bits, target_eps);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }

  void describe(Table& t) const {
    t.meta.push_back({"players", std::to_string(players)});
    t.meta.push_back({"malicious", std::to_string(f())});
    t.meta.push_back({"message_bits", num(message_bits)});
    t.meta.push_back({"signature_bits", std::to_string(n())});
    t.meta.push_back({"target_eps_qba", num(target_eps)});
  }
};

// ---- subcommands ----

int cmd_bounds(const Globals& g, const std::string& f_spec, const std::string& n_spec, double m, double n,
               double eps_kgp, std::ostream& out) {
  const Range fr = parse_range(f_spec, "--f");
  if (fr.lo < 0) throw UsageError("f must be non-negative");
  std::optional<Range> nr;
  if (!n_spec.empty()) nr = parse_range(n_spec, "--N");
  if (!(m >= 1) || !(n >= 2) || !(eps_kgp >= 0 && eps_kgp <= 1)) throw UsageError("need m >= 1, n >= 2, eps-kgp in [0,1]");

  Table t;
  t.command = "bounds";
  t.meta.push_back({"complexity", "exact integer round counts"});
  t.columns = {"protocol", "N", "f", "m", "n", "eps_case1", "eps_case2", "eps_qba", "complexity", "complexity_sci",
               "log2_eps_qba"};
  auto row = [&](QbaProtocol p, int N, int f) {
    const BigInt c = complexity(p, N, f);
    std::vector<json> r{std::string(protocol_name(p)), N, f, num(m), num(n)};
    if (p == QbaProtocol::circular) {
      const BoundInputs in{N, f, m, n, eps_kgp};
      r.push_back(sci(case1_failure(in)));
      r.push_back(sci(case2_failure(in)));
      r.push_back(sci(total_failure(in)));
    } else {
      r.insert(r.end(), {"NA", "NA", "NA"});
    }
    r.push_back(c.str());
    r.push_back(scientific3(c));
    r.push_back(p == QbaProtocol::circular ? json(num(log2_qba_failure(BoundInputs{N, f, m, n, eps_kgp}))) : json("NA"));
    t.add(std::move(r));
  };
  for (long f = fr.lo; f <= fr.hi; ++f) {
    const int fi = static_cast<int>(f);
    for (QbaProtocol p : {QbaProtocol::circular, QbaProtocol::qkd_based, QbaProtocol::recursive}) {
      // Without faults only the circular count is meaningful.
      if (fi == 0 && p != QbaProtocol::circular) continue;
      const int minimal = std::max(3, minimal_players(p, fi));
      if (!nr) {
        row(p, minimal, fi);
        continue;
      }
      for (long N = nr->lo; N <= nr->hi; ++N) {
        if (N >= minimal) row(p, static_cast<int>(N), fi);
      }
    }
    if (fi == 1 && !nr) t.add({"detectable", 3, 1, "NA", "NA", "NA", "NA", "NA", "NA", "NA", "NA"});
  }
  emit(g, t, out);
  return ok;
}

int cmd_channel(const Globals& g, const ChannelOpts& c, const std::string& detection, std::ostream& out) {
  const Detection det = detection == "heterodyne" ? Detection::heterodyne : Detection::homodyne;
  Table t;
  t.command = "channel";
  c.describe(t);
  t.meta.push_back({"detection", detection});
  t.meta.push_back({"xi_ch", num(c.xi_ch)});
  t.meta.push_back({"xi_det", num(c.xi_det)});
  t.columns = {"altitude", "zenith", "eta_ext", "W_ST", "eta_mean", "xi"};
  const OpticsParams o = c.optics();
  for (const auto& p : parse_sweep(c.sweep, c.altitude_km, c.zenith)) {
    const LinkBudget b = link_budget(c.at(p.altitude_km, p.zenith), o);
    t.add({p.altitude_km, p.zenith, b.eta_ext, b.W_ST, b.eta_mean,
           total_excess_noise({c.xi_ch, c.xi_det}, b.eta_mean, det)});
  }
  emit(g, t, out);
  return ok;
}

int cmd_keyrate(const Globals& g, const std::string& protocol, const ChannelOpts& c, const DecoyOpts& d,
                const QbaOpts& q, std::ostream& out) {
  if (protocol != "bb84") throw UsageError("only --protocol bb84 has a key-rate model; CV key rates are not computed");
  const std::size_t n = q.n();
  Table t;
  t.command = "keyrate";
  c.describe(t);
  d.describe(t);
  q.describe(t);
  t.columns = {"altitude", "zenith", "eta_mean", "l_key", "KR_bps", "SR", "CR"};
  const OpticsParams o = c.optics();
  for (const auto& p : parse_sweep(c.sweep, c.altitude_km, c.zenith)) {
    const Bb84Point b = evaluate_bb84(c.at(p.altitude_km, p.zenith), o, d.get());
    const double kr = b.key_rate;
    t.add({p.altitude_km, p.zenith, b.link.eta_mean, b.key.bits, kr, signature_rate(kr, n),
           consensus_rate(std::span(&kr, 1), q.players, n)});
  }
  emit(g, t, out);
  return ok;
}

int cmd_consensus_rate(const Globals& g, const ChannelOpts& c, const DecoyOpts& d, const QbaOpts& q,
                       std::ostream& out) {
  const std::size_t n = q.n();
  Table t;
  t.command = "consensus-rate";
  c.describe(t);
  d.describe(t);
  q.describe(t);
  t.meta.push_back({"identity", "CR = KR / (3 n) / (N^2 - N)"});
  t.columns = {"curve", "altitude", "zenith", "eta_mean", "KR_bps", "SR", "CR"};
  std::vector<std::pair<std::string, std::vector<SweepPoint>>> curves;
  if (!c.sweep.empty()) {
    std::string axis;
    auto pts = parse_sweep(c.sweep, c.altitude_km, c.zenith, &axis);
    curves.emplace_back(axis, std::move(pts));
  } else {
    curves.emplace_back("altitude", parse_sweep("altitude:200:1000:50", c.altitude_km, c.zenith));
    curves.emplace_back("zenith", parse_sweep("zenith:0:1.3:0.1", c.altitude_km, c.zenith));
  }
  const OpticsParams o = c.optics();
  for (const auto& [name, pts] : curves) {
    for (const auto& p : pts) {
      const Bb84Point b = evaluate_bb84(c.at(p.altitude_km, p.zenith), o, d.get());
      const double kr = b.key_rate;
      t.add({name, p.altitude_km, p.zenith, b.link.eta_mean, kr, signature_rate(kr, n),
             consensus_rate(std::span(&kr, 1), q.players, n)});
    }
  }
  emit(g, t, out);
  return ok;
}

struct CvOpts {
  CvModelParams cv;
  double eta = -1;
  std::string detection = "both";
  bool key_rate = false;
};

int cmd_cvmodel(const Globals& g, const CvOpts& o, const ChannelOpts& c, std::ostream& out) {
  if (o.key_rate) {
    throw UsageError("CV secret-key rates need the relative-entropy optimization, which is not implemented; "
                     "only outcome tables and error-correction terms are available");
  }
  if (o.detection != "both" && o.detection != "homodyne" && o.detection != "heterodyne") {
    throw UsageError("--detection must be homodyne, heterodyne or both");
  }
  double eta = o.eta;
  if (eta < 0) eta = mean_transmittance(c.at(c.altitude_km, c.zenith), c.optics());
  Table t;
  t.command = "cvmodel";
  t.meta.push_back({"alpha", num(o.cv.alpha)});
  t.meta.push_back({"delta_c", num(o.cv.delta_c)});
  t.meta.push_back({"delta_a", num(o.cv.delta_a)});
  t.meta.push_back({"delta_p", num(o.cv.delta_p)});
  t.meta.push_back({"beta", num(o.cv.beta)});
  t.meta.push_back({"eta", num(eta) + (o.eta < 0 ? " (from channel model)" : "")});
  t.meta.push_back({"xi_ch", num(c.xi_ch)});
  t.meta.push_back({"xi_det", num(c.xi_det) + " (doubled for heterodyne)"});
  t.meta.push_back({"key_rate", "not computed"});
  t.columns = {"record", "mode", "quadrature", "x", "outcome", "value"};
  auto table_for = [&](Detection mode, Quadrature y, const char* mname, const char* yname) {
    CvModelParams cv = o.cv;
    cv.eta = eta;
    cv.xi = total_excess_noise({c.xi_ch, c.xi_det}, eta, mode);
    try {
      cv.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const CvTable tab = cv_table(mode, cv, y);
    for (int x = 0; x < 4; ++x) {
      const auto& row = tab.rows[static_cast<std::size_t>(x)];
      for (std::size_t j = 0; j < row.size(); ++j) {
        const std::string outcome = j + 1 == row.size() ? "discard" : std::to_string(j);
        t.add({"probability", mname, yname, x, outcome, row[j]});
      }
    }
    const CvErrorTerms e = cv_error_correction_terms(tab, cv);
    t.add({"xi", mname, yname, "NA", "NA", cv.xi});
    t.add({"p_pass", mname, yname, "NA", "NA", e.p_pass});
    t.add({"H_Z", mname, yname, "NA", "NA", e.h_z});
    t.add({"H_Z_given_X", mname, yname, "NA", "NA", e.h_z_given_x});
    t.add({"delta_EC", mname, yname, "NA", "NA", e.delta_ec});
  };
  if (o.detection != "heterodyne") {
    table_for(Detection::homodyne, Quadrature::q, "homodyne", "q");
    table_for(Detection::homodyne, Quadrature::p, "homodyne", "p");
  }
  if (o.detection != "homodyne") table_for(Detection::heterodyne, Quadrature::q, "heterodyne", "NA");
  emit(g, t, out);
  return ok;
}

int cmd_forge_bench(const Globals& g, std::size_t n, std::size_t msg_bits, long trials, std::ostream& out) {
  if (n < 2 || n > 4096) throw UsageError("--n must be in 2..4096");
  if (msg_bits < 1) throw UsageError("--msg-bits must be at least 1");
  if (trials < 1) throw UsageError("--trials must be positive");
  std::mt19937_64 rng(derive_seed(g.seed, "forge-bench", 0));
  long hits = 0;
  for (long i = 0; i < trials; ++i) {
    // Fresh one-time key and polynomial per trial. The forger's best use of a
    // seen (message, signature) pair is an offset (dm, ds) with dm != 0; it
    // succeeds iff the hash of dm equals ds.
    const BitVec key = BitVec::random(n, rng);
    const Poly2 p = random_irreducible(n, rng);
    BitVec dm;
    do {
      dm = BitVec::random(msg_bits, rng);
    } while (dm.none());
    const BitVec ds = BitVec::random(n, rng);
    if (hash(HashParams(key, p, false), dm) == ds) ++hits;
  }
  const double bound = forgery_bound(static_cast<double>(msg_bits), static_cast<double>(n));
  const double sigma = std::sqrt(bound * (1 - bound) / static_cast<double>(trials));
  const double freq = static_cast<double>(hits) / static_cast<double>(trials);
  const double threshold = bound + 3 * sigma;
  Table t;
  t.command = "forge-bench";
  t.meta.push_back({"seed", std::to_string(g.seed)});
  t.meta.push_back({"attack", "random nonzero message offset with random signature offset"});
  t.columns = {"n", "msg_bits", "trials", "successes", "frequency", "bound", "sigma", "threshold", "within_bound"};
  t.add({n, msg_bits, trials, hits, freq, bound, sigma, threshold, freq <= threshold});
  emit(g, t, out);
  return freq <= threshold ? ok : protocol_failure;
}

int cmd_simulate(const Globals& g, bool seed_given, const std::string& path, const std::string& dir, std::ostream& out,
                 std::ostream& err) {
  Scenario s = Scenario::load(path);
  if (seed_given) s.seed = g.seed;
  const Transcript t = run(s);
  write_transcript(t, dir);
  // --out names the transcript directory here, so the summary goes to stdout.
  if (g.format == "json") {
    out << t.summary().dump(2) << '\n';
  } else {
    Table tab;
    tab.command = "simulate";
    tab.meta.push_back({"scenario", std::filesystem::path(path).filename().string()});
    tab.meta.push_back({"seed", std::to_string(s.seed)});
    tab.meta.push_back({"players", std::to_string(s.role.players)});
    tab.meta.push_back({"quantum_links_used", std::to_string(t.quantum_links_used.size())});
    tab.columns = {"round", "aborted", "ic1", "ic2", "qds", "qds_attempts", "restarts", "forgery_events"};
    for (std::size_t i = 0; i < t.rounds.size(); ++i) {
      const RoundResult& r = t.rounds[i];
      tab.add({r.round, r.aborted, t.checks[i].ic1, t.checks[i].ic2, r.qds_accepted, r.qds.size(), r.restarts,
               r.forgery_events.size()});
    }
    out << tab.csv();
  }
  bool forged = false;
  for (const auto& r : t.rounds) forged = forged || !r.forgery_events.empty();
  if (t.ok() && !forged) return ok;
  for (std::size_t i = 0; i < t.rounds.size(); ++i) {
    const RoundResult& r = t.rounds[i];
    if (r.aborted) err << "round " << r.round << " aborted: " << r.abort_reason << '\n';
    if (!t.checks[i].ic1) err << "round " << r.round << ": honest lieutenants disagree (IC1 violated)\n";
    if (!t.checks[i].ic2) err << "round " << r.round << ": honest lieutenants did not follow the general (IC2 violated)\n";
    for (const auto& f : r.forgery_events) err << "round " << r.round << " forgery: " << f << '\n';
  }
  return protocol_failure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Circular quantum Byzantine agreement: simulator, bounds and link models", "cqba"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  CLI::Option* seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output file (simulate: transcript directory)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Run a scenario and write its transcript");
  std::string scenario_path;
  sim->add_option("scenario", scenario_path, "Scenario JSON file")->required();

  auto* bnd = app.add_subcommand("bounds", "Failure bounds and round complexity");
  std::string f_spec = "0:10", n_spec;
  double bm = 1e6, bn = 128, eps_kgp = 0;
  bnd->add_option("--f", f_spec, "Malicious players, A or A:B")->capture_default_str();
  bnd->add_option("--N", n_spec, "Players, A or A:B (default: each protocol's minimum)");
  bnd->add_option("--m", bm, "Order length (bits)")->capture_default_str();
  bnd->add_option("--n", bn, "Signature length (bits)")->capture_default_str();
  bnd->add_option("--eps-kgp", eps_kgp, "Key-generation failure probability")->capture_default_str();

  ChannelOpts ch;
  DecoyOpts dec;
  QbaOpts qba;

  auto* chan = app.add_subcommand("channel", "Downlink transmittance and excess noise");
  std::string detection = "homodyne";
  ch.attach(chan);
  ch.attach_noise(chan);
  chan->add_option("--sweep", ch.sweep, "altitude:LO:HI:STEP (km) or zenith:LO:HI:STEP (rad)");
  chan->add_option("--detection", detection, "Detector for the noise column")
      ->check(CLI::IsMember({"homodyne", "heterodyne"}))
      ->capture_default_str();

  auto* kr = app.add_subcommand("keyrate", "Finite-key BB84 key rate and consensus rate");
  std::string protocol = "bb84";
  kr->add_option("--protocol", protocol, "Key-generation protocol")->capture_default_str();
  ch.attach(kr);
  kr->add_option("--sweep", ch.sweep, "altitude:LO:HI:STEP (km) or zenith:LO:HI:STEP (rad)");
  dec.attach(kr);
  qba.attach(kr);

  auto* cr = app.add_subcommand("consensus-rate", "Consensus rate versus altitude and zenith angle");
  ch.attach(cr);
  cr->add_option("--sweep", ch.sweep, "Single curve: altitude:LO:HI:STEP or zenith:LO:HI:STEP");
  dec.attach(cr);
  qba.attach(cr);

  auto* cvm = app.add_subcommand("cvmodel", "CV outcome probabilities and error-correction terms");
  CvOpts cvo;
  cvm->add_option("--alpha", cvo.cv.alpha, "Coherent-state amplitude")->capture_default_str();
  cvm->add_option("--delta-c", cvo.cv.delta_c, "Homodyne post-selection threshold")->capture_default_str();
  cvm->add_option("--delta-a", cvo.cv.delta_a, "Heterodyne amplitude threshold")->capture_default_str();
  cvm->add_option("--delta-p", cvo.cv.delta_p, "Heterodyne phase margin")->capture_default_str();
  cvm->add_option("--beta", cvo.cv.beta, "Reconciliation efficiency")->capture_default_str();
  cvm->add_option("--eta", cvo.eta, "Transmittance (default: channel model)");
  cvm->add_option("--detection", cvo.detection, "homodyne, heterodyne or both")->capture_default_str();
  cvm->add_flag("--key-rate", cvo.key_rate, "Request a CV key rate (refused)");
  ch.attach(cvm);
  ch.attach_noise(cvm);

  auto* fb = app.add_subcommand("forge-bench", "Empirical forgery frequency against the bound");
  std::size_t fb_n = 16, fb_m = 64;
  long fb_trials = 100000;
  fb->add_option("--n", fb_n, "Digest length")->capture_default_str();
  fb->add_option("--msg-bits", fb_m, "Message length")->capture_default_str();
  fb->add_option("--trials", fb_trials, "Trials")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage_error;
  }

  try {
    // simulate writes a directory; everything else writes one file.
    if (sim->parsed()) return cmd_simulate(g, seed_opt->count() > 0, scenario_path, g.out.empty() ? "transcript" : g.out,
                                           out, err);
    if (bnd->parsed()) return cmd_bounds(g, f_spec, n_spec, bm, bn, eps_kgp, out);
    if (chan->parsed()) return cmd_channel(g, ch, detection, out);
    if (kr->parsed()) return cmd_keyrate(g, protocol, ch, dec, qba, out);
    if (cr->parsed()) return cmd_consensus_rate(g, ch, dec, qba, out);
    if (cvm->parsed()) return cmd_cvmodel(g, cvo, ch, out);
    if (fb->parsed()) return cmd_forge_bench(g, fb_n, fb_m, fb_trials, out);
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const std::logic_error& e) {
    err << "protocol invariant violated: " << e.what() << '\n';
    return protocol_failure;
  }
  return usage_error;
}

}  // namespace cqba::cli
