#include "cqba/keyrate.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cqba {

namespace {

bool prob(double v) { return v >= 0 && v <= 1; }

double fluctuation(double total, const DecoyParams& d) {
  if (!d.fluctuations) return 0;
  return std::sqrt(total / 2 * std::log(21 / d.eps_sec));
}

// (e^k / p_k)(count_k + sign * delta)
double deviated(const DecoyParams& d, int k, double count, double delta, int sign) {
  return std::exp(d.mu[k]) / d.p[k] * (count + sign * delta);
}

// Adaptive GK31 with an absolute error target. Probabilities of far-off
// sectors are tiny, where a relative target never converges.
double integrate_abs(const std::function<double(double)>& f, double a, double b, double tol, int depth = 24) {
  double err = 0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0, &err);
  if (err <= tol || depth == 0) return v;
  const double m = 0.5 * (a + b);
  return integrate_abs(f, a, m, tol / 2, depth - 1) + integrate_abs(f, m, b, tol / 2, depth - 1);
}

double integrate_abs(const std::function<double(double)>& f, std::vector<double> pts, double tol) {
  std::sort(pts.begin(), pts.end());
  double total = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] > pts[i]) total += integrate_abs(f, pts[i], pts[i + 1], tol);
  }
  return total;
}

const std::array<double, 3>& counts(const ObservedStats& s, Basis b) { return b == Basis::X ? s.n_x : s.n_z; }

}  // namespace

void DecoyParams::validate() const {
  const auto [m1, m2, m3] = mu;
  if (!(m3 >= 0 && m2 > m3 && m1 > m2 + m3)) throw std::invalid_argument("decoy: need mu1 > mu2 + mu3, mu2 > mu3 >= 0");
  for (double v : p) {
    if (!(v > 0 && v < 1)) throw std::invalid_argument("decoy: intensity probabilities must lie in (0,1)");
  }
  if (std::abs(p[0] + p[1] + p[2] - 1) > 1e-9) throw std::invalid_argument("decoy: intensity probabilities must sum to 1");
  if (!(qx > 0 && qx < 1)) throw std::invalid_argument("decoy: qx must lie in (0,1)");
  if (!(n_pulses > 0)) throw std::invalid_argument("decoy: block size must be positive");
  for (double e : {eps_sec, eps_cor, eps_pa}) {
    if (!(e > 0 && e < 1)) throw std::invalid_argument("decoy: epsilons must lie in (0,1)");
  }
  if (!(f_ec >= 1)) throw std::invalid_argument("decoy: f_ec must be >= 1");
  if (!(detector_efficiency > 0 && detector_efficiency <= 1)) throw std::invalid_argument("decoy: bad detector efficiency");
  if (!prob(dark_count) || !prob(misalignment)) throw std::invalid_argument("decoy: dark count and misalignment in [0,1]");
  if (!(rep_rate > 0)) throw std::invalid_argument("decoy: repetition rate must be positive");
}

ObservedStats expected_stats(double eta, const DecoyParams& d) { return expected_stats(eta, d, d.n_pulses); }

ObservedStats expected_stats(double eta, const DecoyParams& d, double n_pulses) {
  d.validate();
  if (!prob(eta)) throw std::invalid_argument("expected_stats: eta must lie in [0,1]");
  const double eta_tot = eta * d.detector_efficiency;
  const double sx = d.qx * d.qx, sz = (1 - d.qx) * (1 - d.qx);
  ObservedStats s;
  for (int k = 0; k < 3; ++k) {
    const double click = 1 - std::exp(-eta_tot * d.mu[k]);
    const double gain = 1 - (1 - 2 * d.dark_count) * std::exp(-eta_tot * d.mu[k]);
    const double err = d.misalignment * click + d.dark_count;
    const double base = n_pulses * d.p[k];
    s.n_x[k] = base * sx * gain;
    s.n_z[k] = base * sz * gain;
    s.m_x[k] = base * sx * err;
    s.m_z[k] = base * sz * err;
  }
  return s;
}

double tau_n(const DecoyParams& d, int n) {
  double t = 0;
  for (int k = 0; k < 3; ++k) t += std::exp(-d.mu[k]) * std::pow(d.mu[k], n) * d.p[k];
  return t / std::tgamma(n + 1.0);
}

double vacuum_events(const ObservedStats& s, const DecoyParams& d, Basis b) {
  const auto& n = counts(s, b);
  const double delta = fluctuation(n[0] + n[1] + n[2], d);
  const double m2 = d.mu[1], m3 = d.mu[2];
  const double v = tau_n(d, 0) * (m2 * deviated(d, 2, n[2], delta, -1) - m3 * deviated(d, 1, n[1], delta, +1)) / (m2 - m3);
  return std::max(v, 0.0);
}

double single_photon_events(const ObservedStats& s, const DecoyParams& d, double s0, Basis b) {
  const auto& n = counts(s, b);
  const double delta = fluctuation(n[0] + n[1] + n[2], d);
  const auto [m1, m2, m3] = d.mu;
  const double inner = deviated(d, 1, n[1], delta, -1) - deviated(d, 2, n[2], delta, +1) -
                       (m2 * m2 - m3 * m3) / (m1 * m1) * (deviated(d, 0, n[0], delta, +1) - s0 / tau_n(d, 0));
  const double v = tau_n(d, 1) * m1 * inner / (m1 * (m2 - m3) - m2 * m2 + m3 * m3);
  return std::max(v, 0.0);
}

double single_photon_errors(const ObservedStats& s, const DecoyParams& d) {
  const double delta = fluctuation(s.m_Z(), d);
  const double v = tau_n(d, 1) * (deviated(d, 1, s.m_z[1], delta, +1) - deviated(d, 2, s.m_z[2], delta, -1)) /
                   (d.mu[1] - d.mu[2]);
  return std::max(v, 0.0);
}

double gamma_u(double a, double b, double c, double d) {
  if (!(b > 0 && b < 1) || !(c > 0 && d > 0)) return 0;
  const double arg = (c + d) / (c * d * (1 - b) * b) * 441 / (a * a);
  const double v = (c + d) * (1 - b) * b / (c * d * std::numbers::ln2) * std::log2(arg);
  return v > 0 ? std::sqrt(v) : 0;
}

double phase_error_rate(const ObservedStats& s, const DecoyParams& d, double s_z1, double s_x1) {
  if (!(s_z1 > 0) || !(s_x1 > 0)) return 0.5;
  const double b = single_photon_errors(s, d) / s_z1;
  const double g = d.fluctuations ? gamma_u(d.eps_sec, b, s_z1, s_x1) : 0;
  return std::clamp(b + g, 0.0, 0.5);
}

double binary_entropy(double p) {
  if (p <= 0 || p >= 1) return 0;
  return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
}

KeyLength key_length(const ObservedStats& s, const DecoyParams& d) {
  d.validate();
  KeyLength k;
  k.s_x0 = vacuum_events(s, d, Basis::X);
  k.s_x1 = single_photon_events(s, d, k.s_x0, Basis::X);
  k.s_z0 = vacuum_events(s, d, Basis::Z);
  k.s_z1 = single_photon_events(s, d, k.s_z0, Basis::Z);
  k.v_z1 = single_photon_errors(s, d);
  k.phi = phase_error_rate(s, d, k.s_z1, k.s_x1);
  const double nx = s.n_X();
  const double ex = nx > 0 ? s.m_X() / nx : 0;
  k.lambda_ec = d.f_ec * nx * binary_entropy(ex);
  k.raw = k.s_x0 + k.s_x1 * (1 - binary_entropy(k.phi)) - k.lambda_ec - std::log2(2 / d.eps_cor) -
          6 * std::log2(22 / d.eps_pa);
  k.abort = !(k.raw > 0);
  k.bits = k.abort ? 0 : std::floor(k.raw);
  return k;
}

double bb84_key_rate(const KeyLength& k, const DecoyParams& d) { return k.bits * d.rep_rate / d.n_pulses; }

Bb84Point evaluate_bb84(const LinkGeometry& geom, const OpticsParams& optics, const DecoyParams& d) {
  Bb84Point pt;
  pt.link = link_budget(geom, optics);
  pt.stats = expected_stats(pt.link.eta_mean, d);
  pt.key = key_length(pt.stats, d);
  pt.key_rate = bb84_key_rate(pt.key, d);
  return pt;
}

double consensus_rate(std::span<const double> key_rates, int N, std::size_t n) {
  if (key_rates.empty()) throw std::invalid_argument("consensus_rate: no links");
  if (N < 3) throw std::invalid_argument("consensus_rate: need N >= 3");
  if (n == 0) throw std::invalid_argument("consensus_rate: n must be positive");
  const double kr = *std::min_element(key_rates.begin(), key_rates.end());
  const double sr = kr / (3.0 * static_cast<double>(n));
  return sr / (static_cast<double>(N) * N - N);
}

void CvModelParams::validate() const {
  if (!(alpha > 0)) throw std::invalid_argument("cv: alpha must be positive");
  if (!(delta_c >= 0 && delta_a >= 0 && delta_p >= 0)) throw std::invalid_argument("cv: thresholds must be nonnegative");
  if (!(delta_p < std::numbers::pi / 4)) throw std::invalid_argument("cv: delta_p must be below pi/4");
  if (!(eta > 0 && eta <= 1)) throw std::invalid_argument("cv: eta must lie in (0,1]");
  if (!(xi >= 0)) throw std::invalid_argument("cv: xi must be nonnegative");
  if (!prob(beta)) throw std::invalid_argument("cv: beta must lie in [0,1]");
  double sum = 0;
  for (double v : p_x) {
    if (!(v >= 0)) throw std::invalid_argument("cv: p_x must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1) > 1e-9) throw std::invalid_argument("cv: p_x must sum to 1");
}

std::vector<double> cv_outcome_probabilities(Detection mode, const CvModelParams& cv, int x, Quadrature y, double tol) {
  cv.validate();
  if (x < 0 || x > 3) throw std::invalid_argument("cv: x must be in 0..3");
  const double pi = std::numbers::pi;
  const double phase = pi / 4 + x * pi / 2;
  std::vector<double> out;
  if (mode == Detection::homodyne) {
    const double comp = y == Quadrature::q ? std::cos(phase) : std::sin(phase);
    const double mean = std::sqrt(2 * cv.eta) * cv.alpha * comp;
    const double s = std::sqrt(cv.eta * cv.xi + 1);
    const double lo = (cv.delta_c - mean) / s, hi = (cv.delta_c + mean) / s;
    out = {0.5 * std::erfc(lo), 0.5 * std::erfc(hi), 0.5 * (std::erf(lo) + std::erf(hi))};
    return out;
  }
  const double v = 1 + cv.eta * cv.xi / 2;
  const double c = std::sqrt(cv.eta) * cv.alpha;
  const double top = c + 12 * std::sqrt(v);
  double kept = 0;
  for (int j = 0; j < 4; ++j) {
    const double t0 = j * pi / 2 + cv.delta_p, t1 = (j + 1) * pi / 2 - cv.delta_p;
    const auto radial = [&](double g) {
      const auto angular = [&](double t) {
        const double d2 = (g - c) * (g - c) + 2 * g * c * (1 - std::cos(t - phase));
        return std::exp(-d2 / v);
      };
      std::vector<double> pts{t0, t1};
      for (double b : {phase - 2 * pi, phase, phase + 2 * pi}) {
        if (b > t0 && b < t1) pts.push_back(b);
      }
      return g * integrate_abs(angular, pts, tol * 1e-2) / (pi * v);
    };
    std::vector<double> pts{cv.delta_a, top};
    if (c > cv.delta_a && c < top) pts.push_back(c);
    const double pj = integrate_abs(radial, pts, tol);
    out.push_back(pj);
    kept += pj;
  }
  out.push_back(std::max(0.0, 1 - kept));
  return out;
}

CvTable cv_table(Detection mode, const CvModelParams& cv, Quadrature y) {
  CvTable t{mode, y, {}};
  for (int x = 0; x < 4; ++x) t.rows.push_back(cv_outcome_probabilities(mode, cv, x, y));
  return t;
}

CvErrorTerms cv_error_correction_terms(const CvTable& t, const CvModelParams& cv) {
  cv.validate();
  if (t.rows.size() != cv.p_x.size()) throw std::invalid_argument("cv: table needs one row per input state");
  const std::size_t kept = t.rows.front().size() - 1;
  CvErrorTerms r;
  std::vector<double> marginal(kept, 0.0);
  for (std::size_t x = 0; x < t.rows.size(); ++x) {
    const auto& row = t.rows[x];
    if (row.size() != kept + 1) throw std::invalid_argument("cv: ragged table");
    double pass = 0;
    for (std::size_t j = 0; j < kept; ++j) pass += row[j];
    r.p_pass += cv.p_x[x] * pass;
    for (std::size_t j = 0; j < kept; ++j) marginal[j] += cv.p_x[x] * row[j];
    if (pass <= 0) continue;
    double h = 0;
    for (std::size_t j = 0; j < kept; ++j) {
      const double q = row[j] / pass;
      if (q > 0) h -= q * std::log2(q);
    }
    r.h_z_given_x += cv.p_x[x] * h;
  }
  if (r.p_pass > 0) {
    for (double m : marginal) {
      const double q = m / r.p_pass;
      if (q > 0) r.h_z -= q * std::log2(q);
    }
  }
  r.delta_ec = (1 - cv.beta) * r.h_z + cv.beta * r.h_z_given_x;
  return r;
}

}  // namespace cqba
