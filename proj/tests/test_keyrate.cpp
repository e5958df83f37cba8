#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "cqba/keyrate.hpp"
#include "doctest.h"

using namespace cqba;

namespace {

// Straight transcription of the finite-key chain in long double, used as an
// independent check on the library's wiring.
long double oracle_key_length(const ObservedStats& s, const DecoyParams& d) {
  using LD = long double;
  auto tau = [&](int n) {
    LD t = 0;
    for (int k = 0; k < 3; ++k) t += std::exp(-(LD)d.mu[k]) * std::pow((LD)d.mu[k], n) * d.p[k];
    return n == 0 ? t : t / (n == 1 ? 1 : 2);
  };
  auto dev = [&](const std::array<double, 3>& c, LD total, int k, int sgn) {
    const LD del = std::sqrt(total / 2 * std::log(21.0L / d.eps_sec));
    return std::exp((LD)d.mu[k]) / d.p[k] * (c[k] + sgn * del);
  };
  const LD m1 = d.mu[0], m2 = d.mu[1], m3 = d.mu[2];
  auto s0 = [&](const std::array<double, 3>& c) {
    const LD tot = c[0] + c[1] + c[2];
    return std::max<LD>(0, tau(0) * (m2 * dev(c, tot, 2, -1) - m3 * dev(c, tot, 1, +1)) / (m2 - m3));
  };
  auto s1 = [&](const std::array<double, 3>& c, LD v0) {
    const LD tot = c[0] + c[1] + c[2];
    const LD in = dev(c, tot, 1, -1) - dev(c, tot, 2, +1) - (m2 * m2 - m3 * m3) / (m1 * m1) * (dev(c, tot, 0, +1) - v0 / tau(0));
    return std::max<LD>(0, tau(1) * m1 * in / (m1 * (m2 - m3) - m2 * m2 + m3 * m3));
  };
  auto h = [](LD p) { return p <= 0 || p >= 1 ? 0 : -p * std::log2(p) - (1 - p) * std::log2(1 - p); };
  const LD sx0 = s0(s.n_x), sx1 = s1(s.n_x, sx0), sz1 = s1(s.n_z, s0(s.n_z));
  const LD mz = s.m_Z();
  const LD v = std::max<LD>(0, tau(1) * (dev(s.m_z, mz, 1, +1) - dev(s.m_z, mz, 2, -1)) / (m2 - m3));
  const LD b = v / sz1;
  const LD g = std::sqrt((sz1 + sx1) * (1 - b) * b / (sz1 * sx1 * std::log(2.0L)) *
                         std::log2((sz1 + sx1) / (sz1 * sx1 * (1 - b) * b) * 441 / ((LD)d.eps_sec * d.eps_sec)));
  const LD phi = std::min<LD>(0.5, b + g);
  const LD nx = s.n_X();
  return sx0 + sx1 * (1 - h(phi)) - d.f_ec * nx * h(s.m_X() / nx) - std::log2(2 / (LD)d.eps_cor) -
         6 * std::log2(22 / (LD)d.eps_pa);
}

DecoyParams no_fluct() {
  DecoyParams d;
  d.fluctuations = false;
  return d;
}

}  // namespace

TEST_SUITE("keyrate") {
  TEST_CASE("decoy parameter validation") {
    DecoyParams d;
    CHECK_NOTHROW(d.validate());
    d.mu = {0.3, 0.2, 0.15};
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    d = {};
    d.mu = {0.5, 0.1, 0.1};
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    d = {};
    d.p = {0.5, 0.2, 0.2};
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    d = {};
    d.qx = 1;
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  }

  TEST_CASE("expected statistics") {
    DecoyParams d;
    d.dark_count = 0;
    const ObservedStats z = expected_stats(0, d);
    CHECK(z.n_X() == 0);
    CHECK(z.n_Z() == 0);
    CHECK(z.m_X() == 0);

    d = {};
    const ObservedStats a = expected_stats(0.2, d, 1e9), b = expected_stats(0.2, d, 3e9);
    for (int k = 0; k < 3; ++k) {
      CHECK(b.n_x[k] == doctest::Approx(3 * a.n_x[k]));
      CHECK(b.m_z[k] == doctest::Approx(3 * a.m_z[k]));
      CHECK(a.m_x[k] <= a.n_x[k]);
    }
    // Basis sifting: X/Z count ratio is qx^2 / (1-qx)^2.
    CHECK(a.n_x[0] / a.n_z[0] == doctest::Approx(81.0));

    const ObservedStats dark = expected_stats(1e-9, d);
    d.dark_count = 1e-3;
    const ObservedStats noisy = expected_stats(1e-12, d);
    CHECK(noisy.m_X() / noisy.n_X() == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(dark.m_X() / dark.n_X() < 0.5);
    CHECK_THROWS(expected_stats(1.5, d));
  }

  TEST_CASE("tau_n") {
    DecoyParams d;
    double sum = 0;
    for (int n = 0; n < 40; ++n) sum += tau_n(d, n);
    CHECK(sum == doctest::Approx(1.0));
    const double t1 = 0.7 * 0.5 * std::exp(-0.5) + 0.2 * 0.1 * std::exp(-0.1) + 0.1 * 0.0002 * std::exp(-0.0002);
    CHECK(tau_n(d, 1) == doctest::Approx(t1));
  }

  TEST_CASE("vacuum events") {
    // Dark counts only, vacuum decoy, no fluctuations: the bound is exact.
    DecoyParams d = no_fluct();
    d.mu = {0.5, 0.1, 0};
    const ObservedStats s = expected_stats(0, d);
    const double vacuum_x = d.n_pulses * d.qx * d.qx * tau_n(d, 0) * 2 * d.dark_count;
    CHECK(vacuum_events(s, d) == doctest::Approx(vacuum_x).epsilon(1e-9));

    // Vacuum decoy reduces to tau0 * n^-_{X,mu3}.
    DecoyParams f;
    f.mu = {0.5, 0.1, 0};
    const ObservedStats t = expected_stats(0.3, f);
    const double del = std::sqrt(t.n_X() / 2 * std::log(21 / f.eps_sec));
    CHECK(vacuum_events(t, f) == doctest::Approx(std::max(0.0, tau_n(f, 0) / f.p[2] * (t.n_x[2] - del))));

    // Wider fluctuation (smaller eps_sec) can only lower the bound.
    DecoyParams g;
    g.mu = {0.6, 0.2, 0.05};
    g.n_pulses = 1e13;
    g.dark_count = 1e-5;
    // Weak signal so the dark-count vacuum term dominates the estimate.
    const ObservedStats u = expected_stats(1e-3, g);
    DecoyParams exact = g;
    exact.fluctuations = false;
    double prev = vacuum_events(u, exact);
    CHECK(prev > 0);
    for (double eps : {1e-3, 1e-6, 1e-10, 1e-20, 1e-40}) {
      g.eps_sec = eps;
      const double v = vacuum_events(u, g);
      CHECK(v <= prev);
      prev = v;
    }
  }

  TEST_CASE("single-photon events") {
    // Lossless, noiseless detector: true single-photon X count is tau1 N qx^2.
    DecoyParams d = no_fluct();
    d.detector_efficiency = 1;
    d.dark_count = 0;
    const ObservedStats s = expected_stats(1, d);
    const double truth = tau_n(d, 1) * d.n_pulses * d.qx * d.qx;
    const double s1 = single_photon_events(s, d, vacuum_events(s, d));
    CHECK(s1 <= truth * (1 + 1e-12));
    CHECK(s1 >= 0.95 * truth);
    const double s0 = vacuum_events(s, d);
    CHECK(s0 + s1 <= s.n_X());

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 1000; ++i) {
      const double m3 = u(rng) * 0.1, m2 = m3 + 0.01 + u(rng) * 0.3, m1 = m2 + m3 + 0.01 + u(rng);
      CHECK(m1 * (m2 - m3) - m2 * m2 + m3 * m3 > 0);
    }

    ObservedStats bad = s;
    bad.n_x[1] = 0;
    CHECK(single_photon_events(bad, d, 0) == 0);
    DecoyParams f;
    CHECK(single_photon_events(expected_stats(1e-6, f), f, 0) == 0);
  }

  TEST_CASE("gamma and phase error") {
    CHECK(gamma_u(1e-10, 0.03, 1e8, 2e8) == doctest::Approx(0.000184978610671103939).epsilon(1e-12));
    CHECK(gamma_u(1e-10, 0, 1e8, 2e8) == 0);

    DecoyParams d = no_fluct();
    d.misalignment = 0;
    d.dark_count = 0;
    const ObservedStats s = expected_stats(0.2, d);
    const double sz1 = single_photon_events(s, d, vacuum_events(s, d, Basis::Z), Basis::Z);
    const double sx1 = single_photon_events(s, d, vacuum_events(s, d));
    CHECK(phase_error_rate(s, d, sz1, sx1) == 0);

    DecoyParams f;
    ObservedStats t = expected_stats(0.2, f);
    const double tz1 = single_photon_events(t, f, vacuum_events(t, f, Basis::Z), Basis::Z);
    const double tx1 = single_photon_events(t, f, vacuum_events(t, f));
    double prev = 0;
    for (double scale = 0.5; scale < 8; scale *= 1.25) {
      ObservedStats w = t;
      for (auto& m : w.m_z) m *= scale;
      const double phi = phase_error_rate(w, f, tz1, tx1);
      CHECK(phi >= prev);
      prev = phi;
    }
    t.m_z[1] = 1e12;
    CHECK(phase_error_rate(t, f, tz1, tx1) == 0.5);
    CHECK(phase_error_rate(t, f, 0, tx1) == 0.5);
  }

  TEST_CASE("key length") {
    CHECK(binary_entropy(0.5) == 1);
    CHECK(binary_entropy(0) == 0);
    CHECK(binary_entropy(1) == 0);

    DecoyParams d;
    for (double eta : {0.05, 0.19, 0.5}) {
      const ObservedStats s = expected_stats(eta, d);
      const KeyLength k = key_length(s, d);
      CHECK(k.raw == doctest::Approx(static_cast<double>(oracle_key_length(s, d))).epsilon(1e-9));
      CHECK(k.s_x0 + k.s_x1 <= s.n_X());
    }

    const KeyLength lossy = key_length(expected_stats(1e-7, d), d);
    CHECK(lossy.raw < 0);
    CHECK(lossy.bits == 0);
    CHECK(lossy.abort);

    // Golden: 0.19 transmittance with default decoy settings.
    const KeyLength g = key_length(expected_stats(0.19, d), d);
    CHECK(g.bits == 118451584);
    CHECK(g.phi == doctest::Approx(0.041952692412315667).epsilon(1e-9));
  }

  TEST_CASE("key length monotone in dark counts and misalignment") {
    DecoyParams d;
    double prev = 1e300;
    for (double dark = 1e-9; dark < 1e-4; dark *= 2) {
      d.dark_count = dark;
      const double l = key_length(expected_stats(0.1, d), d).bits;
      CHECK(l <= prev);
      prev = l;
    }
    d = {};
    prev = 1e300;
    for (double e = 0; e < 0.2; e += 0.005) {
      d.misalignment = e;
      const double l = key_length(expected_stats(0.1, d), d).bits;
      CHECK(l <= prev);
      prev = l;
    }
  }

  TEST_CASE("bounds never exceed observed events") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 300; ++i) {
      DecoyParams d;
      d.mu[2] = u(rng) * 0.05;
      d.mu[1] = d.mu[2] + 0.02 + u(rng) * 0.3;
      d.mu[0] = d.mu[1] + d.mu[2] + 0.05 + u(rng) * 0.6;
      d.dark_count = std::pow(10, -9 + 4 * u(rng));
      d.misalignment = 0.05 * u(rng);
      d.n_pulses = std::pow(10, 6 + 6 * u(rng));
      d.fluctuations = u(rng) < 0.7;
      const ObservedStats s = expected_stats(std::pow(10, -4 * u(rng)), d);
      const KeyLength k = key_length(s, d);
      CHECK(k.s_x0 + k.s_x1 <= s.n_X() * (1 + 1e-12));
      CHECK(k.bits >= 0);
      CHECK(k.phi >= 0);
      CHECK(k.phi <= 0.5);
    }
  }

  TEST_CASE("LEO pipeline") {
    const Bb84Point p = evaluate_bb84({300e3, 0}, OpticsParams{}, DecoyParams{});
    CHECK(p.key.bits > 0);
    CHECK(p.key.bits == 118997132);
    CHECK(p.key_rate == doctest::Approx(p.key.bits * 1e9 / 1e10));
  }

  TEST_CASE("consensus rate") {
    const std::vector<double> same(6, 1.2e7);
    for (int N : {3, 5, 7, 12}) {
      const double cr = consensus_rate(same, N, 67);
      CHECK(cr * (N * N - N) * 3 * 67 == doctest::Approx(1.2e7).epsilon(1e-14));
    }
    const std::vector<double> one_bad{1.2e7, 1.2e7, 3e5, 1.2e7};
    CHECK(consensus_rate(one_bad, 5, 100) == doctest::Approx(3e5 / 300 / 20));
    CHECK(consensus_rate(same, 4, 10) / consensus_rate(same, 8, 10) == doctest::Approx(56.0 / 12.0));
    CHECK_THROWS(consensus_rate(std::vector<double>{}, 4, 10));
    CHECK_THROWS(consensus_rate(same, 2, 10));
    CHECK_THROWS(consensus_rate(same, 4, 0));
  }

  TEST_CASE("homodyne outcome tables") {
    CvModelParams cv;
    cv.eta = 0.4;
    cv.xi = 0.05;
    for (int x = 0; x < 4; ++x) {
      for (Quadrature y : {Quadrature::q, Quadrature::p}) {
        const auto row = cv_outcome_probabilities(Detection::homodyne, cv, x, y);
        REQUIRE(row.size() == 3);
        CHECK(row[0] + row[1] + row[2] == doctest::Approx(1.0).epsilon(1e-12));
        // Trapezoid over the printed density.
        const double phase = std::numbers::pi / 4 + x * std::numbers::pi / 2;
        const double mean = std::sqrt(2 * cv.eta) * cv.alpha * (y == Quadrature::q ? std::cos(phase) : std::sin(phase));
        const double var = cv.eta * cv.xi + 1;
        auto dens = [&](double t) { return std::exp(-(t - mean) * (t - mean) / var) / std::sqrt(std::numbers::pi * var); };
        const int n = 200000;
        const double lo = cv.delta_c, hi = 15;
        double acc = 0.5 * (dens(lo) + dens(hi));
        for (int i = 1; i < n; ++i) acc += dens(lo + (hi - lo) * i / n);
        CHECK(row[0] == doctest::Approx(acc * (hi - lo) / n).epsilon(1e-8));
      }
    }
    cv.delta_c = 0;
    const auto row = cv_outcome_probabilities(Detection::homodyne, cv, 2);
    CHECK(row[2] == 0);
    CHECK(row[0] + row[1] == doctest::Approx(1.0));
  }

  TEST_CASE("heterodyne outcome tables") {
    CvModelParams cv;
    cv.eta = 0.3;
    cv.xi = 0.08;
    cv.delta_a = 0;
    cv.delta_p = 0;
    // With no post-selection each outcome is a quadrant of an isotropic
    // Gaussian, so it factorizes into two erfc terms.
    const double v = 1 + cv.eta * cv.xi / 2;
    for (int x = 0; x < 4; ++x) {
      const auto row = cv_outcome_probabilities(Detection::heterodyne, cv, x);
      REQUIRE(row.size() == 5);
      double sum = 0;
      const double phase = std::numbers::pi / 4 + x * std::numbers::pi / 2;
      const double cx = std::sqrt(cv.eta) * cv.alpha * std::cos(phase), cy = std::sqrt(cv.eta) * cv.alpha * std::sin(phase);
      const double px = 0.5 * std::erfc(-cx / std::sqrt(v)), py = 0.5 * std::erfc(-cy / std::sqrt(v));
      const double want[4] = {px * py, (1 - px) * py, (1 - px) * (1 - py), px * (1 - py)};
      for (int j = 0; j < 4; ++j) {
        CHECK(row[j] == doctest::Approx(want[j]).epsilon(1e-8));
        sum += row[j];
      }
      CHECK(std::abs(sum - 1) < 1e-6);
    }

    CvModelParams d;
    d.eta = 0.5;
    d.xi = 0.04;
    const CvTable t = cv_table(Detection::heterodyne, d);
    for (int x = 0; x < 4; ++x) {
      double sum = 0;
      for (double p : t.rows[x]) sum += p;
      CHECK(std::abs(sum - 1) < 1e-6);
      for (int j = 0; j < 4; ++j) {
        CHECK(t.rows[(x + 1) % 4][(j + 1) % 4] == doctest::Approx(t.rows[x][j]).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("error-correction terms") {
    CvModelParams cv;
    cv.eta = 0.2;
    cv.xi = total_excess_noise({0.01, 0.01}, 0.2, Detection::homodyne);
    CvErrorTerms e = cv_error_correction_terms(cv_table(Detection::homodyne, cv), cv);
    CHECK(e.p_pass == doctest::Approx(0.59365963812307165).epsilon(1e-9));
    CHECK(e.delta_ec == doctest::Approx(0.82080703454929682).epsilon(1e-9));
    cv.xi = total_excess_noise({0.01, 0.01}, 0.2, Detection::heterodyne);
    e = cv_error_correction_terms(cv_table(Detection::heterodyne, cv), cv);
    CHECK(e.p_pass == doctest::Approx(0.78540840491333352).epsilon(1e-9));
    CHECK(e.delta_ec == doctest::Approx(1.8801017055529956).epsilon(1e-9));

    // Printed binary form of H(Z|X).
    const CvTable hom = cv_table(Detection::homodyne, cv);
    double hzx = 0;
    for (int x = 0; x < 4; ++x) hzx += 0.25 * binary_entropy(hom.rows[x][0] / (hom.rows[x][0] + hom.rows[x][1]));
    CHECK(cv_error_correction_terms(hom, cv).h_z_given_x == doctest::Approx(hzx));

    cv.beta = 1;
    e = cv_error_correction_terms(hom, cv);
    CHECK(e.delta_ec == e.h_z_given_x);

    CvModelParams clean;
    clean.alpha = 10;
    clean.delta_a = clean.delta_c = clean.delta_p = 0;
    for (Detection m : {Detection::homodyne, Detection::heterodyne}) {
      const CvErrorTerms c = cv_error_correction_terms(cv_table(m, clean), clean);
      CHECK(c.h_z_given_x < 1e-6);
      CHECK(c.p_pass == doctest::Approx(1.0));
    }
  }

  TEST_CASE("cv validation") {
    CvModelParams cv;
    cv.alpha = 0;
    CHECK_THROWS_AS(cv.validate(), std::invalid_argument);
    cv = {};
    cv.delta_c = -1;
    CHECK_THROWS_AS(cv.validate(), std::invalid_argument);
    cv = {};
    CHECK_THROWS(cv_outcome_probabilities(Detection::homodyne, cv, 4));
  }
}
