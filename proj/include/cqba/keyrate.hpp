#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "cqba/channel.hpp"

namespace cqba {

/// Three-intensity decoy BB84 with asymmetric basis choice.
struct DecoyParams {
  std::array<double, 3> mu{0.5, 0.1, 0.0002};
  std::array<double, 3> p{0.7, 0.2, 0.1};
  /// Probability of the X basis on each side.
  double qx = 0.9;
  double n_pulses = 1e10;
  double eps_sec = 1e-10;
  double eps_cor = 1e-15;
  double eps_pa = 1e-10;
  double f_ec = 1.1;
  double detector_efficiency = 0.70;
  double dark_count = 1e-8;
  double misalignment = 0.02;
  double rep_rate = 1e9;
  /// Off disables the finite-size deviation terms (and gamma).
  bool fluctuations = true;

  /// Throws std::invalid_argument on out-of-range values or mu1 <= mu2 + mu3,
  /// mu2 <= mu3.
  void validate() const;
};

struct ObservedStats {
  std::array<double, 3> n_x{}, n_z{}, m_x{}, m_z{};

  double n_X() const { return n_x[0] + n_x[1] + n_x[2]; }
  double n_Z() const { return n_z[0] + n_z[1] + n_z[2]; }
  double m_X() const { return m_x[0] + m_x[1] + m_x[2]; }
  double m_Z() const { return m_z[0] + m_z[1] + m_z[2]; }
};

enum class Basis { X, Z };

/// Expected counts for channel transmittance eta (detector efficiency
/// applied on top).
ObservedStats expected_stats(double eta, const DecoyParams& d);
ObservedStats expected_stats(double eta, const DecoyParams& d, double n_pulses);

/// Probability that a pulse carries n photons, averaged over intensities.
double tau_n(const DecoyParams& d, int n);

double vacuum_events(const ObservedStats& s, const DecoyParams& d, Basis b = Basis::X);
double single_photon_events(const ObservedStats& s, const DecoyParams& d, double s0, Basis b = Basis::X);
/// Upper bound on single-photon errors in Z.
double single_photon_errors(const ObservedStats& s, const DecoyParams& d);

/// sqrt((c+d)(1-b)b / (c d ln 2) * log2((c+d)/(c d (1-b) b) * 21^2/a^2)).
double gamma_u(double a, double b, double c, double d);

/// v_Z1/s_Z1 + gamma_u(eps_sec, v_Z1/s_Z1, s_Z1, s_X1), clamped to [0, 0.5].
double phase_error_rate(const ObservedStats& s, const DecoyParams& d, double s_z1, double s_x1);

double binary_entropy(double p);

struct KeyLength {
  double s_x0 = 0, s_x1 = 0, s_z0 = 0, s_z1 = 0, v_z1 = 0;
  double phi = 0.5;
  double lambda_ec = 0;
  double raw = 0;
  /// max(raw, 0), rounded down.
  double bits = 0;
  bool abort = true;
};

KeyLength key_length(const ObservedStats& s, const DecoyParams& d);

/// l_key * rep_rate / n_pulses.
double bb84_key_rate(const KeyLength& k, const DecoyParams& d);

struct Bb84Point {
  LinkBudget link;
  ObservedStats stats;
  KeyLength key;
  double key_rate = 0;
};

Bb84Point evaluate_bb84(const LinkGeometry& geom, const OpticsParams& optics, const DecoyParams& d);

/// min_i KR_i / (3n) / (N^2 - N). Throws std::invalid_argument for an empty
/// list, N < 3 or n = 0.
double consensus_rate(std::span<const double> key_rates, int N, std::size_t n);

struct CvModelParams {
  double alpha = 0.72;
  double delta_c = 0.42;
  double delta_a = 0.52;
  double delta_p = 0;
  double eta = 1;
  double xi = 0;
  double beta = 0.95;
  double rep_rate = 1e9;
  std::array<double, 4> p_x{0.25, 0.25, 0.25, 0.25};

  void validate() const;
};

enum class Quadrature { q, p };

/// Heterodyne: P(0..3|x) then the discarded mass. Homodyne: P_y(0|x),
/// P_y(1|x), P_y(discard|x) for quadrature y. tol is an absolute error
/// target on each heterodyne probability.
std::vector<double> cv_outcome_probabilities(Detection mode, const CvModelParams& cv, int x,
                                             Quadrature y = Quadrature::q, double tol = 1e-11);

struct CvTable {
  Detection mode = Detection::homodyne;
  Quadrature quadrature = Quadrature::q;
  /// rows[x] as returned by cv_outcome_probabilities; the last column is the
  /// discarded mass.
  std::vector<std::vector<double>> rows;
};

CvTable cv_table(Detection mode, const CvModelParams& cv, Quadrature y = Quadrature::q);

struct CvErrorTerms {
  double p_pass = 0;
  double h_z = 0;
  double h_z_given_x = 0;
  double delta_ec = 0;
};

/// Entropies are over the kept outcomes, renormalized per row. For two kept
/// outcomes H(Z|X) is sum_x p_x h(P(0|x) / (P(0|x) + P(1|x))).
CvErrorTerms cv_error_correction_terms(const CvTable& t, const CvModelParams& cv);

}  // namespace cqba
