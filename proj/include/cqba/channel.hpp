#pragma once

#include <functional>
#include <vector>

namespace cqba {

constexpr double kEarthRadius = 6.371e6;

struct LinkGeometry {
  double altitude = 300e3;  // m
  double zenith = 0;        // rad
  double earth_radius = kEarthRadius;

  /// Throws std::invalid_argument unless altitude > 0 and zenith in [0, pi/2).
  void validate() const;
  /// Slant distance from the ground station to the satellite.
  double path_length() const;
  /// Altitude above ground at distance y along the slant path from the ground.
  double altitude_at(double y) const;
  /// Inverse of altitude_at.
  double distance_to_altitude(double h) const;
};

struct OpticsParams {
  double wavelength = 1550e-9;       // m
  double initial_waist = 0.15;       // W0, m
  double aperture = 0.75;            // a, m
  double pointing_error = 1e-6;      // theta_p, rad
  double wander_std = 1.0;           // sigma_TB, m
  double sea_level_extinction = 4e-7;  // alpha_0, 1/m
  double extinction_scale = 6600;    // m
  double wind_speed = 21;            // m/s
  double ground_turbulence = 9.6e-14;  // C_0, m^(-2/3)
  /// Multiplies the whole Cn^2 profile.
  double turbulence_scale = 1.0;

  double wavenumber() const;
  /// Sea-level extinction for the 1550 nm and 800 nm bands; throws
  /// std::invalid_argument for other wavelengths.
  static double extinction_for_wavelength(double wavelength);
};

enum class Detection { homodyne, heterodyne };

struct NoiseParams {
  double channel_excess = 0.01;   // xi_ch, shot-noise units
  double detector_excess = 0.01;  // xi_det (homodyne), shot-noise units
};

/// Relative tolerance used by every path and expectation integral.
constexpr double kQuadTolerance = 1e-8;

/// Adaptive Gauss-Kronrod over [a, b] split at the given interior points.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const std::vector<double>& breaks = {}, double tol = kQuadTolerance);

double extinction_transmittance(const LinkGeometry& geom, const OpticsParams& optics, double tol = kQuadTolerance);

/// Hufnagel-Valley refractive-index structure parameter at altitude h (m).
double cn2(double h, const OpticsParams& optics);

/// [0.42 k^2 int_0^L Cn^2 ((L-z)/L)^(5/3) dz]^(-3/5), z measured from the
/// transmitting satellite. Returns +infinity without turbulence.
double turbulence_radius(const LinkGeometry& geom, const OpticsParams& optics, double tol = kQuadTolerance);

/// Short-term waist after propagating z metres with turbulence radius r_s.
double short_term_waist(double z, double r_s, const OpticsParams& optics);
/// Waist at the receiver.
double turbulence_waist(const LinkGeometry& geom, const OpticsParams& optics, double tol = kQuadTolerance);

/// Fraction of a Gaussian beam of waist W, displaced by r, entering a
/// circular aperture of radius a, by direct quadrature.
double coupling_efficiency_exact(double r, double W, double a, double tol = kQuadTolerance);

struct CouplingShape {
  double eta0;
  double lambda;
  double R;
};
CouplingShape coupling_shape(double W, double a);
/// eta0 exp[-(r/R)^lambda].
double coupling_efficiency(double r, double W, double a);

/// Expectation of coupling_efficiency under a Rayleigh(sigma) displacement.
double mean_coupling(double sigma, double W, double a, double tol = kQuadTolerance);

struct LinkBudget {
  double path_length;
  double eta_ext;
  double r_s;
  double W_ST;
  double sigma_r;
  double eta0;
  double eta_mean;
};

LinkBudget link_budget(const LinkGeometry& geom, const OpticsParams& optics, double tol = kQuadTolerance);
double mean_transmittance(const LinkGeometry& geom, const OpticsParams& optics, double tol = kQuadTolerance);

/// xi_ch + xi_det / eta, with detector noise doubled for heterodyne detection.
double total_excess_noise(const NoiseParams& noise, double eta, Detection det = Detection::homodyne);

}  // namespace cqba
