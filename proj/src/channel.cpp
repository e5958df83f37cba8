#include "cqba/channel.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cqba {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// e^{-x} I_nu(x) for x >= 0, without overflow.
double scaled_bessel_i(int nu, double x) {
  if (x < 600) return std::exp(-x) * std::cyl_bessel_i(static_cast<double>(nu), x);
  // Hankel asymptotic expansion, plenty of terms for x >= 600.
  const double mu = 4.0 * nu * nu;
  double term = 1, sum = 1;
  for (int k = 1; k < 8; ++k) {
    term *= -(mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * x);
    sum += term;
  }
  return sum / std::sqrt(2 * std::numbers::pi * x);
}

// Altitudes where the atmospheric profiles change character.
std::vector<double> altitude_breaks(const LinkGeometry& g) {
  std::vector<double> out;
  for (double h : {100.0, 500.0, 2e3, 5e3, 1e4, 2e4, 4e4, 8e4, 1.6e5}) {
    if (h < g.altitude) out.push_back(g.distance_to_altitude(h));
  }
  return out;
}

}  // namespace

void LinkGeometry::validate() const {
  if (!(altitude > 0)) throw std::invalid_argument("altitude must be positive");
  if (!(zenith >= 0 && zenith < std::numbers::pi / 2)) throw std::invalid_argument("zenith must lie in [0, pi/2)");
  if (!(earth_radius > 0)) throw std::invalid_argument("earth radius must be positive");
}

double LinkGeometry::path_length() const { return distance_to_altitude(altitude); }

double LinkGeometry::altitude_at(double y) const {
  const double R = earth_radius;
  return std::sqrt(R * R + y * y + 2 * R * y * std::cos(zenith)) - R;
}

double LinkGeometry::distance_to_altitude(double h) const {
  const double R = earth_radius, c = std::cos(zenith);
  return std::sqrt(R * R * c * c + 2 * R * h + h * h) - R * c;
}

double OpticsParams::wavenumber() const { return 2 * std::numbers::pi / wavelength; }

double OpticsParams::extinction_for_wavelength(double wavelength) {
  if (std::abs(wavelength - 1550e-9) < 1e-12) return 4e-7;
  if (std::abs(wavelength - 800e-9) < 1e-12) return 5e-6;
  throw std::invalid_argument("no default extinction coefficient for this wavelength; set it explicitly");
}

double integrate(const std::function<double(double)>& f, double a, double b, const std::vector<double>& breaks,
                 double tol) {
  // Breakpoints within rounding distance of another point would leave a
  // sliver whose relative error target is unreachable.
  const double eps = 1e-9 * (b - a);
  std::vector<double> inner;
  for (double p : breaks) {
    if (p > a + eps && p < b - eps) inner.push_back(p);
  }
  std::sort(inner.begin(), inner.end());
  std::vector<double> pts{a};
  for (double p : inner) {
    if (p > pts.back() + eps) pts.push_back(p);
  }
  pts.push_back(b);
  double total = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, pts[i], pts[i + 1], 30, tol);
  }
  return total;
}

double extinction_transmittance(const LinkGeometry& geom, const OpticsParams& optics, double tol) {
  geom.validate();
  if (optics.sea_level_extinction == 0) return 1.0;
  const double L = geom.path_length();
  const auto alpha = [&](double y) {
    return optics.sea_level_extinction * std::exp(-geom.altitude_at(y) / optics.extinction_scale);
  };
  return std::exp(-integrate(alpha, 0, L, altitude_breaks(geom), tol));
}

double cn2(double h, const OpticsParams& o) {
  const double v = o.wind_speed;
  return o.turbulence_scale * (8.1481e-56 * v * v * std::pow(h, 10) * std::exp(-h / 1000) +
                               2.7e-16 * std::exp(-h / 1500) + o.ground_turbulence * std::exp(-h / 100));
}

double turbulence_radius(const LinkGeometry& geom, const OpticsParams& optics, double tol) {
  geom.validate();
  const double L = geom.path_length(), k = optics.wavenumber();
  // y runs from the ground station, so the distance from the satellite is
  // z = L - y and the weight ((L-z)/L)^(5/3) becomes (y/L)^(5/3).
  const auto f = [&](double y) { return cn2(geom.altitude_at(y), optics) * std::pow(y / L, 5.0 / 3.0); };
  const double integral = integrate(f, 0, L, altitude_breaks(geom), tol);
  if (!(integral > 0)) return kInf;
  return std::pow(0.42 * k * k * integral, -3.0 / 5.0);
}

double short_term_waist(double z, double r_s, const OpticsParams& o) {
  const double k = o.wavenumber(), W0 = o.initial_waist;
  const double Z0 = k * W0 * W0 / 2;
  double w2 = W0 * W0 * (1 + z * z / (Z0 * Z0));
  if (std::isfinite(r_s)) {
    const double bracket = 1 - 0.26 * std::cbrt(r_s / W0);
    w2 += 35.28 * z * z / (k * k * r_s * r_s) * bracket * bracket;
  }
  return std::sqrt(w2);
}

double turbulence_waist(const LinkGeometry& geom, const OpticsParams& optics, double tol) {
  return short_term_waist(geom.path_length(), turbulence_radius(geom, optics, tol), optics);
}

double coupling_efficiency_exact(double r, double W, double a, double tol) {
  const double W2 = W * W;
  // (4/W^2) int_0^a rho exp(-2(r^2+rho^2)/W^2) I0(4 r rho / W^2) drho, with
  // the exponentials folded into a scaled Bessel function.
  const auto f = [&](double rho) {
    const double x = 4 * r * rho / W2;
    return rho * std::exp(-2 * (r - rho) * (r - rho) / W2) * scaled_bessel_i(0, x);
  };
  std::vector<double> breaks;
  if (r > 0 && r < a) breaks.push_back(r);
  for (double s : {-2.0, -1.0, 1.0, 2.0}) breaks.push_back(r + s * W / 2);
  return 4 / W2 * integrate(f, 0, a, breaks, tol);
}

CouplingShape coupling_shape(double W, double a) {
  const double u = 4 * a * a / (W * W);
  const double e0 = scaled_bessel_i(0, u), e1 = scaled_bessel_i(1, u);
  const double eta0 = -std::expm1(-2 * a * a / (W * W));
  const double T0sq = eta0;
  const double log_term = std::log(2 * T0sq / (1 - e0));
  const double lambda = 2 * u * e1 / (1 - e0) / log_term;
  const double R = a * std::pow(log_term, -1 / lambda);
  return {eta0, lambda, R};
}

double coupling_efficiency(double r, double W, double a) {
  const CouplingShape s = coupling_shape(W, a);
  if (r == 0) return s.eta0;
  return s.eta0 * std::exp(-std::pow(r / s.R, s.lambda));
}

double mean_coupling(double sigma, double W, double a, double tol) {
  if (sigma <= 0) return coupling_efficiency(0, W, a);
  const CouplingShape s = coupling_shape(W, a);
  const auto f = [&](double r) {
    return s.eta0 * std::exp(-std::pow(r / s.R, s.lambda)) * r / (sigma * sigma) * std::exp(-r * r / (2 * sigma * sigma));
  };
  std::vector<double> breaks{sigma, 2 * sigma, 4 * sigma, s.R, 2 * s.R};
  return integrate(f, 0, 40 * sigma, breaks, tol);
}

LinkBudget link_budget(const LinkGeometry& geom, const OpticsParams& optics, double tol) {
  geom.validate();
  LinkBudget b{};
  b.path_length = geom.path_length();
  b.eta_ext = extinction_transmittance(geom, optics, tol);
  b.r_s = turbulence_radius(geom, optics, tol);
  b.W_ST = short_term_waist(b.path_length, b.r_s, optics);
  b.sigma_r = std::hypot(b.path_length * optics.pointing_error, optics.wander_std);
  b.eta0 = coupling_shape(b.W_ST, optics.aperture).eta0;
  b.eta_mean = b.eta_ext * mean_coupling(b.sigma_r, b.W_ST, optics.aperture, tol);
  return b;
}

double mean_transmittance(const LinkGeometry& geom, const OpticsParams& optics, double tol) {
  return link_budget(geom, optics, tol).eta_mean;
}

double total_excess_noise(const NoiseParams& noise, double eta, Detection det) {
  if (!(eta > 0)) throw std::invalid_argument("transmittance must be positive");
  const double det_noise = det == Detection::heterodyne ? 2 * noise.detector_excess : noise.detector_excess;
  return noise.channel_excess + det_noise / eta;
}

}  // namespace cqba
