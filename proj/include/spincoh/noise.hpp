#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <variant>

#include "spincoh/constants.hpp"
#include "spincoh/quadrature.hpp"
#include "spincoh/rng.hpp"
#include "spincoh/spin1.hpp"

namespace spincoh {

// Width convention: a Gaussian field distribution is described by its 1/e
// half-width w, p(B) = exp(-((B - mean)/w)^2) / (sqrt(pi) w), so the standard
// deviation is w / sqrt(2). Names say which one a number is.
inline double gaussian_width_from_std(double stddev) { return std::numbers::sqrt2 * stddev; }
inline double gaussian_std_from_width(double width) { return width / std::numbers::sqrt2; }

struct GaussianFieldDist {
  double mean = 0.0;   // T
  double width = 0.0;  // T, 1/e half-width

  void validate() const {
    if (!(width >= 0) || !std::isfinite(mean)) throw std::invalid_argument("Gaussian field width must be >= 0");
  }
  double stddev() const { return gaussian_std_from_width(width); }
  double pdf(double b) const {
    const double u = (b - mean) / width;
    return std::exp(-u * u) / (std::sqrt(std::numbers::pi) * width);
  }
  double cdf(double b) const { return 0.5 * (1.0 + std::erf((b - mean) / width)); }
};

struct UniformFieldDist {
  double lo = 0.0;  // T
  double hi = 0.0;  // T

  void validate() const {
    if (!(lo <= hi)) throw std::invalid_argument("uniform field bounds must satisfy lo <= hi");
  }
  double mean() const { return 0.5 * (lo + hi); }
  double pdf(double b) const { return (b >= lo && b <= hi && hi > lo) ? 1.0 / (hi - lo) : 0.0; }
  double cdf(double b) const {
    if (b <= lo) return 0.0;
    if (b >= hi) return 1.0;
    return (b - lo) / (hi - lo);
  }
};

/// Thermal distribution of the vector-light-shift deviation
/// dB = B_sigma0 - B_sigma(U) = B_sigma0 * U / U0 for a harmonically trapped
/// atom. The potential energy U follows Gamma(3/2, kB T), so |dB| follows
/// Gamma(3/2, scale) with scale = kB T |B_sigma0| / U0.
struct ThermalShiftDist {
  double trapDepth = 0.0;    // U0, J
  double temperature = 0.0;  // K
  double bSigma0 = 0.0;      // T, signed field at the trap bottom

  void validate() const {
    if (!(trapDepth > 0)) throw std::invalid_argument("thermal shift needs a positive trap depth");
    if (!(temperature > 0)) throw std::invalid_argument("thermal shift needs a positive temperature");
    if (!std::isfinite(bSigma0)) throw std::invalid_argument("B_sigma0 must be finite");
  }
  /// kB T < U0; outside it the harmonic picture is not trustworthy.
  bool harmonic_regime(const PhysicalConstants& k = kConstants) const {
    return k.kB * temperature < trapDepth;
  }
  double kT(const PhysicalConstants& k = kConstants) const { return k.kB * temperature; }
  /// Tesla per unit of U / kB T.
  double scale(const PhysicalConstants& k = kConstants) const { return kT(k) * std::abs(bSigma0) / trapDepth; }
  double mean_shift(const PhysicalConstants& k = kConstants) const { return 1.5 * scale(k); }
  double std_shift(const PhysicalConstants& k = kConstants) const { return std::sqrt(1.5) * scale(k); }
  double mode_shift(const PhysicalConstants& k = kConstants) const { return 0.5 * scale(k); }
  /// Mean z field contributed by the light shift, B_sigma0 - <dB> (signed).
  double mean_field(const PhysicalConstants& k = kConstants) const {
    return bSigma0 * (1.0 - 1.5 * kT(k) / trapDepth);
  }
};

/// Probability density of the potential energy of a thermal harmonic
/// oscillator in one or three dimensions (1/J).
inline double pdf_potential(int dim, double energy, double temperature, const PhysicalConstants& k = kConstants) {
  if (!(energy >= 0)) throw std::invalid_argument("potential energy must be >= 0");
  if (!(temperature > 0)) throw std::invalid_argument("temperature must be positive");
  const double kt = k.kB * temperature;
  switch (dim) {
    case 1:
      return std::exp(-energy / kt) / (std::sqrt(std::numbers::pi * kt) * std::sqrt(energy));
    case 3:
      return 2.0 / (std::sqrt(std::numbers::pi) * std::pow(kt, 1.5)) * std::sqrt(energy) * std::exp(-energy / kt);
    default:
      throw std::invalid_argument("potential energy distribution is defined for dim 1 or 3");
  }
}

/// Maxwell-Boltzmann density of the total energy of a 3D harmonic oscillator.
inline double pdf_maxwell_boltzmann(double energy, double temperature, const PhysicalConstants& k = kConstants) {
  const double kt = k.kB * temperature;
  return energy * energy * std::exp(-energy / kt) / (2.0 * kt * kt * kt);
}

/// Density of |dB| (1/T) for dB >= 0.
inline double pdf_delta_bsigma(double dB, const ThermalShiftDist& dist, const PhysicalConstants& k = kConstants) {
  if (!(dB >= 0)) throw std::invalid_argument("light-shift deviation must be >= 0");
  dist.validate();
  if (dist.bSigma0 == 0.0) throw std::invalid_argument("B_sigma0 = 0 has no continuous deviation density");
  const double ratio = std::abs(dist.bSigma0) / dist.trapDepth;  // T per J
  const double kt = dist.kT(k);
  return 2.0 / (std::sqrt(std::numbers::pi) * std::pow(ratio, 1.5) * std::pow(kt, 1.5)) * std::sqrt(dB) *
         std::exp(-(dB / ratio) / kt);
}

/// CDF of |dB|: the regularized lower incomplete gamma P(3/2, x).
inline double cdf_delta_bsigma(double dB, const ThermalShiftDist& dist, const PhysicalConstants& k = kConstants) {
  if (dB <= 0) return 0.0;
  const double x = dB / dist.scale(k);
  return std::erf(std::sqrt(x)) - 2.0 * std::sqrt(x / std::numbers::pi) * std::exp(-x);
}

/// Static offset plus an optional spread on one field axis.
struct AxisNoise {
  double offset = 0.0;  // T
  std::variant<std::monostate, GaussianFieldDist, UniformFieldDist> spread;

  bool fluctuates() const {
    if (auto g = std::get_if<GaussianFieldDist>(&spread)) return g->width > 0;
    if (auto u = std::get_if<UniformFieldDist>(&spread)) return u->hi > u->lo;
    return false;
  }
  double mean() const {
    if (auto g = std::get_if<GaussianFieldDist>(&spread)) return offset + g->mean;
    if (auto u = std::get_if<UniformFieldDist>(&spread)) return offset + u->mean();
    return offset;
  }
  void validate() const {
    if (!std::isfinite(offset)) throw std::invalid_argument("field offset must be finite");
    if (auto g = std::get_if<GaussianFieldDist>(&spread)) g->validate();
    if (auto u = std::get_if<UniformFieldDist>(&spread)) u->validate();
  }
};

/// Shot-to-shot distribution of the effective field. The thermal light-shift
/// term acts on z only: B_z = z external + B_sigma0 - dB.
struct FieldNoiseModel {
  AxisNoise x, y, z;
  std::optional<ThermalShiftDist> thermal;

  void validate() const {
    x.validate();
    y.validate();
    z.validate();
    if (thermal) thermal->validate();
  }
  bool thermal_fluctuates() const { return thermal && thermal->bSigma0 != 0.0; }
  FieldVector mean_field(const PhysicalConstants& k = kConstants) const {
    return {x.mean(), y.mean(), z.mean() + (thermal ? thermal->mean_field(k) : 0.0)};
  }
  /// Number of axes carrying a continuous distribution.
  int fluctuating_axes() const {
    return int(x.fluctuates()) + int(y.fluctuates()) + int(z.fluctuates() || thermal_fluctuates());
  }
};

namespace detail {
inline double draw_axis(const AxisNoise& a, CounterStream& s) {
  // Always consume one normal and one uniform so the stream layout does not
  // depend on which distributions are present.
  const double n = s.normal();
  const double u = s.uniform();
  if (auto g = std::get_if<GaussianFieldDist>(&a.spread)) return a.offset + g->mean + g->stddev() * n;
  if (auto un = std::get_if<UniformFieldDist>(&a.spread)) return a.offset + un->lo + (un->hi - un->lo) * u;
  return a.offset;
}
}  // namespace detail

/// Light-shift deviation (signed like B_sigma0) from three standard normals:
/// U = kB T (n1^2 + n2^2 + n3^2) / 2 has exactly the Gamma(3/2, kB T) law.
inline double thermal_shift_from_normals(const ThermalShiftDist& t, double n1, double n2, double n3,
                                         const PhysicalConstants& k = kConstants) {
  const double u = t.kT(k) * 0.5 * (n1 * n1 + n2 * n2 + n3 * n3);
  return u * t.bSigma0 / t.trapDepth;
}

/// One field realization; a pure function of (model, seed, sampleIndex).
inline FieldVector sample_field(const FieldNoiseModel& model, std::uint64_t sampleIndex, std::uint64_t seed,
                                const PhysicalConstants& k = kConstants) {
  CounterStream s(seed, sampleIndex, StreamDomain::FieldNoise);
  FieldVector b;
  b.bx = detail::draw_axis(model.x, s);
  b.by = detail::draw_axis(model.y, s);
  b.bz = detail::draw_axis(model.z, s);
  const double n1 = s.normal(), n2 = s.normal(), n3 = s.normal();
  if (model.thermal) b.bz += model.thermal->bSigma0 - thermal_shift_from_normals(*model.thermal, n1, n2, n3, k);
  return b;
}

/// Result of checking that the potential- and kinetic-energy densities
/// convolve to the Maxwell-Boltzmann density of the total energy.
struct MbConvolutionCheck {
  double maxAbsDeviation = 0.0;   // 1/J, sup over the grid
  double peak = 0.0;              // max of p_MB on the grid, 1/J
  double relativeDeviation = 0.0; // maxAbsDeviation / peak, dimensionless
  double gridIntegral = 0.0;      // Simpson integral of p_MB over the grid
  double tailBeyondGrid = 0.0;    // exact p_MB mass beyond the last grid point
};

/// Convolves p3D with itself at each grid energy E_i = i * gridMax / (n - 1)
/// and compares with p_MB. The convolution integral is evaluated with the
/// substitution u = E sin^2(theta), which removes the square-root endpoint
/// behaviour, and Gauss-Legendre in theta.
inline MbConvolutionCheck verify_mb_convolution(double temperature, int gridSize, double gridMaxInKT = 20.0,
                                                const PhysicalConstants& k = kConstants) {
  if (!(temperature > 0)) throw std::invalid_argument("temperature must be positive");
  if (gridSize < 256) throw std::invalid_argument("grid needs at least 256 points");
  const double kt = k.kB * temperature;
  const double h = gridMaxInKT * kt / (gridSize - 1);
  const QuadratureRule gl = gauss_legendre(48);
  const double half = 0.25 * std::numbers::pi;  // theta in [0, pi/2] -> x in [-1, 1]

  MbConvolutionCheck out;
  std::vector<double> mb(gridSize);
  for (int i = 0; i < gridSize; ++i) {
    const double e = i * h;
    double conv = 0.0;
    if (e > 0) {
      conv = gl.integrate([&](double x) {
        const double theta = half * (x + 1.0);
        const double s = std::sin(theta), c = std::cos(theta);
        const double u = e * s * s;
        return pdf_potential(3, e - u, temperature, k) * pdf_potential(3, u, temperature, k) * 2.0 * e * s * c;
      }) * half;
    }
    mb[i] = pdf_maxwell_boltzmann(e, temperature, k);
    out.peak = std::max(out.peak, mb[i]);
    out.maxAbsDeviation = std::max(out.maxAbsDeviation, std::abs(conv - mb[i]));
  }
  out.relativeDeviation = out.maxAbsDeviation / out.peak;

  // Composite Simpson; an even point count finishes with a 3/8 panel.
  const int simpsonEnd = (gridSize % 2 == 1) ? gridSize - 1 : gridSize - 4;
  double s = 0.0;
  for (int i = 0; i < simpsonEnd; i += 2) s += mb[i] + 4.0 * mb[i + 1] + mb[i + 2];
  s *= h / 3.0;
  if (simpsonEnd != gridSize - 1) {
    const int j = simpsonEnd;
    s += 3.0 * h / 8.0 * (mb[j] + 3.0 * mb[j + 1] + 3.0 * mb[j + 2] + mb[j + 3]);
  }
  out.gridIntegral = s;
  const double x = gridMaxInKT;
  out.tailBeyondGrid = std::exp(-x) * (x * x + 2.0 * x + 2.0) / 2.0;
  return out;
}

}  // namespace spincoh
