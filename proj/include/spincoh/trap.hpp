#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "spincoh/constants.hpp"

namespace spincoh {

/// Focused Gaussian-beam dipole trap.
struct TrapConfig {
  double wavelength;  // m
  double power;       // W
  double waist;       // m, 1/e^2 intensity radius
  AtomSpecies species = kRb87;

  double rayleigh_range() const { return units::pi * waist * waist / wavelength; }

  /// Red of both D lines, nonnegative power, positive waist.
  void validate(const PhysicalConstants& k = kConstants) const {
    if (!(waist > 0)) throw std::invalid_argument("trap waist must be positive");
    if (!(power >= 0)) throw std::invalid_argument("trap power must be nonnegative");
    if (!(wavelength > species.d1.wavelength(k.c) && wavelength > species.d2.wavelength(k.c)))
      throw std::invalid_argument("trap wavelength must be red of both D lines");
  }

  /// The 856 nm / 30 mW / 3.5 um single-atom trap.
  static TrapConfig reference() { return {856e-9, 30e-3, 3.5e-6, kRb87}; }
};

struct PolarizationSpec {
  double circularFraction = 0.0;  // I_sigma / I, in [0, 1]
  int handedness = +1;            // +1 for sigma+, -1 for sigma-

  void validate() const {
    if (!(circularFraction >= 0.0 && circularFraction <= 1.0))
      throw std::invalid_argument("circular fraction must lie in [0, 1]");
    if (handedness != 1 && handedness != -1) throw std::invalid_argument("handedness must be +1 or -1");
  }
};

struct Detunings {
  double d1;  // omega_laser - omega_D1, rad/s
  double d2;  // omega_laser - omega_D2, rad/s
};

inline double laser_omega(double wavelength, const PhysicalConstants& k = kConstants) {
  return units::two_pi * k.c / wavelength;
}

inline Detunings detunings(double wavelength, const AtomSpecies& species,
                           const PhysicalConstants& k = kConstants) {
  const double w = laser_omega(wavelength, k);
  Detunings d{w - species.d1.omegaD, w - species.d2.omegaD};
  if (d.d1 == 0.0 || d.d2 == 0.0) throw std::domain_error("trap light is resonant with a D line");
  return d;
}

inline double peak_intensity(const TrapConfig& trap) {
  return 2.0 * trap.power / (units::pi * trap.waist * trap.waist);
}

namespace detail {
// pi c^2 Gamma / (2 omega^3) for one line: m^2 per unit detuning.
inline double line_strength(const DLine& line, const PhysicalConstants& k) {
  return units::pi * k.c * k.c * line.gammaD / (2.0 * std::pow(line.omegaD, 3));
}
}  // namespace detail

/// Two-line light shift of |F, mF> in the ground level (J). Each line keeps its
/// own Gamma/omega^3 strength; with handedness = 0 this is the scalar
/// (state independent) trapping potential. Detunings are omega_laser -
/// omega_D, so the shift is negative (attractive) red of both lines.
inline double light_shift(double wavelength, double intensity, int handedness, int mF,
                          const AtomSpecies& species = kRb87, const PhysicalConstants& k = kConstants) {
  const Detunings d = detunings(wavelength, species, k);
  const double pgm = handedness * k.gF * mF;
  return (detail::line_strength(species.d1, k) * (1.0 - pgm) / d.d1 +
          detail::line_strength(species.d2, k) * (2.0 + pgm) / d.d2) *
         intensity;
}

/// |U0| at the focus (linear polarization).
inline double trap_depth(const TrapConfig& trap, const PhysicalConstants& k = kConstants) {
  trap.validate(k);
  return -light_shift(trap.wavelength, peak_intensity(trap), 0, 0, trap.species, k);
}

struct TrapFrequencies {
  double omegaR;  // rad/s
  double omegaZ;  // rad/s
};

/// Harmonic expansion of the Gaussian-beam potential around the focus.
inline TrapFrequencies trap_frequencies(const TrapConfig& trap, const PhysicalConstants& k = kConstants) {
  const double u0 = trap_depth(trap, k);
  if (!(u0 > 0)) throw std::domain_error("trap frequencies need a positive trap depth");
  const double m = trap.species.mass;
  const double zr = trap.rayleigh_range();
  return {std::sqrt(4.0 * u0 / (m * trap.waist * trap.waist)), std::sqrt(2.0 * u0 / (m * zr * zr))};
}

/// Spontaneous Raman rate at the focus. The squared Gamma/omega^3 prefactor
/// uses the D2 line.
inline double raman_scatter_rate(const TrapConfig& trap, const PhysicalConstants& k = kConstants) {
  trap.validate(k);
  const Detunings d = detunings(trap.wavelength, trap.species, k);
  const double w = laser_omega(trap.wavelength, k);
  const DLine& d2 = trap.species.d2;
  const double pref = d2.gammaD / std::pow(d2.omegaD, 3);
  const double interference = 1.0 / d.d1 - 1.0 / d.d2;
  return 3.0 * k.c * k.c * std::pow(w, 3) / (4.0 * k.hbar) * pref * pref * interference * interference *
         peak_intensity(trap);
}

/// Fictitious magnetic field (tesla, along the beam axis) of the vector light
/// shift for a circular intensity `circularIntensity`: the mF-odd part of
/// light_shift written as muB gF mF B. Valid on either side of the D lines;
/// positive for sigma+ light red of both lines.
inline double vector_shift_at(double wavelength, double circularIntensity, int handedness,
                              const AtomSpecies& species = kRb87, const PhysicalConstants& k = kConstants) {
  const Detunings d = detunings(wavelength, species, k);
  const double factor =
      detail::line_strength(species.d2, k) / d.d2 - detail::line_strength(species.d1, k) / d.d1;
  return handedness * factor * circularIntensity / k.muB;
}

/// B_sigma^0: vector-shift field at the trap bottom.
inline double vector_shift_field(const TrapConfig& trap, const PolarizationSpec& pol,
                                 const PhysicalConstants& k = kConstants) {
  trap.validate(k);
  pol.validate();
  return vector_shift_at(trap.wavelength, pol.circularFraction * peak_intensity(trap), pol.handedness,
                         trap.species, k);
}

}  // namespace spincoh
