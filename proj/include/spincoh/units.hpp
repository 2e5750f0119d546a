#pragma once

// SI is used everywhere inside the library. These helpers convert at the
// boundaries (config files, CSV/JSON, CLI) where the lab units live.

namespace spincoh::units {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

inline constexpr double gauss = 1.0e-4;        // T
inline constexpr double milligauss = 1.0e-7;   // T
inline constexpr double microkelvin = 1.0e-6;  // K
inline constexpr double microsecond = 1.0e-6;  // s
inline constexpr double nanometer = 1.0e-9;    // m
inline constexpr double micrometer = 1.0e-6;   // m
inline constexpr double milliwatt = 1.0e-3;    // W
inline constexpr double kilohertz = 1.0e3;     // Hz

constexpr double mG_to_T(double mG) { return mG * milligauss; }
constexpr double T_to_mG(double tesla) { return tesla / milligauss; }
constexpr double us_to_s(double us) { return us * microsecond; }
constexpr double s_to_us(double s) { return s / microsecond; }

}  // namespace spincoh::units
