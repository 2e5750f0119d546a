#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "spincoh/errors.hpp"
#include "spincoh/units.hpp"

namespace spincoh {

struct PhysicalConstants {
  double c;     // m/s
  double hbar;  // J s
  double kB;    // J/K
  double muB;   // J/T
  double gF;    // F=1 ground level Lande factor

  /// Larmor angular frequency per tesla, signed with gF (rad s^-1 T^-1).
  constexpr double larmor_per_tesla() const { return muB * gF / hbar; }
};

/// One alkali D line in the two-level picture.
struct DLine {
  double omegaD;  // rad/s
  double gammaD;  // rad/s, natural linewidth

  double wavelength(double c) const { return units::two_pi * c / omegaD; }
};

struct AtomSpecies {
  double mass;  // kg
  DLine d1;
  DLine d2;
  /// Elastic (Rayleigh) scattering rate of the reference 856 nm trap. Kept as
  /// a literature number; nothing in the library computes it.
  double elasticRateRef;  // Hz
};

// Values mirror data/rb87_constants.txt; tests/test_constants.cpp keeps the
// two in sync.
inline constexpr PhysicalConstants kConstants{
    299792458.0, 1.054571817e-34, 1.380649e-23, 9.2740100783e-24, -0.5};

inline constexpr AtomSpecies kRb87{1.443160648e-25,
                                   DLine{2.369436073137e15, 3.6129e7},
                                   DLine{2.414191334583e15, 3.8117e7},
                                   17.7};

/// Parse a `key = value  # comment` table. Blank lines and full-line comments
/// are skipped; malformed lines and duplicate keys throw ConfigError.
inline std::map<std::string, double> parse_constants_table(std::istream& in) {
  std::map<std::string, double> table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    std::istringstream keyss(line.substr(0, eq == std::string::npos ? line.size() : eq));
    std::string key, extra;
    keyss >> key;
    if (key.empty() && eq == std::string::npos) continue;
    if (eq == std::string::npos || key.empty() || (keyss >> extra))
      throw ConfigError("constants table line " + std::to_string(lineno) + ": expected key = value");
    std::istringstream valss(line.substr(eq + 1));
    double value = 0;
    if (!(valss >> value) || (valss >> extra))
      throw ConfigError("constants table line " + std::to_string(lineno) + ": bad value for '" + key + "'");
    if (!table.emplace(key, value).second)
      throw ConfigError("constants table: duplicate key '" + key + "'");
  }
  return table;
}

struct ConstantsTable {
  PhysicalConstants constants;
  AtomSpecies species;
};

inline ConstantsTable constants_from_table(const std::map<std::string, double>& table) {
  auto get = [&](const std::string& key) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("constants table: missing key '" + key + "'");
    return it->second;
  };
  for (const auto& [key, value] : table) {
    static const char* known[] = {"c",        "hbar",     "kB",       "muB",      "gF",      "mass",
                                  "d1_omega", "d1_gamma", "d2_omega", "d2_gamma", "elastic_rate_ref"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("constants table: unknown key '" + key + "'");
    (void)value;
  }
  ConstantsTable out{
      PhysicalConstants{get("c"), get("hbar"), get("kB"), get("muB"), get("gF")},
      AtomSpecies{get("mass"), DLine{get("d1_omega"), get("d1_gamma")},
                  DLine{get("d2_omega"), get("d2_gamma")}, get("elastic_rate_ref")}};
  const auto& k = out.constants;
  if (!(k.c > 0 && k.hbar > 0 && k.kB > 0 && k.muB > 0))
    throw ConfigError("constants table: c, hbar, kB, muB must be positive");
  if (k.gF != -0.5) throw ConfigError("constants table: gF must be -1/2 for the F=1 level");
  if (!(out.species.d1.omegaD < out.species.d2.omegaD))
    throw ConfigError("constants table: D1 must lie below D2");
  return out;
}

inline ConstantsTable load_constants_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open constants table '" + path + "'");
  return constants_from_table(parse_constants_table(in));
}

/// Temperature <-> energy at the kB boundary.
constexpr double uK_to_J(double uK, const PhysicalConstants& k = kConstants) {
  return uK * units::microkelvin * k.kB;
}
constexpr double J_to_uK(double joule, const PhysicalConstants& k = kConstants) {
  return joule / k.kB / units::microkelvin;
}

}  // namespace spincoh
