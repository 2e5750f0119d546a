#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>

#include "json.hpp"
#include "spincoh/errors.hpp"
#include "spincoh/noise.hpp"
#include "spincoh/trap.hpp"
#include "spincoh/units.hpp"

// Experiment configuration (JSON). Keys carry their unit as a suffix; values
// are converted to SI on load. Unknown keys are rejected with the full key
// path in the message.
//
// {
//   "trap":         {"wavelength_nm": 856, "power_mW": 30, "waist_um": 3.5},
//   "polarization": {"circular_fraction_percent": 0.6, "handedness": 1},
//   "noise": {
//     "x": {"offset_mG": 0, "uniform_lo_mG": -1.5, "uniform_hi_mG": 1.5},
//     "y": {"offset_mG": 0, "gaussian_std_mG": 0.77},
//     "z": {"offset_mG": 5.5, "gaussian_width_mG": 1.0},
//     "thermal": {"temperature_uK": 150, "trap_depth_uK": 650, "b_sigma0_mG": 4.8},
//     "compensate_light_shift": false
//   },
//   "states": {"initial": "x+", "analysis": "x-"},
//   "run": {"t_max_us": 200, "step_us": 2, "samples": 100000, "seed": 1,
//           "shots": 100, "quad_nodes": 64, "workers": 0}
// }
//
// Gaussian spreads take either gaussian_width_mG (1/e half-width) or
// gaussian_std_mG. Thermal trap_depth_uK and b_sigma0_mG default to the
// values computed from the trap and polarization sections.

namespace spincoh {

using json = nlohmann::json;

struct RunConfig {
  double tMax = 200 * units::microsecond;  // s
  double step = 2 * units::microsecond;    // s
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  long shots = 100;
  int quadNodes = 64;
  unsigned workers = 0;
};

struct ExperimentConfig {
  TrapConfig trap = TrapConfig::reference();
  PolarizationSpec polarization{};
  FieldNoiseModel noise;
  bool compensateLightShift = false;
  Spin1State initial = Spin1State::x_plus();
  Spin1State analysis = Spin1State::x_plus();
  std::string initialName = "x+";
  std::string analysisName = "x+";
  RunConfig run;
};

inline Spin1State named_state(const std::string& name) {
  if (name == "+1") return Spin1State::plus();
  if (name == "0") return Spin1State::zero();
  if (name == "-1") return Spin1State::minus();
  if (name == "x+") return Spin1State::x_plus();
  if (name == "x-") return Spin1State::x_minus();
  if (name == "y+") return Spin1State::y_plus();
  if (name == "y-") return Spin1State::y_minus();
  throw std::invalid_argument("unknown state '" + name + "' (expected +1, 0, -1, x+, x-, y+, y-)");
}

namespace detail {

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + path_ + "' must be an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) throw ConfigError("unknown key '" + key(k) + "'");
  }
  bool has(const char* k) const { return j_.contains(k); }
  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  double number(const char* k, double fallback) const {
    if (!has(k)) return fallback;
    const auto& v = j_.at(k);
    if (!v.is_number()) throw ConfigError("key '" + key(k) + "' must be a number");
    return v.get<double>();
  }
  double required_number(const char* k) const {
    if (!has(k)) throw ConfigError("missing key '" + key(k) + "'");
    return number(k, 0.0);
  }
  template <class Int>
  Int integer(const char* k, Int fallback) const {
    if (!has(k)) return fallback;
    const auto& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError("key '" + key(k) + "' must be an integer");
    if (std::is_unsigned_v<Int> && v.get<long long>() < 0 && !v.is_number_unsigned())
      throw ConfigError("key '" + key(k) + "' must be nonnegative");
    return v.get<Int>();
  }
  bool boolean(const char* k, bool fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_boolean()) throw ConfigError("key '" + key(k) + "' must be true or false");
    return j_.at(k).get<bool>();
  }
  std::string string(const char* k, const std::string& fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_string()) throw ConfigError("key '" + key(k) + "' must be a string");
    return j_.at(k).get<std::string>();
  }
  Section sub(const char* k) const { return Section(j_.at(k), key(k)); }

 private:
  const json& j_;
  std::string path_;
};

inline AxisNoise parse_axis(const Section& s) {
  s.allow({"offset_mG", "gaussian_width_mG", "gaussian_std_mG", "uniform_lo_mG", "uniform_hi_mG"});
  AxisNoise a;
  a.offset = units::mG_to_T(s.number("offset_mG", 0.0));
  const bool gw = s.has("gaussian_width_mG"), gs = s.has("gaussian_std_mG");
  const bool ul = s.has("uniform_lo_mG"), uh = s.has("uniform_hi_mG");
  if (gw && gs) throw ConfigError("give only one of '" + s.key("gaussian_width_mG") + "' and '" + s.key("gaussian_std_mG") + "'");
  if ((gw || gs) && (ul || uh)) throw ConfigError("'" + s.key("uniform_lo_mG") + "' cannot be combined with a Gaussian spread");
  if (ul != uh) throw ConfigError("missing key '" + s.key(ul ? "uniform_hi_mG" : "uniform_lo_mG") + "'");
  if (gw || gs) {
    const double v = gw ? s.number("gaussian_width_mG", 0) : gaussian_width_from_std(s.number("gaussian_std_mG", 0));
    if (!(v >= 0)) throw ConfigError("key '" + s.key(gw ? "gaussian_width_mG" : "gaussian_std_mG") + "' must be >= 0");
    a.spread = GaussianFieldDist{0.0, units::mG_to_T(v)};
  } else if (ul) {
    const double lo = s.number("uniform_lo_mG", 0), hi = s.number("uniform_hi_mG", 0);
    if (!(lo <= hi)) throw ConfigError("key '" + s.key("uniform_lo_mG") + "' must not exceed uniform_hi_mG");
    a.spread = UniformFieldDist{units::mG_to_T(lo), units::mG_to_T(hi)};
  }
  return a;
}

inline json axis_to_json(const AxisNoise& a) {
  json j{{"offset_mG", units::T_to_mG(a.offset)}};
  if (auto g = std::get_if<GaussianFieldDist>(&a.spread)) {
    j["offset_mG"] = units::T_to_mG(a.offset + g->mean);
    j["gaussian_width_mG"] = units::T_to_mG(g->width);
  }
  if (auto u = std::get_if<UniformFieldDist>(&a.spread)) {
    j["uniform_lo_mG"] = units::T_to_mG(u->lo);
    j["uniform_hi_mG"] = units::T_to_mG(u->hi);
  }
  return j;
}

}  // namespace detail

/// Noise section. `defaultDepth` / `defaultBSigma0` fill in thermal values
/// that the section leaves out.
inline FieldNoiseModel noise_model_from_json(const json& j, double defaultDepth, double defaultBSigma0,
                                             bool* compensate = nullptr, const std::string& path = "noise") {
  detail::Section s(j, path);
  s.allow({"x", "y", "z", "thermal", "compensate_light_shift"});
  FieldNoiseModel m;
  if (s.has("x")) m.x = detail::parse_axis(s.sub("x"));
  if (s.has("y")) m.y = detail::parse_axis(s.sub("y"));
  if (s.has("z")) m.z = detail::parse_axis(s.sub("z"));
  if (s.has("thermal")) {
    const auto t = s.sub("thermal");
    t.allow({"temperature_uK", "trap_depth_uK", "b_sigma0_mG"});
    ThermalShiftDist th;
    th.temperature = t.required_number("temperature_uK") * units::microkelvin;
    th.trapDepth = t.has("trap_depth_uK") ? uK_to_J(t.number("trap_depth_uK", 0)) : defaultDepth;
    th.bSigma0 = t.has("b_sigma0_mG") ? units::mG_to_T(t.number("b_sigma0_mG", 0)) : defaultBSigma0;
    if (!(th.temperature > 0)) throw ConfigError("key '" + t.key("temperature_uK") + "' must be positive");
    if (!(th.trapDepth > 0)) throw ConfigError("key '" + t.key("trap_depth_uK") + "' must be positive");
    m.thermal = th;
  }
  const bool comp = s.boolean("compensate_light_shift", false);
  if (compensate) *compensate = comp;
  if (comp && m.thermal) m.z.offset -= m.thermal->mean_field();
  return m;
}

/// Inverse of noise_model_from_json (thermal values written explicitly,
/// compensation already folded into the z offset).
inline json noise_model_to_json(const FieldNoiseModel& m) {
  json j{{"x", detail::axis_to_json(m.x)}, {"y", detail::axis_to_json(m.y)}, {"z", detail::axis_to_json(m.z)}};
  if (m.thermal)
    j["thermal"] = {{"temperature_uK", m.thermal->temperature / units::microkelvin},
                    {"trap_depth_uK", J_to_uK(m.thermal->trapDepth)},
                    {"b_sigma0_mG", units::T_to_mG(m.thermal->bSigma0)}};
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  detail::Section root(j, "");
  root.allow({"trap", "polarization", "noise", "states", "run"});
  ExperimentConfig c;
  if (root.has("trap")) {
    const auto t = root.sub("trap");
    t.allow({"wavelength_nm", "power_mW", "waist_um"});
    c.trap.wavelength = t.number("wavelength_nm", c.trap.wavelength / units::nanometer) * units::nanometer;
    c.trap.power = t.number("power_mW", c.trap.power / units::milliwatt) * units::milliwatt;
    c.trap.waist = t.number("waist_um", c.trap.waist / units::micrometer) * units::micrometer;
  }
  try {
    c.trap.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("trap: ") + e.what());
  }
  if (root.has("polarization")) {
    const auto p = root.sub("polarization");
    p.allow({"circular_fraction_percent", "handedness"});
    c.polarization.circularFraction = p.number("circular_fraction_percent", 0.0) / 100.0;
    c.polarization.handedness = p.integer<int>("handedness", 1);
    try {
      c.polarization.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("polarization: ") + e.what());
    }
  }
  if (root.has("noise"))
    c.noise = noise_model_from_json(j.at("noise"), trap_depth(c.trap), vector_shift_field(c.trap, c.polarization),
                                    &c.compensateLightShift);
  if (root.has("states")) {
    const auto s = root.sub("states");
    s.allow({"initial", "analysis"});
    c.initialName = s.string("initial", c.initialName);
    c.analysisName = s.string("analysis", c.analysisName);
    try {
      c.initial = named_state(c.initialName);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("key 'states.initial': " + std::string(e.what()));
    }
    try {
      c.analysis = named_state(c.analysisName);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("key 'states.analysis': " + std::string(e.what()));
    }
  }
  if (root.has("run")) {
    const auto r = root.sub("run");
    r.allow({"t_max_us", "step_us", "samples", "seed", "shots", "quad_nodes", "workers"});
    c.run.tMax = units::us_to_s(r.number("t_max_us", units::s_to_us(c.run.tMax)));
    c.run.step = units::us_to_s(r.number("step_us", units::s_to_us(c.run.step)));
    c.run.samples = r.integer<std::size_t>("samples", c.run.samples);
    c.run.seed = r.integer<std::uint64_t>("seed", c.run.seed);
    c.run.shots = r.integer<long>("shots", c.run.shots);
    c.run.quadNodes = r.integer<int>("quad_nodes", c.run.quadNodes);
    c.run.workers = r.integer<unsigned>("workers", c.run.workers);
    if (!(c.run.step > 0)) throw ConfigError("key 'run.step_us' must be positive");
    if (!(c.run.tMax >= 0)) throw ConfigError("key 'run.t_max_us' must be >= 0");
    if (c.run.samples < 100) throw ConfigError("key 'run.samples' must be >= 100");
    if (c.run.shots < 1) throw ConfigError("key 'run.shots' must be >= 1");
    if (c.run.quadNodes < 1) throw ConfigError("key 'run.quad_nodes' must be >= 1");
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

/// Fully resolved config (every default written out) for provenance headers.
inline json config_to_json(const ExperimentConfig& c) {
  return {
      {"trap",
       {{"wavelength_nm", c.trap.wavelength / units::nanometer},
        {"power_mW", c.trap.power / units::milliwatt},
        {"waist_um", c.trap.waist / units::micrometer}}},
      {"polarization",
       {{"circular_fraction_percent", c.polarization.circularFraction * 100.0},
        {"handedness", c.polarization.handedness}}},
      {"noise", noise_model_to_json(c.noise)},
      {"states", {{"initial", c.initialName}, {"analysis", c.analysisName}}},
      {"run",
       {{"t_max_us", units::s_to_us(c.run.tMax)},
        {"step_us", units::s_to_us(c.run.step)},
        {"samples", c.run.samples},
        {"seed", c.run.seed},
        {"shots", c.run.shots},
        {"quad_nodes", c.run.quadNodes},
        {"workers", c.run.workers}}},
  };
}

}  // namespace spincoh
