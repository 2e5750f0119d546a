#pragma once

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spincoh/config.hpp"
#include "spincoh/ensemble.hpp"
#include "spincoh/fit.hpp"
#include "spincoh/io.hpp"
#include "spincoh/pipeline.hpp"
#include "spincoh/tomography.hpp"
#include "spincoh/trap.hpp"

namespace spincoh::cli {

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kNotConverged = 3 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<long> shots;
  std::string method = "mc";
  std::optional<unsigned> workers;
  // dist
  int points = 201;
  // evolve
  std::optional<std::uint64_t> realization;
  // fit
  std::string in;
  std::string family = "full";
  // tomo
  std::string rhoPath;
};

namespace detail {

inline ExperimentConfig resolve(const Options& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) c.run.seed = *o.seed;
  if (o.samples) {
    if (*o.samples < 100) throw ConfigError("--samples must be >= 100");
    c.run.samples = *o.samples;
  }
  if (o.shots) {
    if (*o.shots < 1) throw ConfigError("--shots must be >= 1");
    c.run.shots = *o.shots;
  }
  if (o.workers) c.run.workers = *o.workers;
  return c;
}

inline EnsembleMethod parse_method(const std::string& m) {
  if (m == "mc") return EnsembleMethod::MonteCarlo;
  if (m == "quad") return EnsembleMethod::Quadrature;
  throw ConfigError("--method must be mc or quad, got '" + m + "'");
}

inline std::vector<std::string> provenance(const std::string& cmd, const std::vector<std::string>& args,
                                           const ExperimentConfig& c) {
  std::string line = "spincoh";
  for (const auto& a : args) line += " " + a;
  return {"command: " + line, "subcommand: " + cmd, "seed: " + std::to_string(c.run.seed),
          "config: " + config_to_json(c).dump()};
}

/// Writes to --out or to the given stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ConfigError("cannot open output '" + path + "'");
      os_ = file_.get();
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

inline int cmd_trap(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const ExperimentConfig c = resolve(o);
  const auto f = trap_frequencies(c.trap);
  PolarizationSpec pol = c.polarization;
  json j;
  j["wavelength_nm"] = c.trap.wavelength / units::nanometer;
  j["power_mW"] = c.trap.power / units::milliwatt;
  j["waist_um"] = c.trap.waist / units::micrometer;
  j["intensity_W_m2"] = peak_intensity(c.trap);
  j["rayleigh_um"] = c.trap.rayleigh_range() / units::micrometer;
  j["depth_uK"] = J_to_uK(trap_depth(c.trap));
  j["fr_kHz"] = f.omegaR / units::two_pi / units::kilohertz;
  j["fz_kHz"] = f.omegaZ / units::two_pi / units::kilohertz;
  j["raman_Hz"] = raman_scatter_rate(c.trap);
  j["circular_fraction_percent"] = pol.circularFraction * 100.0;
  j["b_sigma0_mG"] = units::T_to_mG(vector_shift_field(c.trap, pol));
  j["b_sigma0_per_percent_mG"] = units::T_to_mG(vector_shift_field(c.trap, PolarizationSpec{0.01, pol.handedness}));
  j["provenance"] = provenance("trap", args, c);
  Sink s(o.out, out);
  *s << j.dump(2) << '\n';
  return kOk;
}

inline ThermalShiftDist thermal_for_dist(const ExperimentConfig& c) {
  if (c.noise.thermal && c.noise.thermal->bSigma0 != 0.0) return *c.noise.thermal;
  ThermalShiftDist th{trap_depth(c.trap), 150 * units::microkelvin, vector_shift_field(c.trap, c.polarization)};
  if (c.noise.thermal) th.temperature = c.noise.thermal->temperature;
  if (th.bSigma0 == 0.0) th.bSigma0 = vector_shift_field(c.trap, PolarizationSpec{0.01, c.polarization.handedness});
  return th;
}

inline int cmd_dist(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const ExperimentConfig c = resolve(o);
  if (o.points < 2) throw ConfigError("--points must be >= 2");
  const ThermalShiftDist th = thermal_for_dist(c);
  const double kt = th.kT();
  const auto check = verify_mb_convolution(th.temperature, 4096);
  auto prov = provenance("dist", args, c);
  prov.push_back("thermal: T_uK=" + std::to_string(th.temperature / units::microkelvin) +
                 " U0_uK=" + std::to_string(J_to_uK(th.trapDepth)) +
                 " b_sigma0_mG=" + std::to_string(units::T_to_mG(th.bSigma0)));
  std::ostringstream dev;
  dev << std::setprecision(6) << "mb_convolution: max_abs_dev_per_uK=" << check.maxAbsDeviation * kConstants.kB * 1e-6
      << " relative_to_peak=" << check.relativeDeviation << " grid_integral=" << check.gridIntegral
      << " tail=" << check.tailBeyondGrid;
  prov.push_back(dev.str());
  prov.push_back("pdfs per uK (energy) and per mG (delta_b); energy grid 0..10 kT, delta_b = U b_sigma0/U0");

  Sink s(o.out, out);
  spincoh::detail::write_provenance(*s, prov);
  *s << "energy_uK,p_potential_1d,p_potential_3d,p_maxwell_boltzmann,delta_b_mG,p_delta_b\n";
  *s << std::setprecision(10);
  const double perUk = kConstants.kB * units::microkelvin;
  for (int i = 0; i < o.points; ++i) {
    const double e = 10.0 * kt * i / (o.points - 1);
    const double db = e * std::abs(th.bSigma0) / th.trapDepth;
    // The 1-D density diverges at zero energy; report the first point as inf.
    const double p1 = e > 0 ? pdf_potential(1, e, th.temperature) * perUk : std::numeric_limits<double>::infinity();
    *s << e / perUk << ',' << p1 << ',' << pdf_potential(3, e, th.temperature) * perUk << ','
       << pdf_maxwell_boltzmann(e, th.temperature) * perUk << ',' << units::T_to_mG(db) << ','
       << pdf_delta_bsigma(db, th) * units::milligauss << '\n';
  }
  return kOk;
}

inline int cmd_evolve(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const ExperimentConfig c = resolve(o);
  const TimeGrid grid = TimeGrid::uniform(c.run.tMax, c.run.step);
  const FieldVector b = o.realization ? sample_field(c.noise, *o.realization, c.run.seed) : c.noise.mean_field();
  const SurvivalKernel kernel(c.initial, c.analysis, eigenframe(b));
  DecayCurve curve{grid, std::vector<double>(grid.size()), std::vector<double>(grid.size(), 0.0), ""};
  for (std::size_t j = 0; j < grid.size(); ++j) curve.probabilities[j] = std::clamp(kernel(grid[j]), 0.0, 1.0);
  std::ostringstream meta;
  meta << std::setprecision(8) << "single realization "
       << (o.realization ? "index=" + std::to_string(*o.realization) : std::string("mean-field")) << " field_mG=("
       << units::T_to_mG(b.bx) << ", " << units::T_to_mG(b.by) << ", " << units::T_to_mG(b.bz) << ")";
  curve.meta = meta.str();
  Sink s(o.out, out);
  write_curve_csv(*s, curve, provenance("evolve", args, c));
  return kOk;
}

inline int cmd_dephase(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const ExperimentConfig c = resolve(o);
  DecayCurve curve = dephase_curve(c, parse_method(o.method));
  // Finite-shot data only when --shots is given explicitly.
  if (o.shots) curve = binomial_resample(curve, static_cast<int>(c.run.shots), c.run.seed);
  Sink s(o.out, out);
  auto prov = provenance("dephase", args, c);
  prov.push_back("method: " + o.method);
  write_curve_csv(*s, curve, prov);
  return kOk;
}

inline int cmd_fit(const Options& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const ExperimentConfig c = resolve(o);
  if (o.in.empty()) throw ConfigError("fit needs --in <curve.csv>");
  std::ifstream in(o.in);
  if (!in) throw ConfigError("cannot open input '" + o.in + "'");
  const DecayCurve curve = read_curve_csv(in);
  const FitResult r = fit_decay(curve, fit_spec_for(fit_family_from_string(o.family), c, curve));
  json j = fit_result_to_json(r);
  j["input"] = o.in;
  j["provenance"] = provenance("fit", args, c);
  Sink s(o.out, out);
  *s << j.dump(2) << '\n';
  if (!r.converged) {
    err << "fit did not converge: " << r.message << '\n';
    return kNotConverged;
  }
  return kOk;
}

inline int cmd_tomo(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const ExperimentConfig c = resolve(o);
  const TimeGrid grid = TimeGrid::uniform(c.run.tMax, c.run.step);
  const auto rhos = ensemble_density(c.initial, c.noise, grid, parse_method(o.method), c.run.samples, c.run.seed,
                                     c.run.quadNodes, EnsembleOptions{c.run.workers});
  auto prov = provenance("tomo", args, c);
  prov.push_back("method: " + o.method + ", shots per basis: " + std::to_string(c.run.shots));

  json rj;
  rj["basis_order"] = kBasisOrderNote;
  rj["provenance"] = prov;
  rj["points"] = json::array();
  Sink s(o.out, out);
  spincoh::detail::write_provenance(*s, prov);
  *s << "time_us,r\n" << std::setprecision(10);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Reconstruction rec = tomograph(rhos[j], c.run.shots, c.run.seed, j);
    const double r = purity_parameter(rec.rho).r;
    *s << units::s_to_us(grid[j]) << ',' << r << '\n';
    rj["points"].push_back({{"time_us", units::s_to_us(grid[j])},
                            {"r", r},
                            {"repaired", rec.repaired},
                            {"rho", density_to_json(rec.rho)},
                            {"rho_ensemble", density_to_json(rhos[j])}});
  }
  std::string rhoPath = o.rhoPath;
  if (rhoPath.empty() && !o.out.empty()) rhoPath = o.out + ".rho.json";
  if (!rhoPath.empty()) {
    std::ofstream f(rhoPath);
    if (!f) throw ConfigError("cannot open output '" + rhoPath + "'");
    f << rj.dump(1) << '\n';
  }
  return kOk;
}

}  // namespace detail

/// Runs one command line (without the program name). Never throws.
inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spin-1 coherence toolkit for a single trapped 87Rb atom", "spincoh"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool ensemble) {
    sub->add_option("--config", o.config, "experiment config (JSON)");
    sub->add_option("--out", o.out, "output file (default stdout)");
    if (!ensemble) return;
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--samples", o.samples, "Monte Carlo samples");
    sub->add_option("--method", o.method, "mc or quad");
    sub->add_option("--shots", o.shots, "shots per point / basis");
    sub->add_option("--workers", o.workers, "worker threads (0 = all cores)");
  };
  auto* trap = app.add_subcommand("trap", "trap depth, frequencies, scattering and vector shift (JSON)");
  common(trap, false);
  auto* dist = app.add_subcommand("dist", "thermal energy and light-shift densities (CSV)");
  common(dist, false);
  dist->add_option("--points", o.points, "grid points");
  auto* evolve = app.add_subcommand("evolve", "survival curve for one field realization (CSV)");
  common(evolve, false);
  evolve->add_option("--seed", o.seed, "RNG seed");
  evolve->add_option("--realization", o.realization, "sample index (default: mean field)");
  auto* dephase = app.add_subcommand("dephase", "ensemble-averaged survival curve (CSV)");
  common(dephase, true);
  auto* fit = app.add_subcommand("fit", "fit a decay curve (JSON)");
  common(fit, false);
  fit->add_option("--in", o.in, "decay curve CSV")->required();
  fit->add_option("--family", o.family, "superposition, stretched or full");
  auto* tomo = app.add_subcommand("tomo", "simulated partial tomography over time (CSV + JSON)");
  common(tomo, true);
  tomo->add_option("--rho", o.rhoPath, "density-matrix JSON (default <out>.rho.json)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (trap->parsed()) return detail::cmd_trap(o, args, out);
    if (dist->parsed()) return detail::cmd_dist(o, args, out);
    if (evolve->parsed()) return detail::cmd_evolve(o, args, out);
    if (dephase->parsed()) return detail::cmd_dephase(o, args, out);
    if (fit->parsed()) return detail::cmd_fit(o, args, out, err);
    if (tomo->parsed()) return detail::cmd_tomo(o, args, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace spincoh::cli
