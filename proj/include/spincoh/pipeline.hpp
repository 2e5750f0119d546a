#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "spincoh/config.hpp"
#include "spincoh/ensemble.hpp"
#include "spincoh/fit.hpp"
#include "spincoh/tomography.hpp"

// Glue shared by the command line tool and the demo: fit setups derived from
// an experiment config, and the synthetic dephase -> fit -> tomography chain.

namespace spincoh {

inline FitFamily fit_family_from_string(const std::string& s) {
  if (s == "superposition") return FitFamily::SuperpositionAnalytic;
  if (s == "stretched") return FitFamily::StretchedAnalytic;
  if (s == "full") return FitFamily::FullEnsemble;
  throw ConfigError("fit family must be superposition, stretched or full, got '" + s + "'");
}

/// Bounds and starting point for fitting `curve` with `family`. The full
/// family frees meanBz, widthBz and circularFraction; temperature and trap
/// depth come from the config's thermal section (150 uK / trap depth if
/// absent) and meanBz is pre-scanned over its range.
inline FitSpec fit_spec_for(FitFamily family, const ExperimentConfig& c, const DecayCurve& curve) {
  FitSpec spec;
  spec.family = family;
  if (family != FitFamily::FullEnsemble) {
    const double tEnd = curve.grid.times().back();
    spec.bounds = {{"timeConstant", {1e-3 * tEnd, 100.0 * tEnd}}, {"amplitude", {0.0, 1.0}}, {"offset", {0.0, 1.0}}};
    spec.initialGuess["timeConstant"] = 0.5 * tEnd;
    return spec;
  }
  spec.settings.init = c.initial;
  spec.settings.analysis = c.analysis;
  spec.settings.quadNodes = std::min(c.run.quadNodes, 48);
  spec.settings.bx = c.noise.x.mean();
  spec.settings.by = c.noise.y.mean();
  spec.settings.bSigmaPerFraction = vector_shift_field(c.trap, PolarizationSpec{1.0, c.polarization.handedness});
  double temperature = 150 * units::microkelvin;
  spec.settings.trapDepth = trap_depth(c.trap);
  if (c.noise.thermal) {
    spec.settings.trapDepth = c.noise.thermal->trapDepth;
    temperature = c.noise.thermal->temperature;
  }
  spec.initialGuess = {{"meanBz", 5 * units::milligauss},
                       {"widthBz", 2 * units::milligauss},
                       {"circularFraction", 0.005},
                       {"temperature", temperature}};
  spec.bounds = {{"meanBz", {0.0, 15 * units::milligauss}},
                 {"widthBz", {0.01 * units::milligauss, 10 * units::milligauss}},
                 {"circularFraction", {0.0, 0.02}}};
  spec.options.scanParameter = "meanBz";
  spec.options.scanPoints = 151;
  return spec;
}

/// Ensemble curve for a config: quadrature when requested, Monte Carlo
/// otherwise.
inline DecayCurve dephase_curve(const ExperimentConfig& c, EnsembleMethod method) {
  const TimeGrid grid = TimeGrid::uniform(c.run.tMax, c.run.step);
  if (method == EnsembleMethod::Quadrature)
    return quadrature_survival(c.initial, c.analysis, c.noise, grid, c.run.quadNodes);
  return ensemble_survival(c.initial, c.analysis, c.noise, grid, c.run.samples, c.run.seed,
                           EnsembleOptions{c.run.workers});
}

struct PurityPoint {
  double time;  // s
  double r;     // from the reconstructed density
  double rExact;
  bool repaired;
};

struct PipelineResult {
  DecayCurve superpositionData;  // finite-shot synthetic data
  FitResult superpositionFit;    // full-ensemble family
  DecayCurve populationData;
  FitResult populationFit;       // stretched-analytic family
  double t2star = 0.0;           // s, from the full-ensemble fit
  double t1 = 0.0;               // s, from the population fit
  std::vector<PurityPoint> purity;
};

/// `superposition`: x+ prepared, z-dominated field, z noise only.
/// `population`: |+1> prepared, small z field with transverse noise.
/// `tomography`: any config; its ensemble densities are tomographed.
inline PipelineResult synthetic_pipeline(const ExperimentConfig& superposition, const ExperimentConfig& population,
                                         const ExperimentConfig& tomography) {
  PipelineResult out;
  const auto& a = superposition;
  out.superpositionData =
      binomial_resample(dephase_curve(a, EnsembleMethod::Quadrature), static_cast<int>(a.run.shots), a.run.seed);
  out.superpositionFit = fit_decay(out.superpositionData,
                                   fit_spec_for(FitFamily::FullEnsemble, a, out.superpositionData));
  out.t2star = out.superpositionFit.derived.count("T2star") ? out.superpositionFit.derived.at("T2star") : 0.0;

  const auto& b = population;
  const EnsembleMethod mb = b.noise.fluctuating_axes() > 1 ? EnsembleMethod::MonteCarlo : EnsembleMethod::Quadrature;
  out.populationData = binomial_resample(dephase_curve(b, mb), static_cast<int>(b.run.shots), b.run.seed);
  out.populationFit =
      fit_decay(out.populationData, fit_spec_for(FitFamily::StretchedAnalytic, b, out.populationData));
  out.t1 = out.populationFit.params.at("timeConstant");

  const auto& t = tomography;
  const TimeGrid grid = TimeGrid::uniform(t.run.tMax, t.run.step);
  const EnsembleMethod mt = t.noise.fluctuating_axes() > 1 ? EnsembleMethod::MonteCarlo : EnsembleMethod::Quadrature;
  const auto rhos = ensemble_density(t.initial, t.noise, grid, mt, t.run.samples, t.run.seed, t.run.quadNodes,
                                     EnsembleOptions{t.run.workers});
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Reconstruction rec = tomograph(rhos[j], t.run.shots, t.run.seed, j);
    out.purity.push_back({grid[j], purity_parameter(rec.rho).r, purity_parameter(rhos[j]).r, rec.repaired});
  }
  return out;
}

}  // namespace spincoh
