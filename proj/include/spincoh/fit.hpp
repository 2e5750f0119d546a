#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "spincoh/ensemble.hpp"
#include "spincoh/noise.hpp"
#include "spincoh/trap.hpp"

namespace spincoh {

enum class FitFamily {
  SuperpositionAnalytic,  // offset + amplitude * exp(-(t/tau)^2), defaults 1/2, 1/2
  StretchedAnalytic,      // same shape, defaults 3/8, 5/8
  FullEnsemble,           // quadrature average over z-field noise incl. thermal light shift
};

inline const char* to_string(FitFamily f) {
  switch (f) {
    case FitFamily::SuperpositionAnalytic: return "superposition-analytic";
    case FitFamily::StretchedAnalytic: return "stretched-analytic";
    case FitFamily::FullEnsemble: return "full-ensemble";
  }
  return "?";
}

/// Fixed inputs of the full-ensemble family. The z field is
///   B_z = meanBz + G + (<dB> - dB),  G ~ Gaussian(width widthBz),
/// dB the thermal light-shift deviation for B_sigma0 = circularFraction *
/// bSigmaPerFraction, so meanBz is the mean of the total z field.
struct FullEnsembleSettings {
  Spin1State init = Spin1State::x_plus();
  Spin1State analysis = Spin1State::x_minus();
  double trapDepth = uK_to_J(650.0);  // J
  double bSigmaPerFraction = vector_shift_field(TrapConfig::reference(), PolarizationSpec{1.0, +1});  // T
  double bx = 0.0;                    // T, fixed transverse offsets
  double by = 0.0;
  int quadNodes = 64;
};

struct FitOptions {
  int maxIterations = 200;
  double relativeStepTolerance = 1e-8;
  double initialDamping = 1e-3;
  /// Before the local fit, scan this free parameter over its bounds and start
  /// from the best point (oscillating curves have many local minima in the
  /// field). Empty disables the scan.
  std::string scanParameter;
  int scanPoints = 61;
};

struct FitSpec {
  FitFamily family = FitFamily::SuperpositionAnalytic;
  std::map<std::string, double> initialGuess;
  /// A parameter is free iff it has bounds with lo < hi.
  std::map<std::string, std::pair<double, double>> bounds;
  FullEnsembleSettings settings;
  FitOptions options;
};

struct FitResult {
  FitFamily family = FitFamily::SuperpositionAnalytic;
  std::map<std::string, double> params;
  std::map<std::string, double> errors;  // 1 sigma, zero for fixed parameters
  std::vector<std::string> freeNames;
  Eigen::MatrixXd covariance;            // over freeNames
  std::map<std::string, double> derived;
  double residualNorm = 0.0;  // sqrt(sum w r^2)
  bool weighted = false;      // weights 1/stderr^2 were used
  bool converged = false;
  int iterations = 0;
  double conditionNumber = 0.0;  // of the scaled normal matrix
  std::string message;
};

/// Default parameters of a family, SI units.
inline std::map<std::string, double> family_defaults(FitFamily family) {
  switch (family) {
    case FitFamily::SuperpositionAnalytic:
      return {{"timeConstant", 100e-6}, {"amplitude", 0.5}, {"offset", 0.5}};
    case FitFamily::StretchedAnalytic:
      return {{"timeConstant", 200e-6}, {"amplitude", 0.625}, {"offset", 0.375}};
    case FitFamily::FullEnsemble:
      return {{"meanBz", 5e-7}, {"widthBz", 2e-7}, {"circularFraction", 0.005}, {"temperature", 150e-6}};
  }
  return {};
}

/// Noise model of the full-ensemble family for a parameter set.
inline FieldNoiseModel full_ensemble_model(const std::map<std::string, double>& p, const FullEnsembleSettings& s) {
  FieldNoiseModel m;
  m.x.offset = s.bx;
  m.y.offset = s.by;
  ThermalShiftDist th{s.trapDepth, p.at("temperature"), p.at("circularFraction") * s.bSigmaPerFraction};
  m.z.offset = p.at("meanBz") - th.mean_field();
  m.z.spread = GaussianFieldDist{0.0, std::abs(p.at("widthBz"))};
  m.thermal = th;
  return m;
}

inline std::vector<double> evaluate_family(FitFamily family, const std::map<std::string, double>& p,
                                           const TimeGrid& grid, const FullEnsembleSettings& s) {
  if (family == FitFamily::FullEnsemble)
    return quadrature_survival(s.init, s.analysis, full_ensemble_model(p, s), grid, s.quadNodes).probabilities;
  const double tau = p.at("timeConstant"), a = p.at("amplitude"), c = p.at("offset");
  if (!(tau > 0)) throw std::invalid_argument("time constant must be positive");
  std::vector<double> out(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double x = grid[j] / tau;
    out[j] = c + a * std::exp(-x * x);
  }
  return out;
}

namespace detail {

struct FitProblem {
  const DecayCurve& curve;
  FitFamily family;
  const FullEnsembleSettings& settings;
  std::map<std::string, double> fixed;
  std::vector<std::string> names;
  Eigen::VectorXd lo, hi, sqrtW;

  std::map<std::string, double> unpack(const Eigen::VectorXd& x) const {
    auto p = fixed;
    for (Eigen::Index i = 0; i < x.size(); ++i) p[names[i]] = x[i];
    return p;
  }
  Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
    const auto model = evaluate_family(family, unpack(x), curve.grid, settings);
    Eigen::VectorXd r(model.size());
    for (std::size_t j = 0; j < model.size(); ++j) r[j] = (model[j] - curve.probabilities[j]) * sqrtW[j];
    return r;
  }
  double scale(Eigen::Index i, double v) const { return std::max(std::abs(v), 1e-3 * (hi[i] - lo[i])); }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& r0) const {
    Eigen::MatrixXd j(r0.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = 1e-6 * scale(i, x[i]);
      Eigen::VectorXd xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      if (xp[i] > hi[i]) {
        j.col(i) = (r0 - residual(xm)) / h;
      } else if (xm[i] < lo[i]) {
        j.col(i) = (residual(xp) - r0) / h;
      } else {
        j.col(i) = (residual(xp) - residual(xm)) / (2 * h);
      }
    }
    return j;
  }
};

}  // namespace detail

/// Weighted least squares by damped Gauss-Newton (Levenberg-Marquardt with
/// Marquardt diagonal scaling), numerical Jacobian, bound projection.
inline FitResult fit_decay(const DecayCurve& curve, const FitSpec& spec) {
  curve.validate();
  if (curve.size() < 8) throw std::invalid_argument("fit needs at least 8 points");
  const auto defaults = family_defaults(spec.family);
  auto values = defaults;
  for (const auto& [name, v] : spec.initialGuess) {
    if (!defaults.count(name))
      throw std::invalid_argument("parameter '" + name + "' does not belong to family " + to_string(spec.family));
    values[name] = v;
  }

  detail::FitProblem prob{curve, spec.family, spec.settings, {}, {}, {}, {}, {}};
  std::vector<double> lo, hi, x0;
  for (const auto& [name, v] : values) {
    auto b = spec.bounds.find(name);
    if (b != spec.bounds.end() && b->second.first < b->second.second) {
      if (v < b->second.first || v > b->second.second)
        throw std::invalid_argument("initial guess for '" + name + "' lies outside its bounds");
      prob.names.push_back(name);
      lo.push_back(b->second.first);
      hi.push_back(b->second.second);
      x0.push_back(v);
    } else {
      prob.fixed[name] = v;
    }
  }
  for (const auto& [name, b] : spec.bounds)
    if (!defaults.count(name))
      throw std::invalid_argument("bounds given for unknown parameter '" + name + "'");
  if (prob.names.empty()) throw std::invalid_argument("fit has no free parameters");

  const Eigen::Index m = static_cast<Eigen::Index>(prob.names.size());
  const Eigen::Index n = static_cast<Eigen::Index>(curve.size());
  prob.lo = Eigen::Map<Eigen::VectorXd>(lo.data(), m);
  prob.hi = Eigen::Map<Eigen::VectorXd>(hi.data(), m);
  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(x0.data(), m);

  bool weighted = true;
  for (double s : curve.stderrs) weighted = weighted && s > 0;
  prob.sqrtW = Eigen::VectorXd::Ones(n);
  if (weighted)
    for (Eigen::Index j = 0; j < n; ++j) prob.sqrtW[j] = 1.0 / curve.stderrs[j];

  FitResult res;
  res.family = spec.family;
  res.freeNames = prob.names;
  res.weighted = weighted;

  const FitOptions& opt = spec.options;
  if (!opt.scanParameter.empty()) {
    auto it = std::find(prob.names.begin(), prob.names.end(), opt.scanParameter);
    if (it == prob.names.end()) throw std::invalid_argument("scan parameter must be free");
    const auto i = it - prob.names.begin();
    double best = prob.residual(x).squaredNorm();
    Eigen::VectorXd xs = x, xbest = x;
    for (int s = 0; s < opt.scanPoints; ++s) {
      xs[i] = prob.lo[i] + (prob.hi[i] - prob.lo[i]) * s / std::max(1, opt.scanPoints - 1);
      const double c = prob.residual(xs).squaredNorm();
      if (c < best) {
        best = c;
        xbest = xs;
      }
    }
    x = xbest;
  }

  Eigen::VectorXd r = prob.residual(x);
  double cost = r.squaredNorm();
  double lambda = opt.initialDamping;
  auto relative_step = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) s = std::max(s, std::abs(a[i] - b[i]) / prob.scale(i, b[i]));
    return s;
  };

  Eigen::MatrixXd jac;
  int iter = 0;
  for (; iter < opt.maxIterations && !res.converged; ++iter) {
    if (cost == 0.0) {
      res.converged = true;
      break;
    }
    jac = prob.jacobian(x, r);
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    Eigen::VectorXd d = a.diagonal();
    for (Eigen::Index i = 0; i < m; ++i)
      if (!(d[i] > 0)) d[i] = 1.0;

    bool accepted = false;
    while (!accepted && lambda < 1e20) {
      Eigen::MatrixXd damped = a;
      damped.diagonal() += lambda * d;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      Eigen::VectorXd step = ldlt.solve(-g);
      if (ldlt.info() != Eigen::Success || !step.allFinite()) {
        lambda *= 10;
        continue;
      }
      const Eigen::VectorXd xt = (x + step).cwiseMax(prob.lo).cwiseMin(prob.hi);
      const double rel = relative_step(xt, x);
      const Eigen::VectorXd rt = prob.residual(xt);
      const double ct = rt.squaredNorm();
      if (ct < cost) {
        x = xt;
        r = rt;
        cost = ct;
        lambda = std::max(lambda / 10, 1e-12);
        accepted = true;
        if (rel < opt.relativeStepTolerance) res.converged = true;
      } else {
        // No downhill step left at the resolution of the tolerance.
        if (rel < opt.relativeStepTolerance) {
          res.converged = true;
          break;
        }
        lambda *= 10;
      }
    }
    if (!accepted && !res.converged) {
      res.message = "damping exhausted without a downhill step";
      break;
    }
  }
  res.iterations = iter;
  if (!res.converged && res.message.empty()) res.message = "iteration limit reached";

  res.params = prob.unpack(x);
  res.residualNorm = std::sqrt(cost);

  // Covariance from the final Jacobian; pseudo-inverse on the scaled normal
  // matrix so that degenerate directions show up as a large condition number
  // instead of a failure.
  jac = prob.jacobian(x, r);
  const Eigen::MatrixXd a = jac.transpose() * jac;
  Eigen::VectorXd dscale = a.diagonal().cwiseSqrt();
  for (Eigen::Index i = 0; i < m; ++i)
    if (!(dscale[i] > 0)) dscale[i] = 1.0;
  const Eigen::MatrixXd as = dscale.asDiagonal().inverse() * a * dscale.asDiagonal().inverse();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(as);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double evMax = ev.maxCoeff();
  res.conditionNumber = ev.minCoeff() > 0 ? evMax / ev.minCoeff() : std::numeric_limits<double>::infinity();
  Eigen::VectorXd evInv(m);
  for (Eigen::Index i = 0; i < m; ++i) evInv[i] = ev[i] > evMax * 1e-14 ? 1.0 / ev[i] : 0.0;
  Eigen::MatrixXd cov = dscale.asDiagonal().inverse() * es.eigenvectors() * evInv.asDiagonal() *
                        es.eigenvectors().transpose() * dscale.asDiagonal().inverse();
  if (!weighted && n > m) cov *= cost / static_cast<double>(n - m);
  res.covariance = 0.5 * (cov + cov.transpose());
  for (const auto& [name, v] : res.params) res.errors[name] = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) res.errors[prob.names[i]] = std::sqrt(std::max(0.0, res.covariance(i, i)));

  const auto& p = res.params;
  if (spec.family == FitFamily::FullEnsemble) {
    const ThermalShiftDist th{spec.settings.trapDepth, p.at("temperature"),
                              p.at("circularFraction") * spec.settings.bSigmaPerFraction};
    const double sdExt = gaussian_std_from_width(std::abs(p.at("widthBz")));
    const double sdTh = th.std_shift();
    const double sdTot = std::hypot(sdExt, sdTh);
    res.derived["bSigma0"] = th.bSigma0;
    res.derived["totalStdBz"] = sdTot;
    res.derived["totalWidthBz"] = gaussian_width_from_std(sdTot);
    if (sdTot > 0) res.derived["T2star"] = time_constant_from_width(FieldAxis::Z, gaussian_width_from_std(sdTot));
  } else {
    const FieldAxis axis = spec.family == FitFamily::SuperpositionAnalytic ? FieldAxis::Z : FieldAxis::X;
    res.derived[axis == FieldAxis::Z ? "widthBz" : "widthBx"] = width_from_time_constant(axis, p.at("timeConstant"));
  }
  return res;
}

}  // namespace spincoh
