#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "spincoh/rng.hpp"
#include "spincoh/spin1.hpp"

// Partial spin-1 tomography: Stern-Gerlach-like readout of the qubit
// subspace span{|1,+1>, |1,-1>} in the three Pauli bases, with |1,0> only
// seen as population missing from that subspace.

namespace spincoh {

enum class PauliBasis { X = 0, Y = 1, Z = 2 };

inline const char* to_string(PauliBasis b) {
  switch (b) {
    case PauliBasis::X: return "sx";
    case PauliBasis::Y: return "sy";
    case PauliBasis::Z: return "sz";
  }
  return "?";
}

inline PauliBasis pauli_basis_from_string(const std::string& s) {
  if (s == "sx" || s == "x") return PauliBasis::X;
  if (s == "sy" || s == "y") return PauliBasis::Y;
  if (s == "sz" || s == "z") return PauliBasis::Z;
  throw std::invalid_argument("unknown basis '" + s + "' (expected sx, sy or sz)");
}

/// (+1 eigenstate, -1 eigenstate) of a qubit Pauli operator, |1,+1> being the
/// +z pole: sz -> |1,+1>, |1,-1>;  sx -> (|1,-1> +- |1,+1>)/sqrt2;
/// sy -> (|1,-1> -+ i|1,+1>)/sqrt2.
inline std::pair<Spin1State, Spin1State> basis_states(PauliBasis b) {
  switch (b) {
    case PauliBasis::X: return {Spin1State::x_plus(), Spin1State::x_minus()};
    case PauliBasis::Y: return {Spin1State::y_plus(), Spin1State::y_minus()};
    case PauliBasis::Z: return {Spin1State::plus(), Spin1State::minus()};
  }
  throw std::invalid_argument("unknown basis");
}

struct MeasurementRecord {
  PauliBasis basis = PauliBasis::Z;
  long shots = 0;
  long countPlus = 0;
  long countMinus = 0;
  long countOutside = 0;  // found in |1,0>

  void validate() const {
    if (shots < 1) throw std::invalid_argument("measurement record needs shots >= 1");
    if (countPlus < 0 || countMinus < 0 || countOutside < 0 || countPlus + countMinus + countOutside != shots)
      throw std::invalid_argument("measurement counts must be nonnegative and sum to shots");
  }
};

/// Born probabilities (plus, minus, outside) of one basis.
inline std::array<double, 3> outcome_probabilities(const Spin1Density& rho, PauliBasis basis) {
  const auto [ep, em] = basis_states(basis);
  std::array<double, 3> p{std::max(0.0, rho.expectation(ep)), std::max(0.0, rho.expectation(em)),
                          std::max(0.0, rho.population(1))};
  const double s = p[0] + p[1] + p[2];
  for (double& v : p) v /= s;
  return p;
}

/// Multinomial finite-shot readout. The stream is (seed, 3 * streamIndex +
/// basis) so the three bases of one reconstruction, and different time
/// points, draw independently.
inline MeasurementRecord simulate_measurement(const Spin1Density& rho, PauliBasis basis, long shots,
                                              std::uint64_t seed, std::uint64_t streamIndex = 0) {
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  const auto p = outcome_probabilities(rho, basis);
  CounterStream s(seed, 3 * streamIndex + static_cast<std::uint64_t>(basis), StreamDomain::Measurement);
  MeasurementRecord rec{basis, shots, 0, 0, 0};
  for (long i = 0; i < shots; ++i) {
    const double u = s.uniform();
    if (u < p[0])
      ++rec.countPlus;
    else if (u < p[0] + p[1])
      ++rec.countMinus;
    else
      ++rec.countOutside;
  }
  return rec;
}

enum class ExpectationNormalization {
  Conditional,  // <sigma_i> within the qubit subspace: (n+ - n-) / (n+ + n-)
  Absolute,     // (n+ - n-) / shots
};

struct PauliExpectations {
  double ex = 0.0, ey = 0.0, ez = 0.0;
  double pSub = 1.0;  // population of span{|1,+1>, |1,-1>}
  ExpectationNormalization normalization = ExpectationNormalization::Conditional;
};

inline PauliExpectations expectations_from_records(
    std::span<const MeasurementRecord> records,
    ExpectationNormalization norm = ExpectationNormalization::Conditional) {
  std::array<const MeasurementRecord*, 3> byBasis{};
  for (const auto& r : records) {
    r.validate();
    auto& slot = byBasis[static_cast<int>(r.basis)];
    if (slot) throw std::invalid_argument(std::string("duplicate record for basis ") + to_string(r.basis));
    slot = &r;
  }
  PauliExpectations e;
  e.normalization = norm;
  double pSub = 0.0;
  std::array<double, 3> val{};
  for (int b = 0; b < 3; ++b) {
    const MeasurementRecord* r = byBasis[b];
    if (!r) throw std::invalid_argument(std::string("missing record for basis ") + to_string(PauliBasis(b)));
    const double in = static_cast<double>(r->countPlus + r->countMinus);
    if (in == 0)
      throw std::domain_error(std::string("no counts inside the qubit subspace for basis ") +
                              to_string(PauliBasis(b)));
    const double diff = static_cast<double>(r->countPlus - r->countMinus);
    val[b] = norm == ExpectationNormalization::Conditional ? diff / in : diff / static_cast<double>(r->shots);
    pSub += in / static_cast<double>(r->shots);
  }
  e.ex = val[0];
  e.ey = val[1];
  e.ez = val[2];
  e.pSub = pSub / 3.0;
  return e;
}

/// Expectations a perfect (infinite-shot) measurement of rho would give.
inline PauliExpectations exact_expectations(const Spin1Density& rho,
                                            ExpectationNormalization norm = ExpectationNormalization::Conditional) {
  PauliExpectations e;
  e.normalization = norm;
  e.pSub = rho.population(0) + rho.population(2);
  if (norm == ExpectationNormalization::Conditional && !(e.pSub > 0))
    throw std::domain_error("conditional expectations need population in the qubit subspace");
  std::array<double, 3> val{};
  for (int b = 0; b < 3; ++b) {
    const auto [ep, em] = basis_states(PauliBasis(b));
    const double diff = rho.expectation(ep) - rho.expectation(em);
    val[b] = norm == ExpectationNormalization::Conditional ? diff / e.pSub : diff;
  }
  e.ex = val[0];
  e.ey = val[1];
  e.ez = val[2];
  return e;
}

/// Block-diagonal form: the qubit block of rho, rho_00 on |1,0>, and the
/// unmeasurable |1,0> coherences set to zero.
inline Spin1Density partial_tomography_form(const Spin1Density& rho) {
  Mat3c m = rho.matrix();
  m(0, 1) = m(1, 0) = m(1, 2) = m(2, 1) = 0.0;
  return Spin1Density(m);
}

struct Reconstruction {
  Spin1Density rho;
  bool repaired = false;  // the raw estimate was not PSD and was projected
};

inline Reconstruction reconstruct_density(const PauliExpectations& e) {
  if (!(e.pSub >= 0.0 && e.pSub <= 1.0 + 1e-12)) throw std::invalid_argument("subspace population outside [0, 1]");
  const double ps = std::min(e.pSub, 1.0);
  // rho_s = (pSub/2)(1 + e.sigma) conditional, (1/2)(pSub + e.sigma) absolute.
  const double f = e.normalization == ExpectationNormalization::Conditional ? 0.5 * ps : 0.5;
  Mat3c m = Mat3c::Zero();
  m(0, 0) = 0.5 * ps + f * e.ez;
  m(2, 2) = 0.5 * ps - f * e.ez;
  m(0, 2) = f * cplx(e.ex, -e.ey);
  m(2, 0) = std::conj(m(0, 2));
  m(1, 1) = 1.0 - ps;

  Eigen::SelfAdjointEigenSolver<Mat3c> es(m);
  if (es.eigenvalues().minCoeff() >= -Spin1Density::kEigenTolerance) return {Spin1Density(m), false};
  Eigen::Vector3d ev = es.eigenvalues().cwiseMax(0.0);
  ev /= ev.sum();
  Mat3c fixed = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  fixed = 0.5 * (fixed + fixed.adjoint()).eval();
  return {Spin1Density(fixed), true};
}

struct PurityReport {
  double r = 0.0;
  double traceRhoSq = 0.0;
};

/// Weight r of the closest pure state in rho = r |chi><chi| + (1 - r) 1/3.
inline PurityReport purity_parameter(const Spin1Density& rho) {
  const double tr = rho.trace_rho_sq();
  return {std::sqrt(std::clamp(0.5 * (3.0 * tr - 1.0), 0.0, 1.0)), tr};
}

/// Full partial-tomography chain for one density: three simulated bases,
/// expectations, reconstruction.
inline Reconstruction tomograph(const Spin1Density& rho, long shots, std::uint64_t seed, std::uint64_t streamIndex = 0,
                                ExpectationNormalization norm = ExpectationNormalization::Conditional) {
  std::array<MeasurementRecord, 3> recs{simulate_measurement(rho, PauliBasis::X, shots, seed, streamIndex),
                                        simulate_measurement(rho, PauliBasis::Y, shots, seed, streamIndex),
                                        simulate_measurement(rho, PauliBasis::Z, shots, seed, streamIndex)};
  return reconstruct_density(expectations_from_records(recs, norm));
}

}  // namespace spincoh
