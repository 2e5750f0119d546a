#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "spincoh/constants.hpp"

// Spin-1 kets and density matrices use the basis order (|1,+1>, |1,0>, |1,-1>)
// throughout, i.e. index 0 is m_F = +1 and index 2 is m_F = -1.

namespace spincoh {

using cplx = std::complex<double>;
using Vec3c = Eigen::Vector3cd;
using Mat3c = Eigen::Matrix3cd;

inline constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

struct FieldVector {
  double bx = 0.0;  // T
  double by = 0.0;  // T
  double bz = 0.0;  // T

  double magnitude() const { return std::sqrt(bx * bx + by * by + bz * bz); }
  FieldVector operator+(const FieldVector& o) const { return {bx + o.bx, by + o.by, bz + o.bz}; }
  FieldVector operator*(double s) const { return {bx * s, by * s, bz * s}; }
  bool operator==(const FieldVector&) const = default;
};

/// Normalized spin-1 ket.
class Spin1State {
 public:
  static constexpr double kNormTolerance = 1e-12;

  Spin1State() : amp_(1.0, 0.0, 0.0) {}

  /// Throws std::invalid_argument unless |c+|^2 + |c0|^2 + |c-|^2 = 1.
  explicit Spin1State(const Vec3c& amplitudes) : amp_(amplitudes) {
    if (!amp_.allFinite() || std::abs(amp_.squaredNorm() - 1.0) > kNormTolerance)
      throw std::invalid_argument("spin-1 state must be normalized");
  }
  Spin1State(cplx plus, cplx zero, cplx minus) : Spin1State(Vec3c(plus, zero, minus)) {}

  static Spin1State normalized(const Vec3c& v) {
    const double n = v.norm();
    if (!(n > 0) || !std::isfinite(n)) throw std::invalid_argument("cannot normalize a zero vector");
    return Spin1State(Vec3c(v / n));
  }

  static Spin1State plus() { return {1.0, 0.0, 0.0}; }
  static Spin1State zero() { return {0.0, 1.0, 0.0}; }
  static Spin1State minus() { return {0.0, 0.0, 1.0}; }
  /// (|1,-1> + |1,+1>)/sqrt2, the sigma_x = +1 qubit state.
  static Spin1State x_plus() { return {kInvSqrt2, 0.0, kInvSqrt2}; }
  /// (|1,-1> - |1,+1>)/sqrt2
  static Spin1State x_minus() { return {-kInvSqrt2, 0.0, kInvSqrt2}; }
  /// (|1,-1> - i|1,+1>)/sqrt2, the sigma_y = +1 qubit state (|1,+1> is the
  /// +z pole of the qubit).
  static Spin1State y_plus() { return {cplx(0, -kInvSqrt2), 0.0, kInvSqrt2}; }
  /// (|1,-1> + i|1,+1>)/sqrt2
  static Spin1State y_minus() { return {cplx(0, kInvSqrt2), 0.0, kInvSqrt2}; }

  const Vec3c& amplitudes() const { return amp_; }
  cplx operator[](int i) const { return amp_[i]; }
  cplx overlap(const Spin1State& other) const { return amp_.dot(other.amp_); }  // <this|other>

 private:
  Vec3c amp_;
};

/// Hermitian, unit-trace, positive semidefinite 3x3 matrix.
class Spin1Density {
 public:
  static constexpr double kTolerance = 1e-12;
  static constexpr double kEigenTolerance = 1e-10;

  Spin1Density() : rho_(Mat3c::Identity() / 3.0) {}

  /// Throws std::invalid_argument if the matrix is not a valid density.
  explicit Spin1Density(const Mat3c& rho) : rho_(rho) {
    if (!rho_.allFinite()) throw std::invalid_argument("density matrix has non-finite entries");
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kTolerance)
      throw std::invalid_argument("density matrix is not Hermitian");
    if (std::abs(rho_.trace() - 1.0) > kTolerance) throw std::invalid_argument("density matrix trace is not 1");
    Eigen::SelfAdjointEigenSolver<Mat3c> es(rho_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kEigenTolerance)
      throw std::invalid_argument("density matrix is not positive semidefinite");
  }

  static Spin1Density pure(const Spin1State& s) {
    return Spin1Density(Mat3c(s.amplitudes() * s.amplitudes().adjoint()));
  }
  static Spin1Density maximally_mixed() { return {}; }

  const Mat3c& matrix() const { return rho_; }
  cplx operator()(int r, int c) const { return rho_(r, c); }
  double population(int i) const { return rho_(i, i).real(); }
  double trace_rho_sq() const { return (rho_ * rho_).trace().real(); }
  /// <s|rho|s>
  double expectation(const Spin1State& s) const {
    return s.amplitudes().dot(rho_ * s.amplitudes()).real();
  }

 private:
  Mat3c rho_;
};

/// Spin-1 angular momentum matrices in units of hbar.
struct SpinMatrices {
  Mat3c fx, fy, fz;
};

inline SpinMatrices spin1_matrices() {
  const double s = kInvSqrt2;
  const cplx i(0, 1);
  SpinMatrices m;
  m.fx << 0, s, 0, s, 0, s, 0, s, 0;
  m.fy << 0, -i * s, 0, i * s, 0, -i * s, 0, i * s, 0;
  m.fz << 1, 0, 0, 0, 0, 0, 0, 0, -1;
  return m;
}

/// H/hbar = (muB gF / hbar) B . F, in rad/s.
inline Mat3c hamiltonian(const FieldVector& b, const PhysicalConstants& k = kConstants) {
  const auto m = spin1_matrices();
  return k.larmor_per_tesla() * (b.bx * m.fx + b.by * m.fy + b.bz * m.fz);
}

/// Eigenbasis of the Zeeman Hamiltonian in a static field.
struct EigenFrame {
  // Index 0 -> eigenvalue +hbar omegaL, 1 -> 0, 2 -> -hbar omegaL.
  std::array<Vec3c, 3> phi;
  double omegaL = 0.0;  // rad/s, signed with gF

  const Vec3c& plus() const { return phi[0]; }
  const Vec3c& zero() const { return phi[1]; }
  const Vec3c& minus() const { return phi[2]; }
};

/// Closed-form eigenvectors for a field of polar cosine bz and azimuth phi.
/// B = 0 returns the canonical basis with omegaL = 0; phi = 0 on the z axis.
inline EigenFrame eigenframe(const FieldVector& field, const PhysicalConstants& k = kConstants) {
  EigenFrame f;
  const double b = field.magnitude();
  if (b == 0.0) {
    f.phi = {Vec3c(1, 0, 0), Vec3c(0, 1, 0), Vec3c(0, 0, 1)};
    return f;
  }
  const double bz = std::clamp(field.bz / b, -1.0, 1.0);
  const double transverse = std::hypot(field.bx, field.by);
  const double phi = transverse > 0.0 ? std::atan2(field.by, field.bx) : 0.0;
  // sqrt(1 - bz^2) from the transverse part avoids cancellation near the poles.
  const double st = transverse / b;
  const cplx em = std::polar(1.0, -phi);
  const cplx ep = std::polar(1.0, phi);
  f.phi[0] = Vec3c(0.5 * (1 + bz) * em, kInvSqrt2 * st, 0.5 * (1 - bz) * ep);
  f.phi[1] = Vec3c(-kInvSqrt2 * st * em, bz, kInvSqrt2 * st * ep);
  f.phi[2] = Vec3c(0.5 * (1 - bz) * em, -kInvSqrt2 * st, 0.5 * (1 + bz) * ep);
  f.omegaL = k.larmor_per_tesla() * b;
  return f;
}

/// exp(-i H t / hbar) as a matrix.
inline Mat3c propagator(const EigenFrame& f, double t) {
  Mat3c u = Mat3c::Zero();
  for (int m = 0; m < 3; ++m) {
    const cplx phase = std::polar(1.0, -(1 - m) * f.omegaL * t);
    u += phase * f.phi[m] * f.phi[m].adjoint();
  }
  return u;
}

inline Mat3c propagator(const FieldVector& field, double t, const PhysicalConstants& k = kConstants) {
  return propagator(eigenframe(field, k), t);
}

namespace detail {
inline Vec3c evolve_raw(const Vec3c& psi, const EigenFrame& f, double t) {
  Vec3c out = Vec3c::Zero();
  for (int m = 0; m < 3; ++m) out += (f.phi[m].dot(psi) * std::polar(1.0, -(1 - m) * f.omegaL * t)) * f.phi[m];
  return out;
}
// Renormalize away accumulated rounding; the map itself is unitary.
inline Spin1State renormalized(const Vec3c& v) { return Spin1State(Vec3c(v / v.norm())); }
}  // namespace detail

inline Spin1State evolve(const Spin1State& state, const EigenFrame& frame, double t) {
  return detail::renormalized(detail::evolve_raw(state.amplitudes(), frame, t));
}

inline Spin1State evolve(const Spin1State& state, const FieldVector& field, double t,
                         const PhysicalConstants& k = kConstants) {
  return evolve(state, eigenframe(field, k), t);
}

inline double survival_probability(const Spin1State& init, const Spin1State& analysis, const FieldVector& field,
                                   double t, const PhysicalConstants& k = kConstants) {
  const EigenFrame f = eigenframe(field, k);
  return std::norm(analysis.amplitudes().dot(detail::evolve_raw(init.amplitudes(), f, t)));
}

inline Spin1Density evolve_density(const Spin1Density& rho, const FieldVector& field, double t,
                                   const PhysicalConstants& k = kConstants) {
  const Mat3c u = propagator(field, t, k);
  Mat3c out = u * rho.matrix() * u.adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  out /= out.trace().real();
  return Spin1Density(out);
}

/// Survival amplitude of a fixed (init, analysis) pair in one static field,
/// factored so that many times can be evaluated cheaply:
///   <analysis|psi(t)> = sum_m w_m exp(-i m omegaL t).
struct SurvivalKernel {
  std::array<cplx, 3> weight{};
  double omegaL = 0.0;

  SurvivalKernel() = default;
  SurvivalKernel(const Spin1State& init, const Spin1State& analysis, const EigenFrame& f) : omegaL(f.omegaL) {
    for (int m = 0; m < 3; ++m)
      weight[m] = analysis.amplitudes().dot(f.phi[m]) * f.phi[m].dot(init.amplitudes());
  }

  double operator()(double t) const {
    const cplx e = std::polar(1.0, -omegaL * t);
    const cplx amp = weight[0] * e + weight[1] + weight[2] * std::conj(e);
    return std::min(1.0, std::norm(amp));
  }
};

struct PropagationDiagnostics {
  double maxPhasePerStep = 0.0;  // max |omegaL| dt over the samples, rad
  bool coarse = false;           // maxPhasePerStep > kCoarsePhase
  static constexpr double kCoarsePhase = 0.1;
};

/// Piecewise-constant propagation: each sample is the field held for one
/// step of length dt (callers sample at step midpoints). Every step is an
/// exact unitary.
inline Spin1State propagate_piecewise(const Spin1State& state, std::span<const FieldVector> fieldSamples, double dt,
                                      PropagationDiagnostics* diag = nullptr,
                                      const PhysicalConstants& k = kConstants) {
  if (!(dt > 0)) throw std::invalid_argument("propagation step must be positive");
  Vec3c psi = state.amplitudes();
  double maxPhase = 0.0;
  for (const auto& b : fieldSamples) {
    const EigenFrame f = eigenframe(b, k);
    maxPhase = std::max(maxPhase, std::abs(f.omegaL) * dt);
    psi = detail::evolve_raw(psi, f, dt);
  }
  if (diag) {
    diag->maxPhasePerStep = maxPhase;
    diag->coarse = maxPhase > PropagationDiagnostics::kCoarsePhase;
  }
  return detail::renormalized(psi);
}

/// Field samples at the midpoints t0 + (i + 1/2) dt of n steps.
template <class FieldOfTime>
std::vector<FieldVector> sample_midpoints(FieldOfTime&& fieldAt, double t0, double dt, std::size_t n) {
  std::vector<FieldVector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(fieldAt(t0 + (static_cast<double>(i) + 0.5) * dt));
  return out;
}

}  // namespace spincoh
