#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "spincoh/noise.hpp"
#include "spincoh/quadrature.hpp"
#include "spincoh/rng.hpp"
#include "spincoh/spin1.hpp"
#include "spincoh/units.hpp"

namespace spincoh {

/// Strictly increasing evaluation times starting at 0 (seconds).
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.empty()) throw std::invalid_argument("time grid is empty");
    if (times_.front() != 0.0) throw std::invalid_argument("time grid must start at 0");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");
  }

  /// 0, step, 2 step, ... up to and including tMax (within rounding).
  static TimeGrid uniform(double tMax, double step) {
    if (!(step > 0) || !(tMax >= 0)) throw std::invalid_argument("time grid needs step > 0 and tMax >= 0");
    const auto n = static_cast<std::size_t>(std::floor(tMax / step + 1e-9)) + 1;
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) * step;
    return TimeGrid(std::move(t));
  }

  /// 0-200 us in 2 us steps.
  static TimeGrid standard() { return uniform(200 * units::microsecond, 2 * units::microsecond); }

  const std::vector<double>& times() const { return times_; }
  std::size_t size() const { return times_.size(); }
  double operator[](std::size_t i) const { return times_[i]; }

 private:
  std::vector<double> times_;
};

struct DecayCurve {
  TimeGrid grid;
  std::vector<double> probabilities;
  std::vector<double> stderrs;
  std::string meta;

  std::size_t size() const { return grid.size(); }
  void validate() const {
    if (probabilities.size() != grid.size() || stderrs.size() != grid.size())
      throw std::invalid_argument("decay curve columns have different lengths");
    for (double p : probabilities)
      if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("decay curve probability outside [0, 1]");
    for (double s : stderrs)
      if (!(s >= 0.0)) throw std::invalid_argument("decay curve stderr must be >= 0");
  }
};

enum class AnalyticKind {
  Superposition,  // 1/2 (1 + exp(-(t/T2*)^2)), longitudinal Gaussian noise
  Stretched,      // (3 + 5 exp(-(t/T)^2)) / 8, transverse Gaussian noise
};

inline double analytic_survival(AnalyticKind kind, double t, double timeConstant) {
  if (!(timeConstant > 0)) throw std::invalid_argument("time constant must be positive");
  if (!(t >= 0)) throw std::invalid_argument("time must be >= 0");
  const double x = t / timeConstant;
  const double e = std::exp(-x * x);
  switch (kind) {
    case AnalyticKind::Superposition: return 0.5 * (1.0 + e);
    case AnalyticKind::Stretched: return (3.0 + 5.0 * e) / 8.0;
  }
  throw std::invalid_argument("unknown analytic kind");
}

enum class FieldAxis { Z, X };

/// Dephasing time for a Gaussian field of 1/e half-width `width` (tesla):
/// T2* = hbar / (muB |gF| w) along z, twice that along x.
inline double time_constant_from_width(FieldAxis axis, double width, const PhysicalConstants& k = kConstants) {
  if (!(width > 0)) throw std::invalid_argument("field width must be positive");
  const double t2 = k.hbar / (k.muB * std::abs(k.gF) * width);
  return axis == FieldAxis::Z ? t2 : 2.0 * t2;
}

inline double width_from_time_constant(FieldAxis axis, double timeConstant,
                                       const PhysicalConstants& k = kConstants) {
  if (!(timeConstant > 0)) throw std::invalid_argument("time constant must be positive");
  const double w = k.hbar / (k.muB * std::abs(k.gF) * timeConstant);
  return axis == FieldAxis::Z ? w : 2.0 * w;
}

struct EnsembleOptions {
  unsigned workers = 0;             // 0 -> hardware concurrency
  std::size_t blockSize = 1024;     // samples per reduction leaf; fixes the summation order
};

namespace detail {

inline unsigned resolve_workers(unsigned requested, std::size_t jobs) {
  unsigned w = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(w, std::max<std::size_t>(jobs, 1)));
}

/// Runs job(b) for b in [0, nJobs) on a small thread pool. Which thread runs
/// a job never affects its result.
template <class Job>
void parallel_for(std::size_t nJobs, unsigned workers, Job&& job) {
  workers = resolve_workers(workers, nJobs);
  if (workers <= 1) {
    for (std::size_t b = 0; b < nJobs; ++b) job(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t b = next++; b < nJobs; b = next++) job(b);
    });
}

/// Pairwise tree sum of equally sized vectors, in index order.
template <class T>
T tree_reduce(std::vector<T> parts) {
  if (parts.empty()) return {};
  while (parts.size() > 1) {
    std::vector<T> next;
    next.reserve((parts.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
      T s = std::move(parts[i]);
      for (std::size_t j = 0; j < s.size(); ++j) s[j] += parts[i + 1][j];
      next.push_back(std::move(s));
    }
    if (parts.size() % 2) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return std::move(parts.front());
}

}  // namespace detail

/// Monte Carlo average of |<analysis|psi(t)>|^2 over nSamples static field
/// realizations. Bitwise reproducible for a given seed and blockSize,
/// independent of the worker count.
inline DecayCurve ensemble_survival(const Spin1State& init, const Spin1State& analysis, const FieldNoiseModel& model,
                                    const TimeGrid& grid, std::size_t nSamples, std::uint64_t seed,
                                    const EnsembleOptions& opts = {}, const PhysicalConstants& k = kConstants) {
  if (nSamples < 100) throw std::invalid_argument("ensemble needs at least 100 samples");
  if (opts.blockSize == 0) throw std::invalid_argument("block size must be positive");
  model.validate();
  const std::size_t nt = grid.size();
  const std::size_t nBlocks = (nSamples + opts.blockSize - 1) / opts.blockSize;
  std::vector<std::vector<double>> partial(nBlocks);

  detail::parallel_for(nBlocks, opts.workers, [&](std::size_t b) {
    std::vector<double> acc(2 * nt, 0.0);  // [sum p | sum p^2]
    const std::size_t end = std::min(nSamples, (b + 1) * opts.blockSize);
    for (std::size_t i = b * opts.blockSize; i < end; ++i) {
      const SurvivalKernel kernel(init, analysis, eigenframe(sample_field(model, i, seed, k), k));
      for (std::size_t j = 0; j < nt; ++j) {
        const double p = kernel(grid[j]);
        acc[j] += p;
        acc[nt + j] += p * p;
      }
    }
    partial[b] = std::move(acc);
  });

  const std::vector<double> total = detail::tree_reduce(std::move(partial));
  DecayCurve out{grid, std::vector<double>(nt), std::vector<double>(nt),
                 "monte-carlo samples=" + std::to_string(nSamples) + " seed=" + std::to_string(seed)};
  const double n = static_cast<double>(nSamples);
  for (std::size_t j = 0; j < nt; ++j) {
    const double mean = total[j] / n;
    const double var = std::max(0.0, (total[nt + j] - n * mean * mean) / (n - 1.0));
    out.probabilities[j] = std::clamp(mean, 0.0, 1.0);
    out.stderrs[j] = std::sqrt(var / n);
  }
  return out;
}

struct WeightedField {
  double weight;
  FieldVector field;
};

/// Deterministic node set for a model whose randomness sits on one axis.
/// Gaussian spreads use Gauss-Hermite, uniform spreads Gauss-Legendre and the
/// thermal light shift generalized Gauss-Laguerre with weight sqrt(x) e^-x.
/// Several spreads on the same axis combine as a tensor product.
inline std::vector<WeightedField> quadrature_nodes(const FieldNoiseModel& model, int nodesPerComponent = 64,
                                                   const PhysicalConstants& k = kConstants) {
  model.validate();
  if (model.fluctuating_axes() > 1)
    throw std::invalid_argument("quadrature needs randomness on at most one axis; use Monte Carlo");
  if (nodesPerComponent < 1) throw std::invalid_argument("quadrature needs at least one node");

  // 1-D rule for each component as (weight, additive field value).
  using Rule1D = std::vector<std::pair<double, double>>;
  auto axis_rule = [&](const AxisNoise& a) -> Rule1D {
    if (auto g = std::get_if<GaussianFieldDist>(&a.spread); g && g->width > 0) {
      const auto q = gauss_hermite(nodesPerComponent);
      Rule1D r;
      for (std::size_t i = 0; i < q.size(); ++i)
        r.emplace_back(q.weights[i] / std::sqrt(std::numbers::pi), a.offset + g->mean + g->width * q.nodes[i]);
      return r;
    }
    if (auto u = std::get_if<UniformFieldDist>(&a.spread); u && u->hi > u->lo) {
      const auto q = gauss_legendre(nodesPerComponent);
      Rule1D r;
      for (std::size_t i = 0; i < q.size(); ++i)
        r.emplace_back(0.5 * q.weights[i], a.offset + u->lo + 0.5 * (u->hi - u->lo) * (q.nodes[i] + 1.0));
      return r;
    }
    return {{1.0, a.mean()}};
  };

  const Rule1D rx = axis_rule(model.x), ry = axis_rule(model.y);
  Rule1D rz = axis_rule(model.z);
  if (model.thermal) {
    const ThermalShiftDist& th = *model.thermal;
    Rule1D rt;
    if (th.bSigma0 != 0.0) {
      const auto q = gauss_laguerre(nodesPerComponent, 0.5);
      const double norm = std::tgamma(1.5);
      const double perUnit = th.kT(k) * th.bSigma0 / th.trapDepth;
      for (std::size_t i = 0; i < q.size(); ++i)
        rt.emplace_back(q.weights[i] / norm, th.bSigma0 - perUnit * q.nodes[i]);
    } else {
      rt = {{1.0, 0.0}};
    }
    Rule1D combined;
    combined.reserve(rz.size() * rt.size());
    for (const auto& [wz, bz] : rz)
      for (const auto& [wt, bt] : rt) combined.emplace_back(wz * wt, bz + bt);
    rz = std::move(combined);
  }

  std::vector<WeightedField> out;
  out.reserve(rx.size() * ry.size() * rz.size());
  for (const auto& [wx, bx] : rx)
    for (const auto& [wy, by] : ry)
      for (const auto& [wz, bz] : rz) out.push_back({wx * wy * wz, {bx, by, bz}});
  return out;
}

/// Deterministic evaluation of the ensemble average; stderr is zero.
inline DecayCurve quadrature_survival(const Spin1State& init, const Spin1State& analysis,
                                      const FieldNoiseModel& model, const TimeGrid& grid,
                                      int nodesPerComponent = 64, const PhysicalConstants& k = kConstants) {
  const auto nodes = quadrature_nodes(model, nodesPerComponent, k);
  const std::size_t nt = grid.size();
  std::vector<double> p(nt, 0.0);
  for (const auto& node : nodes) {
    const SurvivalKernel kernel(init, analysis, eigenframe(node.field, k));
    for (std::size_t j = 0; j < nt; ++j) p[j] += node.weight * kernel(grid[j]);
  }
  for (double& v : p) v = std::clamp(v, 0.0, 1.0);
  return {grid, std::move(p), std::vector<double>(nt, 0.0),
          "quadrature nodes=" + std::to_string(nodes.size())};
}

enum class EnsembleMethod { MonteCarlo, Quadrature };

/// Ensemble-averaged density matrix rho(t) = E[|psi(t)><psi(t)|] on the grid.
inline std::vector<Spin1Density> ensemble_density(const Spin1State& init, const FieldNoiseModel& model,
                                                  const TimeGrid& grid, EnsembleMethod method,
                                                  std::size_t nSamples, std::uint64_t seed, int quadNodes = 64,
                                                  const EnsembleOptions& opts = {},
                                                  const PhysicalConstants& k = kConstants) {
  const std::size_t nt = grid.size();
  // Flattened real/imag parts of the nine entries per time point.
  const std::size_t width = 18 * nt;
  auto accumulate = [&](std::vector<double>& acc, const FieldVector& b, double w) {
    const EigenFrame f = eigenframe(b, k);
    for (std::size_t j = 0; j < nt; ++j) {
      const Vec3c psi = detail::evolve_raw(init.amplitudes(), f, grid[j]);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
          const cplx v = w * psi[r] * std::conj(psi[c]);
          acc[18 * j + 2 * (3 * r + c)] += v.real();
          acc[18 * j + 2 * (3 * r + c) + 1] += v.imag();
        }
    }
  };

  std::vector<double> total(width, 0.0);
  if (method == EnsembleMethod::Quadrature) {
    for (const auto& node : quadrature_nodes(model, quadNodes, k)) accumulate(total, node.field, node.weight);
  } else {
    if (nSamples < 100) throw std::invalid_argument("ensemble needs at least 100 samples");
    model.validate();
    const std::size_t nBlocks = (nSamples + opts.blockSize - 1) / opts.blockSize;
    std::vector<std::vector<double>> partial(nBlocks);
    detail::parallel_for(nBlocks, opts.workers, [&](std::size_t b) {
      std::vector<double> acc(width, 0.0);
      const std::size_t end = std::min(nSamples, (b + 1) * opts.blockSize);
      for (std::size_t i = b * opts.blockSize; i < end; ++i) accumulate(acc, sample_field(model, i, seed, k), 1.0);
      partial[b] = std::move(acc);
    });
    total = detail::tree_reduce(std::move(partial));
    for (double& v : total) v /= static_cast<double>(nSamples);
  }

  std::vector<Spin1Density> out;
  out.reserve(nt);
  for (std::size_t j = 0; j < nt; ++j) {
    Mat3c m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = cplx(total[18 * j + 2 * (3 * r + c)], total[18 * j + 2 * (3 * r + c) + 1]);
    m = 0.5 * (m + m.adjoint()).eval();
    m /= m.trace().real();
    out.emplace_back(m);
  }
  return out;
}

/// Replace each probability by a binomial draw of `shots` trials; stderr is
/// the standard deviation of the Beta(k+1, n-k+1) posterior, so it never
/// vanishes at 0 or 1.
inline DecayCurve binomial_resample(const DecayCurve& curve, int shots, std::uint64_t seed) {
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  DecayCurve out = curve;
  const double n = shots;
  for (std::size_t j = 0; j < curve.size(); ++j) {
    CounterStream s(seed, j, StreamDomain::SyntheticData);
    int hits = 0;
    for (int i = 0; i < shots; ++i) hits += s.uniform() < curve.probabilities[j];
    const double a = hits + 1.0, b = n - hits + 1.0;
    out.probabilities[j] = hits / n;
    out.stderrs[j] = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)));
  }
  out.meta = curve.meta + "; binomial shots=" + std::to_string(shots) + " seed=" + std::to_string(seed);
  return out;
}

/// Additive Gaussian noise of standard deviation sigma, clipped to [0, 1].
inline DecayCurve add_gaussian_noise(const DecayCurve& curve, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0)) throw std::invalid_argument("noise sigma must be >= 0");
  DecayCurve out = curve;
  for (std::size_t j = 0; j < curve.size(); ++j) {
    CounterStream s(seed, j, StreamDomain::SyntheticData);
    out.probabilities[j] = std::clamp(curve.probabilities[j] + sigma * s.normal(), 0.0, 1.0);
    out.stderrs[j] = sigma;
  }
  out.meta = curve.meta + "; gaussian noise sigma=" + std::to_string(sigma);
  return out;
}

}  // namespace spincoh
