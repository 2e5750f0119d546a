#include <gtest/gtest.h>

#include <cmath>

#include "spincoh/ensemble.hpp"
#include "spincoh/trap.hpp"

using namespace spincoh;

namespace {
const double kMg = units::milligauss;
const double kUs = units::microsecond;

FieldNoiseModel gaussian_z(double width, double offset = 0.0) {
  FieldNoiseModel m;
  m.z.offset = offset;
  m.z.spread = GaussianFieldDist{0, width};
  return m;
}

FieldNoiseModel gaussian_x(double width) {
  FieldNoiseModel m;
  m.x.spread = GaussianFieldDist{0, width};
  return m;
}

ThermalShiftDist paper_thermal(double fraction) {
  return {uK_to_J(650), 150 * units::microkelvin, fraction * vector_shift_field(TrapConfig::reference(), {1.0, +1})};
}

// Exact Gaussian average of cos^4(theta/2) for |1,+1> under transverse noise.
double exact_transverse(double t, double T) {
  const double x = t / T;
  return 3.0 / 8 + 0.5 * std::exp(-x * x) + 0.125 * std::exp(-4 * x * x);
}
}  // namespace

TEST(TimeGrid, Validation) {
  EXPECT_THROW(TimeGrid(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(TimeGrid(std::vector<double>{1e-6, 2e-6}), std::invalid_argument);
  EXPECT_THROW(TimeGrid(std::vector<double>{0, 2e-6, 2e-6}), std::invalid_argument);
  const auto g = TimeGrid::standard();
  EXPECT_EQ(g.size(), 101u);
  EXPECT_NEAR(g.times().back(), 200 * kUs, 1e-18);
  EXPECT_THROW(TimeGrid::uniform(1e-4, 0.0), std::invalid_argument);
}

TEST(AnalyticSurvival, SpecialValues) {
  EXPECT_DOUBLE_EQ(analytic_survival(AnalyticKind::Superposition, 0, 75 * kUs), 1.0);
  EXPECT_DOUBLE_EQ(analytic_survival(AnalyticKind::Stretched, 0, 75 * kUs), 1.0);
  EXPECT_NEAR(analytic_survival(AnalyticKind::Superposition, 75 * kUs, 75 * kUs), 0.6839397205857212, 1e-15);
  EXPECT_NEAR(analytic_survival(AnalyticKind::Stretched, 1.0, 75 * kUs), 0.375, 1e-15);
  EXPECT_THROW(analytic_survival(AnalyticKind::Stretched, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(analytic_survival(AnalyticKind::Stretched, -1.0, 1.0), std::invalid_argument);
}

TEST(TimeConstant, WidthConversions) {
  // 2.25 mG std -> 3.18 mG width -> 71.5 us.
  const double w = gaussian_width_from_std(2.25 * kMg);
  EXPECT_NEAR(w / kMg, 3.182, 1e-3);
  EXPECT_NEAR(time_constant_from_width(FieldAxis::Z, w) / kUs, 71.5, 0.2);
  EXPECT_NEAR(time_constant_from_width(FieldAxis::Z, 2.25 * kMg) / kUs, 101.1, 0.3);
  EXPECT_DOUBLE_EQ(time_constant_from_width(FieldAxis::X, w), 2 * time_constant_from_width(FieldAxis::Z, w));
  EXPECT_DOUBLE_EQ(time_constant_from_width(FieldAxis::Z, 2 * w), 0.5 * time_constant_from_width(FieldAxis::Z, w));
  EXPECT_NEAR(width_from_time_constant(FieldAxis::X, time_constant_from_width(FieldAxis::X, w)), w, 1e-20);
  EXPECT_THROW(time_constant_from_width(FieldAxis::Z, 0.0), std::invalid_argument);
}

TEST(MonteCarlo, NoiselessCurveIsCosSquared) {
  FieldNoiseModel m;
  m.z.offset = 5.5 * kMg;
  const auto grid = TimeGrid::standard();
  const auto c = ensemble_survival(Spin1State::x_plus(), Spin1State::x_plus(), m, grid, 200, 1);
  const double w = std::abs(eigenframe({0, 0, 5.5 * kMg}).omegaL);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    EXPECT_NEAR(c.probabilities[j], std::pow(std::cos(w * grid[j]), 2), 1e-12);
    EXPECT_LT(c.stderrs[j], 1e-7);
  }
}

TEST(MonteCarlo, GaussianZMatchesSuperpositionLaw) {
  const double width = 2 * kMg;
  const double t2 = time_constant_from_width(FieldAxis::Z, width);
  const auto grid = TimeGrid::standard();
  const auto c = ensemble_survival(Spin1State::x_plus(), Spin1State::x_plus(), gaussian_z(width), grid, 100000, 21);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double a = analytic_survival(AnalyticKind::Superposition, grid[j], t2);
    EXPECT_LE(std::abs(c.probabilities[j] - a), 3 * c.stderrs[j] + 1e-12) << "t=" << grid[j];
  }
}

TEST(MonteCarlo, GaussianXMatchesExactTransverseLaw) {
  const double width = 2 * kMg;
  const double T = time_constant_from_width(FieldAxis::X, width);
  const auto grid = TimeGrid::uniform(5 * T, T / 20);
  const auto c = ensemble_survival(Spin1State::plus(), Spin1State::plus(), gaussian_x(width), grid, 100000, 22);
  for (std::size_t j = 0; j < grid.size(); ++j)
    EXPECT_LE(std::abs(c.probabilities[j] - exact_transverse(grid[j], T)), 3 * c.stderrs[j] + 1e-12);
  // The printed closed form shares t = 0 and the 3/8 floor.
  EXPECT_NEAR(c.probabilities.front(), analytic_survival(AnalyticKind::Stretched, 0, T), 1e-12);
  EXPECT_NEAR(c.probabilities.back(), analytic_survival(AnalyticKind::Stretched, grid.times().back(), T), 0.005);
  for (double p : c.probabilities) EXPECT_GT(p, 0.375 - 0.01);
}

TEST(MonteCarlo, DeterministicAcrossWorkerCounts) {
  FieldNoiseModel m = gaussian_z(2 * kMg, 5.5 * kMg);
  m.x.spread = UniformFieldDist{-1.5 * kMg, 1.5 * kMg};
  m.thermal = paper_thermal(0.006);
  const auto grid = TimeGrid::standard();
  const auto a = ensemble_survival(Spin1State::x_plus(), Spin1State::x_minus(), m, grid, 5000, 3, {1});
  for (unsigned w : {2u, 3u, 8u}) {
    const auto b = ensemble_survival(Spin1State::x_plus(), Spin1State::x_minus(), m, grid, 5000, 3, {w});
    EXPECT_EQ(a.probabilities, b.probabilities) << "workers=" << w;
    EXPECT_EQ(a.stderrs, b.stderrs);
  }
  const auto c = ensemble_survival(Spin1State::x_plus(), Spin1State::x_minus(), m, grid, 5000, 4, {1});
  EXPECT_NE(a.probabilities, c.probabilities);
}

TEST(MonteCarlo, StderrShrinksAsInverseSqrtN) {
  const auto grid = TimeGrid::standard();
  const auto m = gaussian_z(2 * kMg, 3 * kMg);
  const auto a = ensemble_survival(Spin1State::x_plus(), Spin1State::x_plus(), m, grid, 10000, 5);
  const auto b = ensemble_survival(Spin1State::x_plus(), Spin1State::x_plus(), m, grid, 40000, 5);
  const std::size_t j = 40;
  EXPECT_NEAR(b.stderrs[j] / a.stderrs[j], 0.5, 0.05);
  EXPECT_LE(std::abs(a.probabilities[j] - b.probabilities[j]), 3 * std::hypot(a.stderrs[j], b.stderrs[j]));
}

TEST(MonteCarlo, RejectsTooFewSamples) {
  EXPECT_THROW(ensemble_survival(Spin1State::plus(), Spin1State::plus(), FieldNoiseModel{}, TimeGrid::standard(), 99,
                                 1),
               std::invalid_argument);
}

TEST(Quadrature, GaussianZMatchesSuperpositionLaw) {
  const double width = 2.5 * kMg;
  const double t2 = time_constant_from_width(FieldAxis::Z, width);
  const auto grid = TimeGrid::standard();
  const auto c = quadrature_survival(Spin1State::x_plus(), Spin1State::x_plus(), gaussian_z(width), grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    EXPECT_NEAR(c.probabilities[j], analytic_survival(AnalyticKind::Superposition, grid[j], t2), 1e-8);
    if (j) EXPECT_LE(c.probabilities[j], c.probabilities[j - 1] + 1e-12);  // monotone envelope
    EXPECT_EQ(c.stderrs[j], 0.0);
  }
}

TEST(Quadrature, GaussianXMatchesExactTransverseLaw) {
  const double width = 2 * kMg;
  const double T = time_constant_from_width(FieldAxis::X, width);
  // 64 Hermite nodes resolve cos(4 u t/T) to 1e-8 up to t = 2.5 T.
  const auto grid = TimeGrid::uniform(2.5 * T, T / 40);
  const auto c = quadrature_survival(Spin1State::plus(), Spin1State::plus(), gaussian_x(width), grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    EXPECT_NEAR(c.probabilities[j], exact_transverse(grid[j], T), 1e-8);
    EXPECT_GE(c.probabilities[j], 0.375);
  }
}

TEST(Quadrature, ThermalOnlyMatchesMonteCarlo) {
  FieldNoiseModel m;
  m.z.offset = 1 * kMg;
  m.thermal = paper_thermal(0.01);
  const auto grid = TimeGrid::standard();
  const auto q = quadrature_survival(Spin1State::x_plus(), Spin1State::x_minus(), m, grid);
  const auto mc = ensemble_survival(Spin1State::x_plus(), Spin1State::x_minus(), m, grid, 1000000, 6);
  for (std::size_t j = 0; j < grid.size(); ++j)
    EXPECT_LE(std::abs(q.probabilities[j] - mc.probabilities[j]), 3 * mc.stderrs[j] + 1e-12) << "t=" << grid[j];
}

TEST(Quadrature, AgreesWithMonteCarloOnSharedConfigurations) {
  const auto grid = TimeGrid::standard();
  FieldNoiseModel a = gaussian_z(1.8 * kMg, 2 * kMg);
  a.thermal = paper_thermal(0.006);
  FieldNoiseModel b;
  b.x.spread = UniformFieldDist{-1.5 * kMg, 1.5 * kMg};
  b.z.offset = 0.5 * kMg;
  for (const auto& [m, init] : {std::pair{a, Spin1State::x_plus()}, std::pair{b, Spin1State::plus()}}) {
    const auto q = quadrature_survival(init, init, m, grid);
    const auto mc = ensemble_survival(init, init, m, grid, 100000, 7);
    for (std::size_t j = 0; j < grid.size(); ++j)
      EXPECT_LE(std::abs(q.probabilities[j] - mc.probabilities[j]), 3 * mc.stderrs[j] + 1e-12);
  }
}

TEST(Quadrature, NarrowDistributionIsNoiseless) {
  const auto grid = TimeGrid::standard();
  const auto q = quadrature_survival(Spin1State::x_plus(), Spin1State::x_plus(), gaussian_z(1e-9 * kMg, 5.5 * kMg),
                                     grid);
  const double w = std::abs(eigenframe({0, 0, 5.5 * kMg}).omegaL);
  for (std::size_t j = 0; j < grid.size(); ++j)
    EXPECT_NEAR(q.probabilities[j], std::pow(std::cos(w * grid[j]), 2), 1e-10);
}

TEST(Quadrature, RejectsNoiseOnSeveralAxes) {
  FieldNoiseModel m = gaussian_z(kMg);
  m.x.spread = GaussianFieldDist{0, kMg};
  EXPECT_THROW(quadrature_nodes(m), std::invalid_argument);
}

TEST(Quadrature, NodeWeightsSumToOne) {
  FieldNoiseModel m = gaussian_z(kMg, 2 * kMg);
  m.thermal = paper_thermal(0.01);
  double s = 0;
  for (const auto& n : quadrature_nodes(m, 32)) s += n.weight;
  EXPECT_NEAR(s, 1.0, 1e-13);
}

TEST(EnsembleDensity, ConsistentWithSurvival) {
  FieldNoiseModel m = gaussian_z(2 * kMg, 5.5 * kMg);
  m.thermal = paper_thermal(0.006);
  const auto grid = TimeGrid::standard();
  for (auto method : {EnsembleMethod::MonteCarlo, EnsembleMethod::Quadrature}) {
    const auto rho = ensemble_density(Spin1State::x_plus(), m, grid, method, 20000, 9);
    const auto c = method == EnsembleMethod::Quadrature
                       ? quadrature_survival(Spin1State::x_plus(), Spin1State::x_minus(), m, grid)
                       : ensemble_survival(Spin1State::x_plus(), Spin1State::x_minus(), m, grid, 20000, 9);
    ASSERT_EQ(rho.size(), grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      EXPECT_NEAR(rho[j].expectation(Spin1State::x_minus()), c.probabilities[j], 1e-12);
      EXPECT_NEAR(rho[j].population(1), 0.0, 1e-14);  // z field never reaches |1,0>
    }
  }
}

TEST(SyntheticData, BinomialResample) {
  const auto grid = TimeGrid::standard();
  const auto c = quadrature_survival(Spin1State::x_plus(), Spin1State::x_plus(), gaussian_z(2 * kMg), grid);
  const auto a = binomial_resample(c, 100, 5), b = binomial_resample(c, 100, 5);
  EXPECT_EQ(a.probabilities, b.probabilities);
  double z = 0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double k = a.probabilities[j] * 100;
    EXPECT_NEAR(k, std::round(k), 1e-9);
    EXPECT_GT(a.stderrs[j], 0.0);
    z += (a.probabilities[j] - c.probabilities[j]) / std::sqrt(c.probabilities[j] * (1 - c.probabilities[j]) / 100 + 1e-6);
  }
  EXPECT_LT(std::abs(z / std::sqrt(grid.size())), 4.0);
  EXPECT_THROW(binomial_resample(c, 0, 1), std::invalid_argument);
}

TEST(SyntheticData, GaussianNoiseClipped) {
  const auto grid = TimeGrid::standard();
  const auto c = quadrature_survival(Spin1State::x_plus(), Spin1State::x_plus(), gaussian_z(2 * kMg), grid);
  const auto n = add_gaussian_noise(c, 0.02, 1);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    EXPECT_GE(n.probabilities[j], 0.0);
    EXPECT_LE(n.probabilities[j], 1.0);
    EXPECT_EQ(n.stderrs[j], 0.02);
  }
}
