#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spincoh/tomography.hpp"
#include "test_support.hpp"

using namespace spincoh;
using spincoh::testing::max_abs;

namespace {
// Random member of the block form: qubit block plus rho_00, no |1,0> coherences.
Spin1Density random_block_density(std::mt19937_64& g) {
  return partial_tomography_form(spincoh::testing::random_density(g));
}

Spin1Density diag(double a, double b, double c) {
  Mat3c m = Mat3c::Zero();
  m(0, 0) = a;
  m(1, 1) = b;
  m(2, 2) = c;
  return Spin1Density(m);
}

std::array<MeasurementRecord, 3> records(const Spin1Density& rho, long shots, std::uint64_t seed,
                                         std::uint64_t index = 0) {
  return {simulate_measurement(rho, PauliBasis::X, shots, seed, index),
          simulate_measurement(rho, PauliBasis::Y, shots, seed, index),
          simulate_measurement(rho, PauliBasis::Z, shots, seed, index)};
}
}  // namespace

TEST(Basis, Conventions) {
  EXPECT_EQ(to_string(PauliBasis::Y), std::string("sy"));
  EXPECT_EQ(pauli_basis_from_string("sx"), PauliBasis::X);
  EXPECT_THROW(pauli_basis_from_string("sw"), std::invalid_argument);
  const auto rho = Spin1Density::pure(Spin1State::y_minus());  // (|1,-1> + i|1,+1>)/sqrt2
  const auto e = exact_expectations(rho);
  EXPECT_NEAR(e.ey, -1.0, 1e-15);
  EXPECT_NEAR(e.ex, 0.0, 1e-15);
  EXPECT_NEAR(exact_expectations(Spin1Density::pure(Spin1State::x_plus())).ex, 1.0, 1e-15);
}

TEST(Measurement, LeakageStateIsAlwaysOutside) {
  const auto rho = Spin1Density::pure(Spin1State::zero());
  for (auto b : {PauliBasis::X, PauliBasis::Y, PauliBasis::Z}) {
    const auto r = simulate_measurement(rho, b, 1000, 1);
    EXPECT_EQ(r.countOutside, 1000);
  }
}

TEST(Measurement, EigenstateGivesPlus) {
  const auto r = simulate_measurement(Spin1Density::pure(Spin1State::x_plus()), PauliBasis::X, 100000, 2);
  EXPECT_EQ(r.countPlus, 100000);
}

TEST(Measurement, MaximallyMixedThirds) {
  const long n = 30000;
  for (auto b : {PauliBasis::X, PauliBasis::Y, PauliBasis::Z}) {
    const auto r = simulate_measurement(Spin1Density::maximally_mixed(), b, n, 3);
    const double sigma = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
    for (long c : {r.countPlus, r.countMinus, r.countOutside}) EXPECT_LT(std::abs(c - n / 3.0), 3 * sigma);
  }
}

TEST(Measurement, Reproducible) {
  std::mt19937_64 g(1);
  const auto rho = spincoh::testing::random_density(g);
  const auto a = simulate_measurement(rho, PauliBasis::Y, 500, 9, 4);
  const auto b = simulate_measurement(rho, PauliBasis::Y, 500, 9, 4);
  EXPECT_EQ(a.countPlus, b.countPlus);
  EXPECT_EQ(a.countMinus, b.countMinus);
  EXPECT_THROW(simulate_measurement(rho, PauliBasis::Y, 0, 9), std::invalid_argument);
}

TEST(Expectations, FromRecords) {
  const auto z = records(Spin1Density::pure(Spin1State::plus()), 1000, 1);
  const auto e = expectations_from_records(z);
  EXPECT_EQ(e.ez, 1.0);
  EXPECT_EQ(e.pSub, 1.0);

  const auto m = records(Spin1Density::maximally_mixed(), 200000, 2);
  const auto f = expectations_from_records(m);
  EXPECT_NEAR(f.ex, 0.0, 0.01);
  EXPECT_NEAR(f.ey, 0.0, 0.01);
  EXPECT_NEAR(f.ez, 0.0, 0.01);
  EXPECT_NEAR(f.pSub, 2.0 / 3, 0.01);

  const auto y = records(Spin1Density::pure(Spin1State::y_minus()), 1000, 3);
  EXPECT_EQ(expectations_from_records(y).ey, -1.0);
}

TEST(Expectations, RecordErrors) {
  auto r = records(Spin1Density::maximally_mixed(), 100, 1);
  std::array<MeasurementRecord, 2> missing{r[0], r[1]};
  EXPECT_THROW(expectations_from_records(missing), std::invalid_argument);
  std::array<MeasurementRecord, 3> dup{r[0], r[0], r[2]};
  EXPECT_THROW(expectations_from_records(dup), std::invalid_argument);
  r[1].countPlus += 1;
  EXPECT_THROW(expectations_from_records(r), std::invalid_argument);
  const auto leak = records(Spin1Density::pure(Spin1State::zero()), 10, 1);
  EXPECT_THROW(expectations_from_records(leak), std::domain_error);
  EXPECT_THROW(exact_expectations(Spin1Density::pure(Spin1State::zero())), std::domain_error);
}

TEST(Reconstruct, ReferenceCases) {
  PauliExpectations e{0, 0, 1, 1.0};
  EXPECT_LT(max_abs(reconstruct_density(e).rho.matrix() - Spin1Density::pure(Spin1State::plus()).matrix()), 1e-15);
  PauliExpectations m{0, 0, 0, 2.0 / 3};
  EXPECT_LT(max_abs(reconstruct_density(m).rho.matrix() - Mat3c::Identity() / 3.0), 1e-15);
}

TEST(Reconstruct, ExactRoundTrip) {
  std::mt19937_64 g(4);
  for (int n = 0; n < 1000; ++n) {
    const auto rho = random_block_density(g);
    for (auto norm : {ExpectationNormalization::Conditional, ExpectationNormalization::Absolute}) {
      const auto rec = reconstruct_density(exact_expectations(rho, norm));
      EXPECT_LT(max_abs(rec.rho.matrix() - rho.matrix()), 1e-12);
      EXPECT_FALSE(rec.repaired);
    }
  }
}

TEST(Reconstruct, DropsZeroCoherences) {
  std::mt19937_64 g(5);
  const auto rho = spincoh::testing::random_density(g);
  const auto rec = reconstruct_density(exact_expectations(rho));
  EXPECT_LT(max_abs(rec.rho.matrix() - partial_tomography_form(rho).matrix()), 1e-12);
}

TEST(Reconstruct, RepairsNonPhysicalEstimate) {
  PauliExpectations e{0.9, 0.5, 0.6, 1.0};  // Bloch length > 1
  const auto rec = reconstruct_density(e);
  EXPECT_TRUE(rec.repaired);
  Eigen::SelfAdjointEigenSolver<Mat3c> es(rec.rho.matrix());
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
  EXPECT_NEAR(rec.rho.matrix().trace().real(), 1.0, 1e-12);
}

TEST(Purity, ReferenceMatrices) {
  EXPECT_NEAR(purity_parameter(Spin1Density::pure(Spin1State::x_plus())).r, 1.0, 1e-12);
  EXPECT_NEAR(purity_parameter(Spin1Density::maximally_mixed()).r, 0.0, 1e-12);
  const auto p = purity_parameter(diag(0.5, 0, 0.5));
  EXPECT_NEAR(p.traceRhoSq, 0.5, 1e-15);
  EXPECT_NEAR(p.r, 0.5, 1e-15);
}

TEST(Purity, DecompositionIdentity) {
  // rho = r |chi><chi| + (1 - r) 1/3 has purity parameter r.
  std::mt19937_64 g(6);
  for (int n = 0; n < 200; ++n) {
    const double r = std::uniform_real_distribution<double>(0, 1)(g);
    const auto chi = spincoh::testing::random_state(g).amplitudes();
    const Mat3c m = r * chi * chi.adjoint() + (1 - r) * Mat3c::Identity() / 3.0;
    EXPECT_NEAR(purity_parameter(Spin1Density(m)).r, r, 1e-12);
  }
}

TEST(Purity, PartialFormIsLowerBound) {
  // Dropping the |1,0> coherences can only lower the purity.
  std::mt19937_64 g(7);
  for (int n = 0; n < 1000; ++n) {
    const auto rho = spincoh::testing::random_density(g);
    EXPECT_LE(purity_parameter(partial_tomography_form(rho)).r, purity_parameter(rho).r + 1e-12);
  }
}

TEST(Tomograph, FiniteShotErrorScalesAsInverseSqrtShots) {
  const Mat3c m = 0.5 * Spin1Density::pure(Spin1State::normalized(Vec3c(0.6, 0, cplx(0.3, 0.5)))).matrix() +
                  0.5 * Mat3c::Identity() / 3.0;
  const auto rho = partial_tomography_form(Spin1Density(m));
  std::vector<double> lx, ly;
  for (long shots : {100L, 1000L, 10000L, 100000L}) {
    double err = 0;
    const int reps = 40;
    for (int k = 0; k < reps; ++k) err += max_abs(tomograph(rho, shots, 1234, k).rho.matrix() - rho.matrix());
    lx.push_back(std::log10(static_cast<double>(shots)));
    ly.push_back(std::log10(err / reps));
  }
  const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4, my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -0.5, 0.1);
}
