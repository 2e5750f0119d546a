#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "spincoh/quadrature.hpp"

using namespace spincoh;

// Exact moments: int x^k e^{-x^2} = Gamma((k+1)/2) for even k,
// int x^(k+a) e^{-x} = Gamma(k+a+1), int_{-1}^{1} x^k = 2/(k+1).
TEST(Quadrature, HermiteMoments) {
  for (int n : {1, 5, 20, 64}) {
    const auto q = gauss_hermite(n);
    ASSERT_EQ(q.size(), static_cast<std::size_t>(n));
    for (int k = 0; k < 2 * n && k <= 24; ++k) {
      const double exact = k % 2 ? 0.0 : boost::math::tgamma((k + 1) / 2.0);
      const double got = q.integrate([k](double x) { return std::pow(x, k); });
      // Odd moments cancel between symmetric nodes; compare with the size of the terms.
      const double size = boost::math::tgamma((k + 2) / 2.0);
      EXPECT_NEAR(got, exact, 1e-11 * std::max(1.0, size)) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Quadrature, HermiteGaussianCharacteristicFunction) {
  const auto q = gauss_hermite(64);
  for (double a : {0.5, 2.0, 6.0}) {
    const double got = q.integrate([a](double x) { return std::cos(a * x); });
    EXPECT_NEAR(got / std::sqrt(std::numbers::pi), std::exp(-a * a / 4), 1e-13);
  }
}

TEST(Quadrature, LaguerreHalfMoments) {
  for (int n : {1, 4, 16, 64}) {
    const auto q = gauss_laguerre(n, 0.5);
    for (int k = 0; k < 2 * n && k <= 12; ++k) {
      const double exact = boost::math::tgamma(k + 1.5);
      const double got = q.integrate([k](double x) { return std::pow(x, k); });
      EXPECT_NEAR(got / exact, 1.0, 1e-10) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Quadrature, LegendreMoments) {
  for (int n : {1, 3, 10, 48}) {
    const auto q = gauss_legendre(n);
    double sum = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      EXPECT_GT(q.weights[i], 0.0);
      EXPECT_LE(std::abs(q.nodes[i]), 1.0);
      sum += q.weights[i];
    }
    EXPECT_NEAR(sum, 2.0, 1e-13);
    for (int k = 0; k < 2 * n && k <= 40; ++k) {
      const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
      EXPECT_NEAR(q.integrate([k](double x) { return std::pow(x, k); }), exact, 1e-13) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Quadrature, RejectsBadArguments) {
  EXPECT_THROW(gauss_hermite(0), std::invalid_argument);
  EXPECT_THROW(gauss_laguerre(4, -1.0), std::invalid_argument);
  EXPECT_THROW(gauss_legendre(-2), std::invalid_argument);
}
