#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "steinmd/gauss.hpp"

using namespace steinmd;

namespace {

// 40-digit values of 1 - Phi(x), frozen from an arbitrary-precision evaluation.
struct TailOracle {
  double x;
  double tail;
};
constexpr TailOracle kTail[] = {
    {0.0, 0.5},
    {1.0, 0.15865525393145705141},
    {2.0, 0.0227501319481792072},
    {3.0, 0.0013498980316300945267},
    {5.0, 2.8665157187919391167e-7},
    {8.0, 6.2209605742717841235e-16},
    {10.0, 7.619853024160526066e-24},
    {20.0, 2.7536241186062336951e-89},
    {30.0, 4.9067139271481870595e-198},
    {-1.0, 0.84134474606854294859},
    {-5.0, 0.99999971334842812081},
};

}  // namespace

TEST(Gauss, PdfValues) {
  EXPECT_NEAR(gauss::pdf(0.0), 0.398942280401433, 1e-15);
  EXPECT_NEAR(gauss::pdf(1.0), 0.2419707245191433498, 1e-15);
  for (double x : {0.3, 1.7, 4.2, 11.0}) EXPECT_EQ(gauss::pdf(x), gauss::pdf(-x));
}

TEST(Gauss, TailMatchesOracle) {
  for (const auto& o : kTail) EXPECT_NEAR(gauss::tail(o.x) / o.tail, 1.0, 1e-12) << "x = " << o.x;
}

TEST(Gauss, TailAtTheEdgeOfTheRange) {
  // 1 - Phi(38) is subnormal, so only a loose relative check is meaningful.
  EXPECT_NEAR(gauss::tail(38.0) / 2.8854283600687843084e-316, 1.0, 1e-6);
}

TEST(Gauss, CdfPlusTailIsOne) {
  for (double x = -38.0; x <= 38.0; x += 0.25) EXPECT_NEAR(gauss::cdf(x) + gauss::tail(x), 1.0, 1e-14) << x;
}

TEST(Gauss, CdfStrictlyIncreasing) {
  double prev = gauss::cdf(-8.0);
  for (double x = -7.9; x <= 8.0; x += 0.1) {
    const double c = gauss::cdf(x);
    EXPECT_GT(c, prev);
    prev = c;
  }
}

TEST(Gauss, PdfIntegratesToOne) {
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [](double x) { return gauss::pdf(x); }, -12.0, 12.0, 15, 1e-15);
  EXPECT_NEAR(integral, 1.0, 1e-12);
}

TEST(Gauss, TailAgreesWithQuadrature) {
  for (double x : {0.5, 2.5, 4.0}) {
    const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [](double s) { return gauss::pdf(s); }, x, x + 20.0, 15, 1e-15);
    EXPECT_NEAR(gauss::tail(x) / q, 1.0, 1e-12);
  }
}

TEST(Gauss, MillsBracketValues) {
  const auto [lo, hi] = gauss::mills_bracket(1.0);
  EXPECT_NEAR(lo, 0.120985, 1e-6);
  EXPECT_NEAR(hi, 0.241971, 1e-6);
  EXPECT_LT(lo, gauss::tail(1.0));
  EXPECT_GT(hi, gauss::tail(1.0));
  const auto [lo8, hi8] = gauss::mills_bracket(8.0);
  EXPECT_LT(lo8, 6.221e-16);
  EXPECT_GT(hi8, 6.221e-16);
  const auto [lo30, hi30] = gauss::mills_bracket(30.0);
  EXPECT_LT(hi30 / lo30, 1.05);
}

TEST(Gauss, MillsBracketEnclosesTailOnGrid) {
  for (double x = 1.0; x <= 37.0; x += 0.5) {
    const auto [lo, hi] = gauss::mills_bracket(x);
    EXPECT_LT(lo, gauss::tail(x)) << x;
    EXPECT_GT(hi, gauss::tail(x)) << x;
  }
}

TEST(Gauss, MillsRatioConsistent) {
  for (double x : {-3.0, 0.0, 2.0, 9.0, 25.0}) EXPECT_NEAR(gauss::mills_ratio(x) * gauss::pdf(x) / gauss::tail(x), 1.0, 1e-13);
}

TEST(Gauss, DomainErrors) {
  EXPECT_THROW(gauss::pdf(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
  EXPECT_THROW(gauss::tail(std::numeric_limits<double>::infinity()), std::domain_error);
  EXPECT_THROW(gauss::mills_bracket(0.5), std::domain_error);
}
