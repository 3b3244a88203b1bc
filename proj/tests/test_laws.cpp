#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <vector>

#include "steinmd/laws.hpp"

using namespace steinmd;

namespace {

double quad(auto f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-14);
}

// log E exp(sX) by quadrature against the density, for the continuous laws.
double log_mgf_quadrature(const InnovationLaw& law, double s) {
  const double p = law.parameter();
  switch (law.kind()) {
    case LawKind::uniform: return std::log(quad([&](double x) { return std::exp(s * x) / (2 * p); }, -p, p));
    case LawKind::gaussian:
      return std::log(quad([&](double x) { return std::exp(s * x - x * x / (2 * p * p)) / (p * std::sqrt(2 * M_PI)); },
                           -40 * p, 40 * p));
    case LawKind::laplace:
      return std::log(quad([&](double x) { return std::exp(s * x - std::abs(x) / p) / (2 * p); }, -200 * p, 0.0) +
                      quad([&](double x) { return std::exp(s * x - std::abs(x) / p) / (2 * p); }, 0.0, 200 * p));
    default: return 0.0;
  }
}

}  // namespace

TEST(DiscreteDistribution, Validation) {
  EXPECT_THROW(DiscreteDistribution({{0.0, 0.5}, {1.0, 0.4}}), std::exception);
  EXPECT_THROW(DiscreteDistribution({{0.0, -0.5}, {1.0, 1.5}}), std::exception);
  const auto b = DiscreteDistribution::bernoulli(0.3);
  EXPECT_NEAR(b.mean(), 0.3, 1e-15);
  EXPECT_NEAR(b.variance(), 0.21, 1e-15);
  const auto c = b.centered();
  EXPECT_NEAR(c.mean(), 0.0, 1e-15);
  EXPECT_NEAR(c.variance(), 0.21, 1e-15);
}

TEST(DiscreteDistribution, SampleFrequencies) {
  const DiscreteDistribution d({{-1.0, 0.2}, {0.0, 0.5}, {2.0, 0.3}});
  SplitMix64 rng(1);
  const int n = 200000;
  int counts[3] = {0, 0, 0};
  for (int k = 0; k < n; ++k) {
    const double v = d.sample(rng);
    counts[v < -0.5 ? 0 : (v < 1.0 ? 1 : 2)]++;
  }
  const double p[3] = {0.2, 0.5, 0.3};
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(counts[j] / double(n), p[j], 4 * std::sqrt(p[j] * (1 - p[j]) / n));
}

TEST(InnovationLaw, MomentsAndMgfAgainstQuadrature) {
  for (const auto& law : {InnovationLaw::uniform(1.5), InnovationLaw::gaussian(0.8), InnovationLaw::laplace(0.6)}) {
    for (double s : {-1.2, -0.3, 0.0, 0.4, 1.1}) {
      EXPECT_NEAR(law.log_mgf(s), log_mgf_quadrature(law, s), 1e-10) << law.name() << ' ' << s;
      const double h = 1e-4;
      EXPECT_NEAR(law.log_mgf_derivative(s), (law.log_mgf(s + h) - law.log_mgf(s - h)) / (2 * h), 1e-7);
      EXPECT_NEAR(law.log_mgf_second_derivative(s),
                  (law.log_mgf_derivative(s + h) - law.log_mgf_derivative(s - h)) / (2 * h), 1e-6);
    }
    EXPECT_NEAR(law.log_mgf_second_derivative(0.0), law.variance(), 1e-12);
  }
}

TEST(InnovationLaw, AbsMgf) {
  const auto u = InnovationLaw::uniform(2.0);
  EXPECT_NEAR(u.abs_mgf(0.5), quad([](double x) { return std::exp(0.5 * std::abs(x)) / 4.0; }, -2.0, 2.0), 1e-12);
  const auto g = InnovationLaw::gaussian(1.3);
  EXPECT_NEAR(g.abs_mgf(0.7),
              2 * quad([](double x) { return std::exp(0.7 * x - x * x / (2 * 1.69)) / (1.3 * std::sqrt(2 * M_PI)); }, 0.0, 50.0),
              1e-12);
  const auto l = InnovationLaw::laplace(0.5);
  EXPECT_NEAR(l.abs_mgf(1.0), 2.0, 1e-14);
  EXPECT_TRUE(std::isinf(l.abs_mgf(2.0)));
  EXPECT_NEAR(InnovationLaw::discrete(DiscreteDistribution::rademacher()).abs_mgf(1.0), std::exp(1.0), 1e-15);
}

TEST(InnovationLaw, LargeTiltsStayFinite) {
  const auto u = InnovationLaw::uniform(1.0);
  EXPECT_NEAR(u.log_mgf(800.0), 800.0 - std::log(1600.0), 1e-9);
  EXPECT_NEAR(u.log_mgf_derivative(800.0), 1.0 - 1.0 / 800.0, 1e-12);
}

TEST(TiltedSampler, MeanMatchesCumulantDerivative) {
  const InnovationLaw laws[] = {InnovationLaw::uniform(1.0), InnovationLaw::gaussian(1.0), InnovationLaw::laplace(0.7),
                                InnovationLaw::discrete(DiscreteDistribution::bernoulli(0.3).centered())};
  for (const auto& law : laws)
    for (double s : {-0.8, 0.5, 1.2}) {
      const TiltedSampler ts(law, s);
      SplitMix64 rng = SplitMix64::stream(3, 4, 5);
      const int n = 200000;
      double sum = 0.0;
      for (int k = 0; k < n; ++k) sum += ts(rng);
      const double sd = std::sqrt(law.log_mgf_second_derivative(s));
      EXPECT_NEAR(sum / n, law.log_mgf_derivative(s), 4.5 * sd / std::sqrt(double(n))) << law.name() << ' ' << s;
    }
}

TEST(TiltedSampler, RejectsTiltOutsideDomain) {
  EXPECT_THROW(TiltedSampler(InnovationLaw::laplace(1.0), 1.5), std::domain_error);
}

TEST(SplitMix64, StreamsAreReproducibleAndDistinct) {
  auto a = SplitMix64::stream(1, 2, 3), b = SplitMix64::stream(1, 2, 3), c = SplitMix64::stream(1, 2, 4);
  const auto x = a(), y = b(), z = c();
  EXPECT_EQ(x, y);
  EXPECT_NE(x, z);
  SplitMix64 r(9);
  for (int k = 0; k < 10000; ++k) {
    const double u = r.uniform_open();
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(r.below(7), 7u);
  }
}
