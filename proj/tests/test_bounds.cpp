#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "steinmd/bounds.hpp"

using namespace steinmd;

namespace {

GeneralParams params(std::array<double, 5> r, std::array<double, 5> tau, double m0 = 1.0, double rho = 0.0) {
  GeneralParams p;
  p.r = r;
  p.tau = tau;
  p.m0 = m0;
  p.rho = rho;
  return p;
}

}  // namespace

TEST(Bounds, Tau) {
  EXPECT_EQ(tau_of(params({}, {0, 0, 0, 0, 0})), 3.0);
  EXPECT_EQ(tau_of(params({}, {0, 5, 0, 0, 0})), 7.0);
  EXPECT_EQ(tau_of(params({}, {0, 1, 0, 2, 2})), 3.0);
}

TEST(Bounds, Z0) {
  EXPECT_EQ(z0_of(params({0, 0, 0, 1, 1}, {}, 2.5)), 2.5);
  const auto p = params({1e-6, 1e-6, 1e-6, 0, 0}, {0, 0, 0, 0, 0}, 100.0);
  const double roots = 1e-6 + 1e-3 + 1e-2;
  EXPECT_NEAR(z0_of(p), 0.02 * std::exp(-1.5) / roots, 1e-15);
  EXPECT_NEAR(z0_of(p), 0.4057, 1e-4);
  // Crossover: m0 equal to the second arm.
  auto q = p;
  q.m0 = 0.02 * std::exp(-1.5) / roots;
  EXPECT_NEAR(z0_of(q), q.m0, 1e-15);
}

TEST(Bounds, Z0Monotone) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 0.01);
  for (int k = 0; k < 500; ++k) {
    auto p = params({u(gen), u(gen), u(gen), u(gen), u(gen)}, {0, 1, 0, 2, 2}, 3.0);
    const double z = z0_of(p);
    EXPECT_LE(z, p.m0);
    for (int j = 0; j < 3; ++j) {
      auto q = p;
      q.r[static_cast<std::size_t>(j)] *= 1.5;
      EXPECT_LE(z0_of(q), z);
    }
  }
}

TEST(Bounds, Delta) {
  const auto p = params({0.1, 0.2, 0.3, 0.4, 0.25}, {0, 1, 0, 2, 2});
  EXPECT_NEAR(delta_of(p, 0.0), 0.1 + 0.2 + 0.3 + 0.4 + 0.5, 1e-15);
  EXPECT_NEAR(delta_of(params({1, 1, 1, 1, 1}, {0, 0, 0, 0, 0}), 1.0), 10.0, 1e-15);
  double prev = 0.0;
  for (double z = 0.0; z < 5.0; z += 0.01) {
    const double d = delta_of(p, z);
    EXPECT_GE(d, prev);
    prev = d;
  }
  EXPECT_THROW(delta_of(p, -0.1), std::domain_error);
}

TEST(Bounds, GeneralBound) {
  const auto zero = general_bound(params({0, 0, 0, 0, 0}, {}), 0.5);
  EXPECT_EQ(zero.envelope, 0.0);
  EXPECT_TRUE(zero.in_range);

  const auto p = params({0.01, 0.02, 0.0, 0.03, 0.04}, {0, 0, 0, 0, 0}, 1.5);
  const double pre = 4.0 / delta_of(p, 1.5) + (std::pow(150.0, 3.0)) * std::exp(4.5);
  const auto e = general_bound(p, 0.2);
  EXPECT_NEAR(e.envelope, pre * delta_of(p, 0.2), 1e-9 * e.envelope);
  EXPECT_EQ(e.in_range, 0.2 <= z0_of(p));

  // Monotone in every r_j.
  for (int j = 0; j < 5; ++j) {
    auto q = p;
    q.r[static_cast<std::size_t>(j)] += 0.01;
    q.m0 = p.m0;
    for (double z : {0.0, 0.1, 0.3}) {
      const double base = delta_of(p, z), bumped = delta_of(q, z);
      EXPECT_GE(bumped, base);
      // The prefactor falls through 4/delta(m0) but C 150^tau e^{tau^2/2} dominates.
      EXPECT_GE(general_bound(q, z).envelope, general_bound(p, z).envelope);
    }
  }
  auto bad = p;
  bad.r[0] = -1.0;
  EXPECT_THROW(general_bound(bad, 0.1), std::domain_error);
  EXPECT_THROW(general_bound(p, -0.1), std::domain_error);
}

TEST(Bounds, ConsistencyFlag) {
  // z0 >= 8 only through the m0 arm when the roots are tiny.
  const auto ok = params({1e-30, 1e-30, 1e-30, 0, 0}, {0, 0, 0, 0, 0}, 10.0);
  EXPECT_GE(z0_of(ok), 8.0);
  EXPECT_FALSE(z0_consistency_violated(ok));
  const auto small = params({0.5, 0.5, 0.5, 0, 0}, {0, 0, 0, 0, 0}, 10.0);
  EXPECT_LT(z0_of(small), 8.0);
  EXPECT_FALSE(z0_consistency_violated(small));
}

TEST(Bounds, Heinrich) {
  const double n = 400.0;
  const auto e0 = heinrich_bound(n, std::sqrt(n), 0.0, 2.0);
  EXPECT_NEAR(e0.envelope, 2.0 * n / std::pow(std::sqrt(n), 3.0), 1e-15);
  EXPECT_NEAR(e0.envelope, 2.0 / std::sqrt(n), 1e-15);
  const auto e = heinrich_bound(n, std::sqrt(n), 1.5);
  EXPECT_NEAR(e.envelope, (1 + 1.5 * 1.5 * 1.5) / std::sqrt(n), 1e-15);
  EXPECT_NEAR(e.range_limit, std::sqrt(n) / std::cbrt(n), 1e-12);
}

TEST(Bounds, LocaldepPresetShape) {
  const auto p = localdep_preset(9.0, 32.0, 2.0, 1024.0);
  EXPECT_EQ(tau_of(p), 3.0);
  EXPECT_EQ(p.tau[1], 1.0);
  EXPECT_NEAR(p.m0, std::min(std::cbrt(32.0) / 4.0, 2.0), 1e-15);
  // r_j shrink like a_n^{-1} (r_4 like a_n^{-2}) at fixed theta.
  const auto p2 = localdep_preset(9.0, 64.0, 2.0, 4096.0);
  for (int j = 1; j <= 3; ++j) EXPECT_NEAR(p.r[static_cast<std::size_t>(j)] / p2.r[static_cast<std::size_t>(j)], 2.0, 1e-12);
  EXPECT_NEAR(p.r[4] / p2.r[4], 4.0, 1e-12);
  const auto c = comb_preset(8.0, 1.5, 64.0);
  EXPECT_EQ(tau_of(c), 3.0);
  EXPECT_GT(c.m0, 0.0);
}

TEST(Bounds, BerryEsseenRhs) {
  EXPECT_NEAR(berry_esseen_rhs({1, 1, 1, 1, 4}), 4 + 4 + 28 + 20 + 26, 1e-15);
  EXPECT_EQ(berry_esseen_rhs({0, 0, 0, 0, 0}), 0.0);
}
