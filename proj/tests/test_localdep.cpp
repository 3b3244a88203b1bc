#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <set>

#include "steinmd/localdep.hpp"

using namespace steinmd;

namespace {

const InnovationLaw kRademacher = InnovationLaw::discrete(DiscreteDistribution::rademacher());

std::set<std::size_t> innovations_of(const LocalFieldModel& m, std::size_t i) {
  std::set<std::size_t> s;
  for (const auto& t : m.taps(i)) s.insert(t.innovation);
  return s;
}

bool disjoint(const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
  for (auto v : a)
    if (b.count(v)) return false;
  return true;
}

}  // namespace

TEST(LocalDep, IidRademacherField) {
  const auto m = build_mdep_field(1, {16}, 0, kRademacher);
  EXPECT_EQ(m.kappa(), 1u);
  EXPECT_NEAR(m.scale(), 0.25, 1e-15);
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(m.neighborhoods().N[i].size(), 1u);
    ASSERT_EQ(m.taps(i).size(), 1u);
  }
  EXPECT_NEAR(m.variance_of_w(), 1.0, 1e-14);
}

TEST(LocalDep, KappaMatchesCorollaryBound) {
  const auto line = build_mdep_field(1, {40}, 1, kRademacher);
  EXPECT_EQ(line.kappa(), 9u);
  const auto torus = build_mdep_field(2, {9, 9}, 1, kRademacher, {}, Boundary::periodic);
  EXPECT_EQ(torus.kappa(), 81u);
  const auto big = build_mdep_field(2, {12, 12}, 1, kRademacher, {}, Boundary::periodic);
  EXPECT_EQ(big.kappa(), 81u);
  const auto small = build_mdep_field(2, {4, 4}, 1, kRademacher, {}, Boundary::periodic);
  EXPECT_EQ(small.kappa(), 16u);
  const auto open = build_mdep_field(2, {4, 4}, 1, kRademacher);
  EXPECT_LE(open.kappa(), 16u);
  for (int d = 1; d <= 3; ++d)
    for (int mm = 0; mm <= 2; ++mm) {
      std::vector<int> shape(static_cast<std::size_t>(d), d == 3 ? 7 : 11);
      const auto f = build_mdep_field(d, shape, mm, kRademacher);
      EXPECT_LE(static_cast<double>(f.kappa()), std::pow(8.0 * mm + 1.0, d)) << d << ' ' << mm;
    }
}

TEST(LocalDep, RecipeRealizesLocalDependence) {
  for (Boundary bd : {Boundary::open, Boundary::periodic}) {
    const auto f = build_mdep_field(2, {7, 8}, 1, kRademacher, {1.0, -0.5, 2.0, 0.3}, bd);
    const auto& nb = f.neighborhoods();
    for (std::size_t i = 0; i < f.size(); ++i) {
      EXPECT_TRUE(std::binary_search(nb.A[i].begin(), nb.A[i].end(), i));
      for (std::size_t a : nb.A[i]) EXPECT_TRUE(std::binary_search(nb.B[i].begin(), nb.B[i].end(), a));
      // (LD1): X_i shares no innovation with sites outside A_i.
      const auto own = innovations_of(f, i);
      for (std::size_t j = 0; j < f.size(); ++j)
        if (!std::binary_search(nb.A[i].begin(), nb.A[i].end(), j)) EXPECT_TRUE(disjoint(own, innovations_of(f, j)));
      // (LD2): X_{A_i} shares none with sites outside B_i.
      std::set<std::size_t> block;
      for (std::size_t a : nb.A[i])
        for (auto e : innovations_of(f, a)) block.insert(e);
      for (std::size_t j = 0; j < f.size(); ++j)
        if (!std::binary_search(nb.B[i].begin(), nb.B[i].end(), j)) EXPECT_TRUE(disjoint(block, innovations_of(f, j)));
    }
  }
}

TEST(LocalDep, EnumeratedMomentsAreExact) {
  const auto f = build_mdep_field(1, {6}, 1, InnovationLaw::discrete(DiscreteDistribution::bernoulli(0.3)), {1.0, 0.5});
  std::vector<double> mean_x(f.size(), 0.0);
  double ew = 0.0, ew2 = 0.0, total = 0.0, ek1 = 0.0;
  f.for_each_outcome([&](double p, const FieldRealization& r) {
    total += p;
    for (std::size_t i = 0; i < f.size(); ++i) mean_x[i] += p * r.x[i];
    ew += p * r.w;
    ew2 += p * r.w * r.w;
    ek1 += p * kernel_local(f, r).integral();
  });
  EXPECT_NEAR(total, 1.0, 1e-14);
  for (double mx : mean_x) EXPECT_NEAR(mx, 0.0, 1e-14);
  EXPECT_NEAR(ew, 0.0, 1e-14);
  EXPECT_NEAR(ew2, 1.0, 1e-12);
  EXPECT_NEAR(ek1, 1.0, 1e-10);
}

TEST(LocalDep, SamplingIsDeterministic) {
  const auto f = build_mdep_field(1, {50}, 1, InnovationLaw::uniform());
  SplitMix64 a(77), b(77);
  const auto ra = sample_field(f, a), rb = sample_field(f, b);
  EXPECT_EQ(ra.x, rb.x);
  EXPECT_EQ(ra.w, rb.w);
}

TEST(LocalDep, EmpiricalVarianceLargeField) {
  const auto f = build_mdep_field(1, {10000}, 0, kRademacher);
  SplitMix64 rng(2024);
  const int reps = 20000;
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < reps; ++k) {
    const double w = f.sample_w(rng);
    s += w;
    s2 += w * w;
  }
  EXPECT_NEAR(s2 / reps, 1.0, 0.05);
  EXPECT_NEAR(s / reps, 0.0, 4.0 / std::sqrt(double(reps)));
}

TEST(LocalDep, SampleFrequenciesMatchEnumeration) {
  const auto f = build_mdep_field(1, {3}, 1, kRademacher, {1.0, 0.5});
  std::map<double, double> prob;
  auto key = [](double w) { return std::round(w * 1e9) / 1e9; };
  f.for_each_outcome([&](double p, const FieldRealization& r) { prob[key(r.w)] += p; });
  std::map<double, int> count;
  SplitMix64 rng(5);
  const int reps = 100000;
  for (int k = 0; k < reps; ++k) count[key(f.sample(rng).w)]++;
  double chi2 = 0.0;
  for (const auto& [w, p] : prob) {
    const double e = p * reps;
    chi2 += (count[w] - e) * (count[w] - e) / e;
  }
  EXPECT_EQ(count.size(), prob.size());
  const boost::math::chi_squared dist(static_cast<double>(prob.size() - 1));
  EXPECT_LT(chi2, boost::math::quantile(boost::math::complement(dist, 0.01)));
}

TEST(LocalDep, KernelOfSingleSite) {
  const auto f = build_mdep_field(1, {1}, 0, kRademacher);
  FieldRealization r;
  r.x = {1.0};
  r.w = 1.0;
  const auto k = kernel_local(f, r);
  EXPECT_EQ(k(-1.0), 1.0);
  EXPECT_EQ(k(-0.25), 1.0);
  EXPECT_EQ(k(0.0), 0.0);
  EXPECT_EQ(k(0.5), 0.0);
  EXPECT_DOUBLE_EQ(k.integral(), 1.0);
}

TEST(LocalDep, KernelIntegralIsSumXY) {
  const auto iid = build_mdep_field(1, {25}, 0, kRademacher);
  SplitMix64 rng(8);
  EXPECT_NEAR(kernel_local(iid, iid.sample(rng)).integral(), 1.0, 1e-14);
  for (const auto& f : {build_mdep_field(1, {40}, 1, InnovationLaw::gaussian()),
                        build_mdep_field(2, {6, 5}, 2, InnovationLaw::uniform())}) {
    for (int rep = 0; rep < 50; ++rep) {
      const auto r = f.sample(rng);
      double sxy = 0.0, ymax = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        double y = 0.0;
        for (std::size_t j : f.neighborhoods().A[i]) y += r.x[j];
        sxy += r.x[i] * y;
        ymax = std::max(ymax, std::abs(y));
      }
      const auto k = kernel_local(f, r);
      EXPECT_NEAR(k.integral(), sxy, 1e-12 * std::max(1.0, std::abs(sxy)));
      EXPECT_GE(k.support_lo(), -ymax - 1e-15);
      EXPECT_LE(k.support_hi(), ymax + 1e-15);
    }
  }
}

TEST(LocalDep, MomentCertificates) {
  const auto iid = build_mdep_field(1, {64}, 0, kRademacher);
  const auto c = certify_moments(iid, 8.0);
  EXPECT_NEAR(c.b, std::exp(1.0), 1e-13);
  EXPECT_EQ(c.method, CertificateMethod::enumerated);
  EXPECT_TRUE(c.exact);

  // |X_i| = s |U| with U uniform on [-h, h]: E exp(a s |U|) = expm1(a s h) / (a s h).
  const double h = 2.0;
  const auto uni = build_mdep_field(1, {100}, 0, InnovationLaw::uniform(h));
  const auto cu = certify_moments(uni, 10.0);
  const double x = 10.0 * uni.scale() * h;
  EXPECT_NEAR(cu.b, std::expm1(x) / x, 1e-12);
  EXPECT_EQ(cu.method, CertificateMethod::analytic);
  EXPECT_TRUE(cu.exact);

  const auto heavy = build_mdep_field(1, {16}, 0, InnovationLaw::laplace(1.0));
  EXPECT_THROW(certify_moments(heavy, 200.0), certificate_error);
  EXPECT_THROW(certify_moments(iid, 0.5), std::domain_error);
}

TEST(LocalDep, MonteCarloCertificateBracketsExactValue) {
  const auto f = build_mdep_field(1, {12}, 1, kRademacher, {1.0, 0.7});
  const auto exact = certify_moments(f, 2.0);
  const auto mc = certify_moments(f, 2.0, CertificateMethod::mc_upper, 200000, 3);
  EXPECT_EQ(mc.method, CertificateMethod::mc_upper);
  EXPECT_FALSE(mc.exact);
  EXPECT_GT(mc.b, exact.b * 0.99);
  EXPECT_LT(mc.b, exact.b * 1.05);
  // The analytic product bound dominates the exact value.
  const auto ana = certify_moments(f, 2.0, CertificateMethod::analytic);
  EXPECT_GE(ana.b, exact.b * (1 - 1e-12));
}

TEST(LocalDep, Theorem21Bound) {
  const double n = 1e4, a = 100.0, b = std::exp(1.0);
  const auto e = theorem21_bound(1.0, a, b, n, 0.0);
  EXPECT_NEAR(e.envelope, 0.01 * (1.0 + std::exp(3.0)), 1e-14);
  EXPECT_NEAR(e.envelope, 0.21086, 1e-5);
  EXPECT_TRUE(e.in_range);
  EXPECT_FALSE(theorem21_bound(1.0, a, b, n, e.range_limit * 1.01).in_range);
  EXPECT_THROW(theorem21_bound(1.0, a, b, n, -0.1), std::domain_error);
  // i.i.d. specialization: envelope slope -1/2 and range growing like n^{1/6}.
  const double n1 = 1e4, n2 = 1e6;
  const auto e1 = theorem21_bound(1.0, std::sqrt(n1), b, n1, 1.5), e2 = theorem21_bound(1.0, std::sqrt(n2), b, n2, 1.5);
  EXPECT_NEAR(std::log(e2.envelope / e1.envelope) / std::log(n2 / n1), -0.5, 1e-12);
  EXPECT_NEAR(std::log(e2.range_limit / e1.range_limit) / std::log(n2 / n1), 1.0 / 6.0, 1e-12);
}

TEST(LocalDep, DegenerateRecipeRejected) {
  EXPECT_THROW(build_mdep_field(1, {5}, 1, kRademacher, {0.0, 0.0}), model_error);
  EXPECT_THROW(build_mdep_field(1, {5}, 1, InnovationLaw::discrete(DiscreteDistribution({{2.0, 1.0}}))), model_error);
  EXPECT_THROW(build_mdep_field(1, {5}, 1, kRademacher, {1.0}), model_error);
}
