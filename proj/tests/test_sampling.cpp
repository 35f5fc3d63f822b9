#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "tflab/fft.hpp"
#include "tflab/sampling.hpp"

using namespace tflab;

TEST(Grid, RejectsNonPowerOfTwo) {
  EXPECT_THROW(Grid(0, 1, 12), std::invalid_argument);
  EXPECT_THROW(Grid(1, 0, 16), std::invalid_argument);
  EXPECT_NO_THROW(Grid(0, 1, 16));
}

TEST(Grid, BinsRoundTrip) {
  const Grid g(-2, 2, 16);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(g.storage_bin(g.signed_bin(k)), k);
  EXPECT_EQ(g.signed_bin(8), -8);
  EXPECT_TRUE(g.dyadic_aligned());
  EXPECT_FALSE(Grid(0.1, 1.1, 16).dyadic_aligned());
}

TEST(GridFunction, InnerProductOfIndicatorIsMeasure) {
  const Grid g(0, 4, 1024);
  const auto S = IntervalSet({{0.5, 1.25}, {2.0, 3.0}});
  const auto f = S.indicator(g);
  EXPECT_NEAR(inner_product(f, f).real(), 1.75, 1e-12);
  EXPECT_NEAR(S.measure(), 1.75, 1e-15);
}

TEST(IntervalSet, SetAlgebra) {
  const auto A = IntervalSet({{0, 2}, {1, 3}, {5, 6}});
  ASSERT_EQ(A.parts().size(), 2u);
  EXPECT_DOUBLE_EQ(A.measure(), 4.0);
  const auto B = IntervalSet::single(2.5, 5.5);
  EXPECT_DOUBLE_EQ(A.intersect(B).measure(), 1.0);
  EXPECT_DOUBLE_EQ(A.subtract(B).measure(), 3.0);
  EXPECT_DOUBLE_EQ(A.unite(B).measure(), 6.0);
  EXPECT_TRUE(A.contains(0.0));
  EXPECT_FALSE(A.contains(3.0));
}

TEST(Dyadic, ParentAndContainment) {
  const DyadicInterval Q{-3, 5};  // [5/8, 6/8)
  EXPECT_DOUBLE_EQ(Q.lo(), 0.625);
  EXPECT_EQ(Q.parent(), (DyadicInterval{-2, 2}));
  EXPECT_TRUE(Q.parent().contains(Q));
  EXPECT_EQ((DyadicInterval{-1, -1}), DyadicInterval::containing(-0.25, -1));
  EXPECT_TRUE((DyadicInterval{0, -1}).contains(DyadicInterval{-2, -3}));
}

TEST(MaximalFunction, IndicatorAtDistanceOne) {
  const Grid g(-4, 4, 1024);
  const auto f = IntervalSet::single(0, 1).indicator(g);
  const auto M = maximal_function_bruteforce(f, 1.0);
  const std::size_t i = g.first_at_or_after(2.0);
  EXPECT_NEAR(M[i].real(), 0.5, 2 * g.spacing());
}

TEST(MaximalFunction, DyadicWithinFactorTwoOfBruteForce) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const Grid g(0, 1, 256);
    GridFunction f(g);
    for (std::size_t i = 0; i < g.n(); ++i) f[i] = cplx(U(rng), U(rng)) * (U(rng) > 0.6 ? 5.0 : 0.1);
    for (double p : {1.0, 2.0}) {
      const auto Md = maximal_function(f, p);
      const auto Mb = maximal_function_bruteforce(f, p);
      for (std::size_t i = 0; i < g.n(); ++i) {
        EXPECT_LE(Md[i].real(), Mb[i].real() * (1 + 1e-12));
        EXPECT_GE(Md[i].real() * std::pow(2.0, 1.0 / p) * (1 + 1e-12), Mb[i].real());
        EXPECT_GE(Mb[i].real() * (1 + 1e-12), std::abs(f[i]));
      }
    }
  }
}

TEST(MaximalFunction, ConstantIsFixed) {
  const Grid g(0, 8, 128);
  GridFunction f = GridFunction::sample(g, [](double) { return 3.0; });
  const auto M = maximal_function(f, 2.0);
  for (std::size_t i = 0; i < g.n(); ++i) EXPECT_NEAR(M[i].real(), 3.0, 1e-12);
}

TEST(Superlevel, MaximalDyadicWithDilate) {
  const Grid g(0, 64, 1024);
  const auto E = IntervalSet::single(16, 48).indicator(g);
  const auto Qs = superlevel_decompose(E, 0.5, 9.0);
  ASSERT_FALSE(Qs.empty());
  for (const auto& Q : Qs) {
    const auto D = Q.interval().dilate(9.0);
    EXPECT_GE(D.lo, 16.0 - 1e-12);
    EXPECT_LE(D.hi, 48.0 + 1e-12);
    // parent must fail
    const auto P = Q.parent().interval().dilate(9.0);
    EXPECT_TRUE(P.lo < 16.0 || P.hi > 48.0);
  }
  // Disjointness
  for (std::size_t a = 1; a < Qs.size(); ++a) EXPECT_LE(Qs[a - 1].hi(), Qs[a].lo());
}

TEST(Superlevel, CoversWithDilationOne) {
  const Grid g(0, 16, 256);
  const auto S = IntervalSet({{1, 3.5}, {7, 7.25}});
  const auto Qs = superlevel_decompose(S.indicator(g), 0.5, 1.0);
  double m = 0;
  for (const auto& Q : Qs) m += Q.length();
  EXPECT_NEAR(m, S.measure(), 1e-12);
}

TEST(Fft, SpectrumOfGaussianMatchesClosedForm) {
  const Grid g(-8, 8, 512);
  const auto f = GridFunction::sample(g, [](double x) { return std::exp(-kPi * x * x); });
  const auto S = spectrum_of(f);
  for (std::int64_t k = -20; k <= 20; ++k) {
    const double z = g.freq(k);
    EXPECT_NEAR(std::abs(S.at(k) - std::exp(-kPi * z * z)), 0.0, 1e-12);
  }
  const auto back = from_spectrum(g, S.F);
  EXPECT_LT(sup_diff(back, f), 1e-13);
}

TEST(Fft, ParsevalHolds) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N;
  const Grid g(1, 5, 256);
  GridFunction f(g);
  for (auto& z : f.values()) z = cplx(N(rng), N(rng));
  const auto S = spectrum_of(f);
  double s = 0;
  for (const auto& z : S.F) s += std::norm(z);
  EXPECT_NEAR(s / g.length(), std::pow(f.norm2(), 2), 1e-10);
}

TEST(Csv, RoundTrip) {
  const Grid g(-1, 1, 32);
  const auto f = GridFunction::sample(g, [](double x) { return cplx(x, x * x); });
  const std::string path = ::testing::TempDir() + "/tflab_rt.csv";
  write_csv(f, path);
  const auto h = read_csv(path);
  EXPECT_EQ(h.grid(), g);
  EXPECT_EQ(sup_diff(h, f), 0.0);
}
