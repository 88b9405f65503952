#include <gtest/gtest.h>

#include <spikelab/constants.hpp>

#include <chrono>

#include "oracles.hpp"

using namespace spikelab;

TEST(Constants, MatchBetaClosedForms) {
  const auto start = std::chrono::steady_clock::now();
  for (int n = 3; n <= 6; ++n) {
    const UniversalConstants k = compute_constants(n);
    const double scale = std::pow(oracle::c0(n), 2.0 * n / (n - 2));
    EXPECT_LT(oracle::rel_err(k.Sn_pow, scale * oracle::beta_radial(n, n)), 1e-10) << n;
    EXPECT_LT(oracle::rel_err(k.cbar1, scale * oracle::beta_radial(n, 0.5 * (n + 2))), 1e-10) << n;
    EXPECT_GT(k.Gamma1, 0.0);
    EXPECT_EQ(k.Gamma2 / k.Gamma3, double(n - 2));
    EXPECT_EQ(k.outside_theorem, n == 3);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 5.0);
}

TEST(Constants, FourDimensionalValues) {
  const UniversalConstants k = compute_constants(4);
  EXPECT_LT(oracle::rel_err(k.Sn_pow, 32.0 * kPi * kPi / 3.0), 1e-10);
  EXPECT_LT(oracle::rel_err(k.cbar1, 32.0 * kPi * kPi), 1e-10);
  EXPECT_NEAR(k.cbar, std::sqrt((4 - 2) * k.Gamma1 / k.Gamma2), 1e-15);
}

TEST(Constants, Orthogonality) {
  for (int n = 3; n <= 6; ++n) EXPECT_LT(std::abs(compute_constants(n).orthogonality), 1e-10) << n;
}

TEST(Constants, CachedPerDimension) {
  const auto& a = constants_for(4);
  const auto& b = constants_for(4);
  EXPECT_EQ(&a, &b);
}

TEST(LogLog, UnitArgumentHasNoLinearPart) {
  const LogLogParts p = loglog_decompose(Dimension(4), 100.0, 1.0);
  EXPECT_EQ(p.linear, 0.0);
}

TEST(LogLog, RejectsOutOfDomain) {
  EXPECT_THROW(loglog_decompose(Dimension(4), 2.0, 1.0), DomainError);
  EXPECT_THROW(loglog_decompose(Dimension(4), 10.0, 0.0), DomainError);
}

TEST(LogLog, PartsSumToLeftSide) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ll(1.01, 14.0), lu(-5.0, 5.0);
  for (int n = 3; n <= 6; ++n) {
    const Dimension d(n);
    for (int k = 0; k < 100; ++k) {
      const double lambda = std::exp(ll(rng));
      const double U = std::exp(lu(rng));
      const LogLogParts p = loglog_decompose(d, lambda, U);
      const double lhs = std::log(std::log(kE + std::pow(lambda, 0.5 * (n - 2)) * U));
      EXPECT_LT(std::abs(p.leading + p.linear + p.remainder - lhs), 1e-13);
    }
  }
}

TEST(LogLog, ScaledRemainderApproachesLimit) {
  const Dimension d(4);
  const double U = 2.0;
  const double limit = -2.0 * std::pow(std::log(U), 2) / 4.0;
  double prev_gap = std::numeric_limits<double>::infinity();
  double last = 0.0;
  for (double lambda : {1e3, 1e4, 1e5, 1e6}) {
    const double scaled = std::pow(std::log(lambda), 2) * loglog_decompose(d, lambda, U).remainder;
    const double gap = std::abs(scaled - limit);
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
    last = scaled;
  }
  EXPECT_LT(oracle::rel_err(last, limit), 0.05);
}
