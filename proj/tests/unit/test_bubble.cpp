#include <gtest/gtest.h>

#include <spikelab/bubble.hpp>
#include <spikelab/nonlinearity.hpp>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "oracles.hpp"

using namespace spikelab;

namespace {

Point point(std::initializer_list<double> v) {
  Point p(int(v.size()));
  int i = 0;
  for (double x : v) p(i++) = x;
  return p;
}

}  // namespace

TEST(Dimension, RejectsSmallDimension) {
  EXPECT_THROW(Dimension(2), DomainError);
  EXPECT_NO_THROW(Dimension(3));
  EXPECT_TRUE(Dimension(3).outside_theorem());
  EXPECT_FALSE(Dimension(4).outside_theorem());
  EXPECT_DOUBLE_EQ(Dimension(4).p(), 3.0);
}

TEST(BubbleParams, RejectsNonPositiveRate) {
  EXPECT_THROW(BubbleParams(Point::Zero(4), 0.0), DomainError);
  EXPECT_THROW(BubbleParams(Point::Zero(4), -1.0), DomainError);
}

TEST(Bubble, ValueAtOrigin) {
  const Dimension d(4);
  EXPECT_NEAR(bubble_value(d, BubbleParams(Point::Zero(4), 1.0), Point::Zero(4)), std::sqrt(8.0), 1e-15);
}

TEST(Bubble, UnitScaledDistance) {
  const Dimension d(4);
  const double v = bubble_value(d, BubbleParams(Point::Zero(4), 10.0), point({0.1, 0, 0, 0}));
  EXPECT_NEAR(v, std::sqrt(8.0) * 10.0 * 0.5, 1e-13);
}

TEST(Bubble, ScalingIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lam(0.1, 1e3);
  for (int n = 3; n <= 6; ++n) {
    const Dimension d(n);
    for (int k = 0; k < 50; ++k) {
      const Point a = oracle::random_in_ball(rng, n, 1.0);
      const Point y = oracle::random_in_ball(rng, n, 1.0);
      const double l = lam(rng);
      const double lhs = bubble_value(d, BubbleParams(a, l), y);
      const double rhs = std::pow(l, 0.5 * (n - 2)) * bubble_value(d, BubbleParams(Point::Zero(n), 1.0), l * (y - a));
      EXPECT_LT(oracle::rel_err(lhs, rhs), 1e-14);
    }
  }
}

TEST(Bubble, SolvesCriticalEquation) {
  const Dimension d(4);
  std::mt19937_64 rng(2);
  const BubbleParams b(point({0.1, -0.2, 0.05, 0.3}), 1.0);
  for (int k = 0; k < 100; ++k) {
    const Point y = b.a + oracle::random_in_ball(rng, 4, 2.0);
    auto f = [&](const Point& x) { return bubble_value(d, b, x); };
    const double res = -oracle::laplacian(f, y, 0.02) - std::pow(f(y), d.p());
    EXPECT_LT(std::abs(res), 1e-9);
  }
}

TEST(Psi0, ClosedFormValues) {
  const Dimension d(4);
  const BubbleParams b(Point::Zero(4), 1.0);
  EXPECT_NEAR(psi0_value(d, b, Point::Zero(4)), std::sqrt(8.0), 1e-15);
  EXPECT_NEAR(psi0_value(d, b, point({0.6, 0.8, 0, 0})), 0.0, 1e-15);
}

TEST(Psi, MatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lam(0.5, 20.0);
  for (int n = 3; n <= 6; ++n) {
    const Dimension d(n);
    for (int k = 0; k < 50; ++k) {
      const Point a = oracle::random_in_ball(rng, n, 1.0);
      const double l = lam(rng);
      const Point y = a + oracle::random_in_ball(rng, n, 2.0 / l);
      auto in_loglambda = [&](double s) { return bubble_value(d, BubbleParams(a, std::exp(s)), y); };
      const double fd0 = oracle::derivative(in_loglambda, std::log(l), 1e-3);
      EXPECT_LT(oracle::rel_err(psi0_value(d, BubbleParams(a, l), y), fd0), 1e-8);

      auto in_a = [&](const Point& c) { return bubble_value(d, BubbleParams(c, l), y); };
      const Point fd1 = oracle::gradient(in_a, a, 1e-3 / l) / l;
      const Point an1 = psi1_value(d, BubbleParams(a, l), y);
      EXPECT_LT((an1 - fd1).norm(), 1e-8 * an1.norm());

      auto in_y = [&](const Point& z) { return bubble_value(d, BubbleParams(a, l), z); };
      const Point fdg = oracle::gradient(in_y, y, 1e-3 / l);
      const Point ang = bubble_gradient(d, BubbleParams(a, l), y);
      EXPECT_LT((ang - fdg).norm(), 1e-8 * ang.norm());
    }
  }
}

TEST(Psi, BoundedByBubble) {
  std::mt19937_64 rng(4);
  for (int n = 3; n <= 6; ++n) {
    const Dimension d(n);
    const double C = 0.5 * (n - 2);
    for (double l : {1.0, 10.0, 1e3, 1e5}) {
      const BubbleParams b(Point::Zero(n), l);
      for (int k = 0; k < 100; ++k) {
        const Point y = oracle::random_in_ball(rng, n, 1.0);
        const double del = bubble_value(d, b, y);
        EXPECT_LE(std::abs(psi0_value(d, b, y)), C * del * (1 + 1e-12));
        EXPECT_LE(psi1_value(d, b, y).norm(), C * del * (1 + 1e-12));
      }
    }
  }
}

TEST(Nonlinearity, RejectsInvalidEps) {
  EXPECT_THROW(NonlinearityParams(-0.1), DomainError);
  EXPECT_THROW(NonlinearityParams(0.6), DomainError);
  EXPECT_NO_THROW(NonlinearityParams(0.5));
}

TEST(Nonlinearity, OddAndZero) {
  const Dimension d(5);
  const NonlinearityParams np(0.1);
  EXPECT_EQ(f_eps(d, np, 0.0), 0.0);
  for (double u : {1e-3, 0.5, 2.0, 1e4}) EXPECT_EQ(f_eps(d, np, -u), -f_eps(d, np, u));
}

TEST(Nonlinearity, EpsZeroIsPurePower) {
  for (int n = 3; n <= 6; ++n) {
    const Dimension d(n);
    const NonlinearityParams np(0.0);
    for (double u : {-3.0, -0.2, 0.7, 11.0}) {
      EXPECT_EQ(f_eps(d, np, u), std::pow(std::abs(u), d.p() - 1.0) * u);
    }
  }
}

TEST(Nonlinearity, DeviationBoundFromPower) {
  const Dimension d(4);
  const NonlinearityParams np(0.01), zero(0.0);
  for (int k = 0; k <= 2000; ++k) {
    const double U = 1e6 * std::pow(double(k) / 2000.0, 3.0);
    const double dev = std::abs(f_eps(d, np, U) - f_eps(d, zero, U));
    const double bound = 0.01 * std::pow(U, d.p()) * std::log(std::log(kE + U));
    EXPECT_LE(dev, bound * (1 + 1e-12) + 1e-300);
  }
}

TEST(Nonlinearity, DerivativesMatchFiniteDifferences) {
  for (int n = 3; n <= 6; ++n) {
    const Dimension d(n);
    for (double eps : {0.0, 0.01, 0.3}) {
      const NonlinearityParams np(eps);
      for (double u : {-50.0, -1.3, 0.2, 0.9, 7.0, 300.0}) {
        const double h = 1e-3 * std::abs(u);
        const double fd1 = oracle::derivative([&](double x) { return f_eps(d, np, x); }, u, h);
        EXPECT_LT(oracle::rel_err(f_eps_prime(d, np, u), fd1), 1e-8) << n << " " << eps << " " << u;
        const double fd2 = oracle::derivative([&](double x) { return f_eps_prime(d, np, x); }, u, h);
        EXPECT_LT(oracle::rel_err(f_eps_second(d, np, u), fd2), 1e-7) << n << " " << eps << " " << u;
      }
    }
  }
}

TEST(Nonlinearity, PrimeBoundedByPower) {
  const Dimension d(4);
  const NonlinearityParams np(0.5);
  double worst = 0.0;
  for (int k = 1; k <= 1000; ++k) {
    const double U = std::pow(10.0, -4.0 + 10.0 * k / 1000.0);
    worst = std::max(worst, std::abs(f_eps_prime(d, np, U)) / std::pow(U, d.p() - 1.0));
  }
  EXPECT_LE(worst, d.p());
}

TEST(Antiderivative, ExactAtEpsZero) {
  const Dimension d(4);
  const NonlinearityParams np(0.0);
  EXPECT_DOUBLE_EQ(F_eps(d, np, 2.0), 4.0);
  EXPECT_DOUBLE_EQ(F_eps(d, np, -2.0), 4.0);
}

TEST(Antiderivative, MatchesDirectIntegration) {
  boost::math::quadrature::tanh_sinh<double> ts;
  for (int n : {3, 4, 6}) {
    const Dimension d(n);
    for (double eps : {0.001, 0.1, 0.5}) {
      const NonlinearityParams np(eps);
      for (double u : {1e-6, 0.01, 0.7, 3.0, 250.0, 1e7, 1e15}) {
        const double direct = ts.integrate([&](double t) { return f_eps(d, np, t); }, 0.0, u);
        EXPECT_LT(oracle::rel_err(F_eps(d, np, u), direct), 1e-10) << n << " " << eps << " " << u;
        EXPECT_EQ(F_eps(d, np, -u), F_eps(d, np, u));
      }
    }
  }
}

TEST(Antiderivative, DerivativeIsNonlinearity) {
  const Dimension d(5);
  const NonlinearityParams np(0.05);
  for (double u : {0.3, 2.0, 40.0}) {
    const double fd = oracle::derivative([&](double x) { return F_eps(d, np, x); }, u, 1e-3 * u);
    EXPECT_LT(oracle::rel_err(fd, f_eps(d, np, u)), 1e-8);
  }
}
