#include <gtest/gtest.h>

#include <spikelab/constructor.hpp>

#include <sstream>

#include "oracles.hpp"

using namespace spikelab;

namespace {

Point axis_point(int n, double t) {
  Point p = Point::Zero(n);
  p(0) = t;
  return p;
}

SpikeAnsatz single(int n, const Point& a, double lambda, double eps = 0.0, double alpha = 1.0, int gamma = 1) {
  SpikeAnsatz s;
  s.pattern = SpikePattern({gamma});
  s.alpha = Vector::Constant(1, alpha);
  s.lambda = Vector::Constant(1, lambda);
  s.a = {a};
  s.eps = eps;
  (void)n;
  return s;
}

const CriticalPoint& central_point() {
  static const CriticalPoint cp = [] {
    SearchConfig cfg;
    cfg.random_starts = 4;
    return find_critical_points(SpikePattern::same_sign(1), BallDomain::unit(4), cfg).at(0);
  }();
  return cp;
}

const CriticalPoint& opposite_pair() {
  static const CriticalPoint cp = [] {
    SearchConfig cfg;
    cfg.collinear = true;
    return find_critical_points(SpikePattern({1, -1}), BallDomain::unit(4), cfg).at(0);
  }();
  return cp;
}

const std::vector<double> kLadder{1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 1e-5, 1e-6};

}  // namespace

TEST(Ansatz, FlagsInsideAndOutsideAdmissibleSet) {
  const BallDomain dom = BallDomain::unit(4);
  EXPECT_FALSE(single(4, Point::Zero(4), 200.0).flags(dom).any());
  EXPECT_TRUE(single(4, Point::Zero(4), 200.0, 0.0, 1.6).flags(dom).alpha);
  EXPECT_TRUE(single(4, axis_point(4, 0.97), 200.0).flags(dom).boundary);
  EXPECT_TRUE(single(4, Point::Zero(4), 200.0, 0.45).flags(dom).loglog);
  SpikeAnsatz two;
  two.pattern = SpikePattern({1, -1});
  two.alpha = Vector::Ones(2);
  two.lambda = Vector(2);
  two.lambda << 100.0, 2000.0;
  two.a = {axis_point(4, 0.1), axis_point(4, -0.1)};
  const auto f = two.flags(dom);
  EXPECT_TRUE(f.ratio);
  EXPECT_TRUE(f.separation);
  EXPECT_EQ(f.describe(), "ratio, separation");
  two.alpha(0) = -1.0;
  EXPECT_THROW(two.validate(dom), DomainError);
}

TEST(Field, PeakValueAndGradient) {
  const BallDomain dom = BallDomain::unit(4);
  const double lambda = 400.0;
  const Point a = axis_point(4, 0.3);
  const AnsatzField<BallDomain> field(single(4, a, lambda, 0.0, 1.1), dom);
  const Dimension d(4);
  const double peak = 1.1 * d.c0() * lambda;
  EXPECT_LT(std::abs(field.value(a) / peak - 1.0), 2.0 * dom.robin(a) / (lambda * lambda));
  std::mt19937_64 rng(41);
  for (int k = 0; k < 20; ++k) {
    const Point y = oracle::random_in_ball(rng, 4, 0.9);
    const Point fd = oracle::gradient([&](const Point& z) { return field.value(z); }, y, 1e-5);
    EXPECT_LT((field.gradient(y) - fd).norm(), 1e-6 * std::max(1.0, fd.norm()));
  }
  EXPECT_THROW(field.value(axis_point(4, 1.2)), DomainError);
}

TEST(Field, VanishesOnBoundaryToModelError) {
  const BallDomain dom = BallDomain::unit(5);
  const double lambda = 150.0;
  const AnsatzField<BallDomain> field(single(5, axis_point(5, 0.2), lambda), dom);
  const double bound = 20.0 * std::pow(lambda, -3.5) / std::pow(0.8, 5);
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  for (int k = 0; k < 50; ++k) {
    Point y(5);
    for (int c = 0; c < 5; ++c) y(c) = g(rng);
    y *= (1.0 - 1e-12) / y.norm();
    EXPECT_LT(std::abs(field.value(y)), bound);
  }
}

TEST(Field, SignChangingPairAttainsBothSigns) {
  const BallDomain dom = BallDomain::unit(4);
  const auto seed = asymptotic_ansatz(1e-3, opposite_pair(), SpikePattern({1, -1}), constants_for(4));
  const auto rows = sample_field(AnsatzField<BallDomain>(seed, dom), plane_grid(dom, 41));
  double lo = 0.0, hi = 0.0;
  for (const auto& r : rows) lo = std::min(lo, r.u), hi = std::max(hi, r.u);
  EXPECT_LT(lo, 0.0);
  EXPECT_GT(hi, 0.0);
}

TEST(Field, CsvLayout) {
  const BallDomain dom = BallDomain::unit(3);
  const AnsatzField<BallDomain> field(single(3, Point::Zero(3), 50.0), dom);
  std::ostringstream os;
  write_field_csv(os, sample_field(field, {Point::Zero(3)}), 3);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "y_1,y_2,y_3,u,grad_sq");
  EXPECT_NE(s.find("0.0000000000000000e+00,0.0000000000000000e+00"), std::string::npos);
}

TEST(Energy, SingleCentralBubble) {
  const BallDomain dom = BallDomain::unit(4);
  const auto& k = constants_for(4);
  const auto I = energy_I(single(4, Point::Zero(4), 300.0), dom, NonlinearityParams(0.0));
  EXPECT_LT(std::abs(I.value / (k.Sn_pow / 4.0) - 1.0), 0.01);
  // next order: S/n + c1 H / (2 lambda^2)
  EXPECT_LT(std::abs(I.value - (k.Sn_pow / 4.0 + 0.5 * k.cbar1 / 9e4)), 0.1 * 0.5 * k.cbar1 / 9e4);
}

TEST(Energy, SmallAmplitudeAndSignFlip) {
  const BallDomain dom = BallDomain::unit(4);
  const NonlinearityParams np(0.01);
  const auto tiny = energy_I(single(4, Point::Zero(4), 100.0, 0.01, 1e-9), dom, np);
  EXPECT_LT(std::abs(tiny.value), 1e-15);
  const auto up = energy_I(single(4, axis_point(4, 0.2), 100.0, 0.01, 1.0, 1), dom, np);
  const auto down = energy_I(single(4, axis_point(4, 0.2), 100.0, 0.01, 1.0, -1), dom, np);
  EXPECT_NEAR(up.value, down.value, 1e-12 * std::abs(up.value));
}

TEST(Energy, IncreasesWithRobinFunction) {
  const BallDomain dom = BallDomain::unit(4);
  double prev = -1e300;
  for (double t : {0.0, 0.2, 0.4, 0.6}) {
    const double I = energy_I(single(4, axis_point(4, t), 100.0), dom, NonlinearityParams(0.0)).value;
    EXPECT_GT(I, prev);
    prev = I;
  }
}

TEST(Pairing, WholeSpaceBubbleIsCritical) {
  const BallDomain huge(4, Point::Zero(4), 1e4);
  const auto s = single(4, Point::Zero(4), 1.0);
  const auto r = grad_pairing(s, huge, NonlinearityParams(0.0), PairingDirection::lambda, 0);
  // only the regular part H(0,0) = R^{-2} survives
  const double regular = -constants_for(4).Gamma2 * huge.robin(Point::Zero(4));
  EXPECT_LT(std::abs(r.value), 1e-7 * constants_for(4).Sn_pow);
  EXPECT_LT(std::abs(r.value - regular), 0.01 * std::abs(regular));
}

TEST(Pairing, AlphaDirection) {
  const BallDomain dom = BallDomain::unit(4);
  const auto& k = constants_for(4);
  const double alpha = 1.05, lambda = 300.0;
  const Dimension d(4);
  const auto r = grad_pairing(single(4, Point::Zero(4), lambda, 0.0, alpha), dom, NonlinearityParams(0.0),
                              PairingDirection::pdelta, 0);
  const double lead = alpha * (1.0 - std::pow(alpha, d.p() - 1.0)) * k.Sn_pow;
  const double budget = 3.0 * std::pow(alpha, d.p()) * k.cbar1 / (lambda * lambda) * (d.p() + 1.0);
  EXPECT_LT(std::abs(r.value - lead), budget);
}

TEST(Pairing, PositionVanishesAtCenter) {
  const BallDomain dom = BallDomain::unit(4);
  const auto r = grad_pairing(single(4, Point::Zero(4), 200.0, 1e-3), dom, NonlinearityParams(1e-3),
                              PairingDirection::position, 0);
  EXPECT_LT(std::abs(r.value), 1e-12);
}

TEST(Constructor, ChangeOfVariablesIsExact) {
  const auto& k = constants_for(4);
  const auto& cp = central_point();
  double ratio0 = 0.0;
  double prev_gap = 1e300;
  for (double eps : kLadder) {
    const auto s = asymptotic_ansatz(eps, cp, SpikePattern::same_sign(1), k);
    const double le = std::abs(std::log(eps));
    EXPECT_NEAR(std::pow(s.lambda(0), -1.0) * std::sqrt(le / eps), k.cbar * cp.Lambda(0), 1e-14);
    EXPECT_NEAR(mu_from_lambda(4, k.cbar, s.lambda(0), eps), cp.Lambda(0), 1e-14);
    const double sup = s.alpha(0) * Dimension(4).c0() * s.lambda(0);
    const double ratio = sup / std::sqrt(le / eps);
    if (ratio0 == 0.0) ratio0 = ratio;
    EXPECT_NEAR(ratio / ratio0, 1.0, 1e-12);
    const double gap = std::abs(std::log(s.lambda(0)) * 2.0 / le - 1.0);
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
  }
  EXPECT_THROW(asymptotic_ansatz(0.5, cp, SpikePattern::same_sign(1), k), DomainError);
}

TEST(Constructor, CriticalPointCondition) {
  const BallDomain dom = BallDomain::unit(4);
  for (const CriticalPoint* cp : {&central_point(), &opposite_pair()}) {
    const SpikePattern pat = cp->x.size() == 1 ? SpikePattern::same_sign(1) : SpikePattern({1, -1});
    const auto r = matrix_M(cp->x, pat, dom);
    const Vector ML = r.M * cp->Lambda;
    for (int i = 0; i < pat.m(); ++i) EXPECT_NEAR(cp->Lambda(i) * ML(i), 1.0, 1e-10);
  }
}

TEST(Constructor, AsymptoticResidualAtSeed) {
  const BallDomain dom = BallDomain::unit(4);
  const auto& k = constants_for(4);
  double lo = 1e300, hi = 0.0;
  for (double eps : kLadder) {
    const auto s = asymptotic_ansatz(eps, central_point(), SpikePattern::same_sign(1), k);
    const auto r = reduced_residual(s, dom, k, ResidualBackend::asymptotic);
    EXPECT_EQ(r.r_alpha(0), 0.0);
    EXPECT_LT(r.r_a.norm(), 1e-300 + 1e-14 * k.cbar1);
    const double scaled = std::abs(r.r_lambda(0)) / (eps / std::abs(std::log(eps)));
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi / lo, 10.0);
}

TEST(Constructor, BackendsAgreeForCentralSpike) {
  const BallDomain dom = BallDomain::unit(4);
  const auto& k = constants_for(4);
  const auto s = asymptotic_ansatz(1e-3, central_point(), SpikePattern::same_sign(1), k);
  const auto a = reduced_residual(s, dom, k, ResidualBackend::asymptotic);
  const auto q = reduced_residual(s, dom, k, ResidualBackend::quadrature);
  EXPECT_LT(std::abs(a.r_lambda(0) - q.r_lambda(0)), 0.25 * std::abs(a.r_lambda(0)) + q.err_lambda(0));
  EXPECT_LT(q.r_a.norm(), 1e-10);
}

TEST(Constructor, RefineLadderSingleSpike) {
  const BallDomain dom = BallDomain::unit(4);
  const auto& k = constants_for(4);
  std::vector<double> beta_ratio, zeta_ratio;
  for (double eps : kLadder) {
    const auto seed = asymptotic_ansatz(eps, central_point(), SpikePattern::same_sign(1), k);
    const auto r = refine(seed, central_point(), dom, k);
    EXPECT_LT(r.residual, 1e-10);
    EXPECT_TRUE(r.jacobian_regular);
    EXPECT_LT(r.xi[0].norm(), 1e-12);
    const double le = std::abs(std::log(eps)), lle = std::log(le);
    beta_ratio.push_back(std::abs(r.beta(0)) / (eps * lle));
    zeta_ratio.push_back(std::abs(r.zeta(0)) * le / lle);
    EXPECT_FALSE(r.ansatz.flags(dom).any()) << eps;
  }
  for (const auto* v : {&beta_ratio, &zeta_ratio}) {
    const auto [mn, mx] = std::minmax_element(v->begin(), v->end());
    EXPECT_GT(*mn, 0.05);
    EXPECT_LT(*mx / *mn, 3.0);
  }
}

TEST(Constructor, RefineIsFixedPointAtConvergedSeed) {
  const BallDomain dom = BallDomain::unit(4);
  const auto& k = constants_for(4);
  const auto seed = asymptotic_ansatz(1e-4, opposite_pair(), SpikePattern({1, -1}), k);
  const auto once = refine(seed, opposite_pair(), dom, k);
  const auto twice = refine(once.ansatz, opposite_pair(), dom, k);
  EXPECT_EQ(twice.iterations, 0);
  EXPECT_EQ(twice.ansatz.lambda, once.ansatz.lambda);
  EXPECT_EQ(twice.ansatz.alpha, once.ansatz.alpha);
}

TEST(Constructor, JacobianRegularityTracksNondegeneracy) {
  const BallDomain dom = BallDomain::unit(4);
  const auto& k = constants_for(4);
  const SpikePattern pat({1, -1});
  const auto seed = asymptotic_ansatz(1e-3, opposite_pair(), pat, k);
  EXPECT_TRUE(opposite_pair().nondegenerate);
  EXPECT_TRUE(refine(seed, opposite_pair(), dom, k).jacobian_regular);
  // the same point viewed in full space has rotational zero modes
  SearchConfig full;
  full.random_starts = 8;
  for (const auto& cp : find_critical_points(pat, dom, full)) {
    EXPECT_FALSE(cp.nondegenerate);
    CriticalPoint forced = cp;
    forced.nondegenerate = true;
    const auto s = asymptotic_ansatz(1e-3, forced, pat, k);
    RefineOptions opt;
    opt.max_iter = 0;
    try {
      EXPECT_FALSE(refine(s, forced, dom, k, opt).jacobian_regular);
    } catch (const ConvergenceError& e) {
      EXPECT_NE(std::string(e.what()).find("Jacobian singular"), std::string::npos);
    }
  }
}

TEST(Constructor, RefineDivergenceCarriesHistory) {
  const BallDomain dom = BallDomain::unit(4);
  const auto& k = constants_for(4);
  const auto seed = asymptotic_ansatz(1e-3, central_point(), SpikePattern::same_sign(1), k);
  RefineOptions opt;
  opt.max_iter = 1;
  try {
    refine(seed, central_point(), dom, k, opt);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("residual history"), std::string::npos);
  }
}

TEST(Concentration, CentralSpikeMass) {
  const BallDomain dom = BallDomain::unit(4);
  const auto& k = constants_for(4);
  const auto s = refine(asymptotic_ansatz(1e-4, central_point(), SpikePattern::same_sign(1), k), central_point(),
                        dom, k)
                     .ansatz;
  const auto rep = concentration_report(s, dom, central_point().x, {0.25});
  const double ratio = rep.local_mass(0, 0) / k.Sn_pow;
  EXPECT_GE(ratio, 0.97);
  EXPECT_LE(ratio, 1.01);
  // radial tail of |grad delta|^2 outside radius r, closed form for n = 4
  const double lambda = s.lambda(0);
  const double W = 1.0 + std::pow(lambda * 0.25, 2);
  const double tail = 8.0 * 4.0 * 2.0 * kPi * kPi * 0.5 * (1.0 / W - 1.0 / (W * W) + 1.0 / (3.0 * W * W * W));
  // grad P delta = grad delta at the center; u carries the amplitude alpha
  EXPECT_NEAR(ratio, s.alpha(0) * s.alpha(0) * (1.0 - tail / k.Sn_pow), 1e-9);
}

TEST(Concentration, MassesConvergeAcrossLadder) {
  const BallDomain dom = BallDomain::unit(4);
  const auto& k = constants_for(4);
  double prev_ext = 1e300, prev_gap = 1e300;
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const auto s = asymptotic_ansatz(eps, opposite_pair(), SpikePattern({1, -1}), k);
    const auto rep = concentration_report(s, dom, opposite_pair().x, {0.2});
    EXPECT_LT(std::abs(rep.exterior[0]), prev_ext);
    prev_ext = std::abs(rep.exterior[0]);
    const double gap = std::abs(rep.total_mass / (2.0 * k.Sn_pow) - 1.0);
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
  }
}
