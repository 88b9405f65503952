#pragma once

// Interaction scalar eps_ij and the pairwise inner products of projected
// bubbles, as leading-order expansions and as direct integrals.

#include "spikelab/constants.hpp"
#include "spikelab/integrate.hpp"
#include "spikelab/projected.hpp"

namespace spikelab {

namespace detail {
inline double eps_E(const BubbleParams& bi, const BubbleParams& bj) {
  const double li = bi.lambda, lj = bj.lambda;
  return li / lj + lj / li + li * lj * (bi.a - bj.a).squaredNorm();
}
}  // namespace detail

/// eps_ij = (l_i/l_j + l_j/l_i + l_i l_j |a_i - a_j|^2)^{(2-n)/2}.
inline double eps_ij(const Dimension& d, const BubbleParams& bi, const BubbleParams& bj) {
  return std::pow(detail::eps_E(bi, bj), -d.half_weight());
}

/// lambda_i d(eps_ij)/d(lambda_i).
inline double deps_dlambda_scaled(const Dimension& d, const BubbleParams& bi, const BubbleParams& bj) {
  const double li = bi.lambda, lj = bj.lambda;
  const double E = detail::eps_E(bi, bj);
  const double dE = li / lj - lj / li + li * lj * (bi.a - bj.a).squaredNorm();
  return -d.half_weight() * std::pow(E, -0.5 * d.n()) * dE;
}

/// (1/lambda_i) d(eps_ij)/d(a_i).
inline Point deps_da_scaled(const Dimension& d, const BubbleParams& bi, const BubbleParams& bj) {
  const double E = detail::eps_E(bi, bj);
  return (-(d.n() - 2) * bj.lambda * std::pow(E, -0.5 * d.n())) * (bi.a - bj.a);
}

struct SpikePair {
  BubbleParams bi, bj;
  int gi = 1, gj = 1;
};

/// Leading terms of the pairwise expansions with their remainder models.
struct PairExpansion {
  double pp = 0.0;    ///< <P delta_i, P delta_j>
  double plam = 0.0;  ///< <P delta_j, lambda_i dP delta_i / d lambda_i>
  Point pa;           ///< <P delta_j, (1/lambda_i) dP delta_i / d a_i>
  double R1 = 0.0;
  double R2 = 0.0;
  double eps = 0.0;
  bool warning = false;  ///< lambda d or eps_ij outside the validity regime
};

inline constexpr double kEpsSmallThreshold = 0.1;

template <GreenDomain D>
PairExpansion pair_inner_asymptotic(const SpikePair& pair, const D& dom, const UniversalConstants& k,
                                    double lambda_d_threshold = kDefaultLambdaDThreshold) {
  const Dimension d(dom.n());
  const auto& bi = pair.bi;
  const auto& bj = pair.bj;
  PairExpansion r;
  r.eps = eps_ij(d, bi, bj);
  const double h = d.half_weight();
  const double prod = std::pow(bi.lambda * bj.lambda, -h);
  const double Hij = dom.H(bi.a, bj.a);
  r.pp = k.cbar1 * (r.eps - Hij * prod);
  r.plam = k.cbar1 * (deps_dlambda_scaled(d, bi, bj) + h * Hij * prod);
  r.pa = k.cbar1 * (deps_da_scaled(d, bi, bj) - (prod / bi.lambda) * dom.grad_H_a(bi.a, bj.a));

  const double ldi = bi.lambda * dom.dist_boundary(bi.a);
  const double ldj = bj.lambda * dom.dist_boundary(bj.a);
  const int n = d.n();
  const double boundary = std::log(ldi) / std::pow(ldi, n) + std::log(ldj) / std::pow(ldj, n);
  r.R1 = boundary + std::pow(r.eps, double(n) / (n - 2)) * std::log(1.0 / r.eps);
  r.R2 = boundary + bj.lambda * (bi.a - bj.a).norm() * std::pow(r.eps, double(n + 1) / (n - 2));
  r.warning = ldi < lambda_d_threshold || ldj < lambda_d_threshold || r.eps > kEpsSmallThreshold;
  return r;
}

/// Integral of delta_i^p P delta_j over the domain. With `whole_space` the
/// integral is over R^n and H is dropped (P delta_j replaced by delta_j).
template <GreenDomain D>
IntegralResult pair_inner_quadrature(const SpikePair& pair, const D& dom, const IntegrationPlan& plan,
                                     bool whole_space = false) {
  const Dimension d(dom.n());
  const double p = d.p();
  const std::vector<ScaleHint> hints{{pair.bi.a, pair.bi.lambda}, {pair.bj.a, pair.bj.lambda}};
  if (whole_space) {
    auto f = [&](const Point& y) { return std::pow(bubble_value(d, pair.bi, y), p) * bubble_value(d, pair.bj, y); };
    IntegrationPlan det = plan;
    if (det.backend == BackendChoice::monte_carlo)
      throw ConfigurationError("whole-space pair integral needs the deterministic backend");
    return integrate_axisym(f, Region::whole(d.n()), hints, det.quad);
  }
  const ProjectedBubble<D> pj(dom, pair.bj);
  auto f = [&](const Point& y) { return std::pow(bubble_value(d, pair.bi, y), p) * pj.value(y); };
  return integrate_region(f, Region::ball(dom.center(), dom.radius()), hints, plan);
}

}  // namespace spikelab
