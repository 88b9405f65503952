#pragma once

// The energy I_eps(u) = 1/2 int |grad u|^2 - int F_eps(u) of an ansatz and the
// pairings <grad I_eps(u), w> with the tangent directions of the bubble manifold.

#include "spikelab/ansatz.hpp"
#include "spikelab/integrate.hpp"
#include "spikelab/nonlinearity.hpp"

namespace spikelab {

enum class PairingDirection { pdelta, lambda, position };

inline const char* to_string(PairingDirection d) {
  switch (d) {
    case PairingDirection::pdelta: return "pdelta";
    case PairingDirection::lambda: return "lambda";
    case PairingDirection::position: return "position";
  }
  return "unknown";
}

template <GreenDomain D>
Region domain_region(const D& dom) {
  return Region::ball(dom.center(), dom.radius());
}

/// I_eps(u) with the Dirichlet part written as 1/2 int u (-Delta u).
template <GreenDomain D>
IntegralResult energy_I(const SpikeAnsatz& ans, const D& dom, const NonlinearityParams& np,
                        const IntegrationPlan& plan = {}) {
  const AnsatzField<D> field(ans, dom);
  const Dimension d(dom.n());
  auto f = [&](const Point& y) {
    double u = 0.0;
    for (int i = 0; i < field.m(); ++i) u += field.coefficient(i) * field.spike(i).value(y);
    return 0.5 * u * field.minus_laplacian(y) - F_eps(d, np, u);
  };
  return integrate_region(f, domain_region(dom), field.hints(), plan, 0);
}

/// <grad I_eps(u), w> = int (-Delta u) w - int f_eps(u) w for w one of
/// P delta_i, lambda_i d_lambda P delta_i, or unit . lambda_i^{-1} d_a P delta_i.
template <GreenDomain D>
IntegralResult grad_pairing(const SpikeAnsatz& ans, const D& dom, const NonlinearityParams& np,
                            PairingDirection dir, int i, const IntegrationPlan& plan = {}, Point unit = Point()) {
  const AnsatzField<D> field(ans, dom);
  if (i < 0 || i >= field.m()) throw DomainError("pairing spike index out of range");
  const Dimension d(dom.n());
  const auto& pb = field.spike(i);
  if (dir == PairingDirection::position) {
    if (unit.size() == 0) {
      // axial direction of a collinear configuration
      const AxisFrame fr = axis_frame(domain_region(dom), field.hints());
      unit = fr.e;
    }
    if (unit.size() != dom.n() || std::abs(unit.norm() - 1.0) > 1e-12)
      throw DomainError("position pairing needs a unit vector");
  }
  auto w = [&](const Point& y) {
    switch (dir) {
      case PairingDirection::pdelta: return pb.value(y);
      case PairingDirection::lambda: return pb.lambda_direction(y);
      case PairingDirection::position: return unit.dot(pb.a_direction(y));
    }
    return 0.0;
  };
  auto f = [&](const Point& y) {
    double u = 0.0;
    for (int k = 0; k < field.m(); ++k) u += field.coefficient(k) * field.spike(k).value(y);
    return (field.minus_laplacian(y) - f_eps(d, np, u)) * w(y);
  };
  // the pairing is a small difference of O(S_n^{n/2}) terms: stop refining at their roundoff scale
  IntegrationPlan p = plan;
  if (p.quad.abs_tol == 0.0) p.quad.abs_tol = 1e-12 * constants_for(dom.n()).Sn_pow;
  return integrate_region(f, domain_region(dom), field.hints(), p, 1 + 3 * std::uint64_t(i) + std::uint64_t(dir));
}

}  // namespace spikelab
