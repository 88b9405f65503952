#pragma once

// Aubin-Talenti bubble delta_(a,lambda) and its scaled parameter derivatives.

#include "spikelab/types.hpp"

namespace spikelab {

/// Spatial dimension n >= 3 and the critical exponent p = (n+2)/(n-2).
class Dimension {
 public:
  explicit Dimension(int n) : n_(n) {
    if (n < 3 || n > kMaxDim) throw DomainError("dimension must satisfy 3 <= n <= " + std::to_string(kMaxDim));
  }
  int n() const noexcept { return n_; }
  double p() const noexcept { return double(n_ + 2) / double(n_ - 2); }
  /// (n-2)/2, the scaling weight of the bubble.
  double half_weight() const noexcept { return 0.5 * (n_ - 2); }
  /// The existence theorem is stated for n >= 4; n = 3 is accepted but flagged.
  bool outside_theorem() const noexcept { return n_ < 4; }
  /// Bubble amplitude c0 = (n(n-2))^{(n-2)/4}.
  double c0() const { return std::pow(double(n_) * (n_ - 2), 0.25 * (n_ - 2)); }

 private:
  int n_;
};

struct BubbleParams {
  Point a;
  double lambda = 1.0;

  BubbleParams() = default;
  BubbleParams(Point center, double rate) : a(std::move(center)), lambda(rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("bubble rate lambda must be positive");
  }
};

/// delta_(a,lambda)(y) = c0 lambda^{(n-2)/2} (1 + lambda^2 |y-a|^2)^{-(n-2)/2}.
inline double bubble_value(const Dimension& d, const BubbleParams& b, const Point& y) {
  const double l = b.lambda;
  const double q = 1.0 + l * l * (y - b.a).squaredNorm();
  return d.c0() * std::pow(l / q, d.half_weight());
}

/// psi0 = lambda d(delta)/d(lambda).
inline double psi0_value(const Dimension& d, const BubbleParams& b, const Point& y) {
  const double l = b.lambda;
  const double s = l * l * (y - b.a).squaredNorm();
  const double h = d.half_weight();
  return d.c0() * h * std::pow(l, h) * (1.0 - s) * std::pow(1.0 + s, -0.5 * d.n());
}

/// psi1 = (1/lambda) d(delta)/d(a), componentwise.
inline Point psi1_value(const Dimension& d, const BubbleParams& b, const Point& y) {
  const double l = b.lambda;
  const Point diff = y - b.a;
  const double s = l * l * diff.squaredNorm();
  const double h = d.half_weight();
  return (d.c0() * (d.n() - 2) * std::pow(l, h) * l * std::pow(1.0 + s, -0.5 * d.n())) * diff;
}

/// Spatial gradient of delta with respect to y.
inline Point bubble_gradient(const Dimension& d, const BubbleParams& b, const Point& y) {
  const double l = b.lambda;
  const Point diff = y - b.a;
  const double s = l * l * diff.squaredNorm();
  const double h = d.half_weight();
  return (-d.c0() * (d.n() - 2) * std::pow(l, h) * l * l * std::pow(1.0 + s, -0.5 * d.n())) * diff;
}

/// Radial profiles of the unit bubble, used by constants and tests.
inline double unit_bubble(const Dimension& d, double r) {
  return d.c0() * std::pow(1.0 + r * r, -d.half_weight());
}
inline double unit_psi0(const Dimension& d, double r) {
  return d.c0() * d.half_weight() * (1.0 - r * r) * std::pow(1.0 + r * r, -0.5 * d.n());
}
/// log of the unit bubble, computed without forming the power.
inline double unit_log_bubble(const Dimension& d, double r) {
  return std::log(d.c0()) - d.half_weight() * std::log1p(r * r);
}

}  // namespace spikelab
