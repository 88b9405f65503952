#pragma once

// First-order projection P delta = delta - phi, phi = c0 H(a, .) / lambda^{(n-2)/2}.
// The correction f_(a,lambda) is dropped; its size is O(lambda^{-(n+2)/2} d^{-n}).

#include "spikelab/ball.hpp"

namespace spikelab {

inline constexpr double kDefaultLambdaDThreshold = 10.0;

template <GreenDomain D = BallDomain>
class ProjectedBubble {
 public:
  ProjectedBubble(const D& dom, BubbleParams b, double lambda_d_threshold = kDefaultLambdaDThreshold)
      : dom_(&dom), dim_(dom.n()), b_(std::move(b)) {
    if (b_.a.size() != dom.n()) throw DomainError("bubble center has wrong dimension");
    d_ = dom.dist_boundary(b_.a);
    warn_ = b_.lambda * d_ < lambda_d_threshold;
  }

  const BubbleParams& params() const noexcept { return b_; }
  const Dimension& dimension() const noexcept { return dim_; }
  const D& domain() const noexcept { return *dom_; }
  double dist() const noexcept { return d_; }
  /// lambda * d(a, boundary) below the configured threshold.
  bool warning() const noexcept { return warn_; }

  double delta(const Point& y) const { return bubble_value(dim_, b_, y); }

  double phi(const Point& y) const { return dim_.c0() * dom_->H(b_.a, y) * inv_scale(); }

  double value(const Point& y) const { return delta(y) - phi(y); }

  Point gradient(const Point& y) const {
    return bubble_gradient(dim_, b_, y) - (dim_.c0() * inv_scale()) * dom_->grad_H_a(y, b_.a);
  }

  /// lambda d(P delta)/d(lambda).
  double lambda_direction(const Point& y) const {
    return psi0_value(dim_, b_, y) + dim_.half_weight() * dim_.c0() * inv_scale() * dom_->H(b_.a, y);
  }

  /// (1/lambda) d(P delta)/d(a).
  Point a_direction(const Point& y) const {
    return psi1_value(dim_, b_, y) -
           (dim_.c0() * std::pow(b_.lambda, -0.5 * dim_.n())) * dom_->grad_H_a(b_.a, y);
  }

 private:
  double inv_scale() const { return std::pow(b_.lambda, -dim_.half_weight()); }

  const D* dom_;
  Dimension dim_;
  BubbleParams b_;
  double d_ = 0.0;
  bool warn_ = false;
};

template <GreenDomain D>
ProjectedBubble(const D&, BubbleParams, double) -> ProjectedBubble<D>;
template <GreenDomain D>
ProjectedBubble(const D&, BubbleParams) -> ProjectedBubble<D>;

}  // namespace spikelab
