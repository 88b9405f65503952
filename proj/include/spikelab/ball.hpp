#pragma once

// Ball domain with closed-form Green's function G(x,y) = |x-y|^{2-n} - H(x,y),
// where on the unit ball H(x,y) = (|x|^2|y|^2 - 2x.y + 1)^{(2-n)/2}.

#include "spikelab/bubble.hpp"

#include <concepts>

namespace spikelab {

class BallDomain {
 public:
  BallDomain(int n, Point center, double radius) : dim_(n), c_(std::move(center)), R_(radius) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("ball radius must be positive");
    if (c_.size() != n) throw DomainError("ball center has wrong dimension");
  }
  static BallDomain unit(int n) { return BallDomain(n, Point::Zero(n), 1.0); }

  int n() const noexcept { return dim_.n(); }
  const Dimension& dimension() const noexcept { return dim_; }
  const Point& center() const noexcept { return c_; }
  double radius() const noexcept { return R_; }

  bool contains(const Point& y) const { return y.size() == n() && (y - c_).norm() < R_; }

  double dist_boundary(const Point& a) const {
    require_inside(a, "dist_boundary");
    return R_ - (a - c_).norm();
  }

  double H(const Point& x, const Point& y) const {
    require_inside(x, "H");
    require_inside(y, "H");
    return std::pow(R_, 2 - n()) * unit_H(u(x), u(y));
  }

  double G(const Point& x, const Point& y) const {
    const double h = H(x, y);
    const double r2 = (x - y).squaredNorm();
    if (r2 == 0.0) throw DomainError("Green's function is singular at x = y");
    return std::pow(r2, 0.5 * (2 - n())) - h;
  }

  /// Robin function H(x, x).
  double robin(const Point& x) const { return H(x, x); }

  /// Gradient of H in its first argument.
  Point grad_H_a(const Point& x, const Point& y) const {
    require_inside(x, "grad_H_a");
    require_inside(y, "grad_H_a");
    return std::pow(R_, 1 - n()) * unit_grad_H(u(x), u(y));
  }
  /// Gradient of H in its second argument.
  Point grad_H_b(const Point& x, const Point& y) const { return grad_H_a(y, x); }

  Point grad_G_a(const Point& x, const Point& y) const {
    return singular_grad(x, y) - grad_H_a(x, y);
  }
  Point grad_G_b(const Point& x, const Point& y) const { return grad_G_a(y, x); }

  /// d^2 H / dx dx.
  SmallMatrix hess_H_aa(const Point& x, const Point& y) const {
    require_inside(x, "hess_H_aa");
    require_inside(y, "hess_H_aa");
    return std::pow(R_, -n()) * unit_hess_aa(u(x), u(y));
  }
  /// d^2 H / dx dy; entry (i, j) differentiates x_i then y_j.
  SmallMatrix hess_H_ab(const Point& x, const Point& y) const {
    require_inside(x, "hess_H_ab");
    require_inside(y, "hess_H_ab");
    return std::pow(R_, -n()) * unit_hess_ab(u(x), u(y));
  }
  SmallMatrix hess_H_bb(const Point& x, const Point& y) const { return hess_H_aa(y, x); }

  SmallMatrix hess_G_aa(const Point& x, const Point& y) const { return singular_hess(x, y) - hess_H_aa(x, y); }
  SmallMatrix hess_G_ab(const Point& x, const Point& y) const { return -singular_hess(x, y) - hess_H_ab(x, y); }

  /// Gradient of the Robin function, 2 * grad_H_a(x, x) by symmetry of H.
  Point grad_robin(const Point& x) const { return 2.0 * grad_H_a(x, x); }

 private:
  Point u(const Point& x) const { return (x - c_) / R_; }

  void require_inside(const Point& x, const char* what) const {
    if (!contains(x)) throw DomainError(std::string(what) + ": point outside the ball");
  }

  double k() const { return 0.5 * (2 - n()); }

  static double Q(const Point& x, const Point& y) {
    return x.squaredNorm() * y.squaredNorm() - 2.0 * x.dot(y) + 1.0;
  }

  double unit_H(const Point& x, const Point& y) const { return std::pow(Q(x, y), k()); }

  Point unit_grad_H(const Point& x, const Point& y) const {
    const Point v = 2.0 * y.squaredNorm() * x - 2.0 * y;
    return (k() * std::pow(Q(x, y), k() - 1.0)) * v;
  }

  SmallMatrix unit_hess_aa(const Point& x, const Point& y) const {
    const double q = Q(x, y);
    const double kk = k();
    const Point v = 2.0 * y.squaredNorm() * x - 2.0 * y;
    SmallMatrix m = (kk * (kk - 1.0) * std::pow(q, kk - 2.0)) * (v * v.transpose());
    m.diagonal().array() += kk * std::pow(q, kk - 1.0) * 2.0 * y.squaredNorm();
    return m;
  }

  SmallMatrix unit_hess_ab(const Point& x, const Point& y) const {
    const double q = Q(x, y);
    const double kk = k();
    const Point v = 2.0 * y.squaredNorm() * x - 2.0 * y;
    const Point w = 2.0 * x.squaredNorm() * y - 2.0 * x;
    SmallMatrix m = (kk * (kk - 1.0) * std::pow(q, kk - 2.0)) * (v * w.transpose());
    SmallMatrix lin = 4.0 * x * y.transpose();
    lin.diagonal().array() -= 2.0;
    m += (kk * std::pow(q, kk - 1.0)) * lin;
    return m;
  }

  // derivatives of |x-y|^{2-n} in x
  Point singular_grad(const Point& x, const Point& y) const {
    const Point d = x - y;
    const double r2 = d.squaredNorm();
    if (r2 == 0.0) throw DomainError("Green's function is singular at x = y");
    return (2.0 * k() * std::pow(r2, k() - 1.0)) * d;
  }

  SmallMatrix singular_hess(const Point& x, const Point& y) const {
    const Point d = x - y;
    const double r2 = d.squaredNorm();
    if (r2 == 0.0) throw DomainError("Green's function is singular at x = y");
    const double kk = k();
    SmallMatrix m = (2.0 * kk * (2.0 * kk - 2.0) * std::pow(r2, kk - 2.0)) * (d * d.transpose());
    m.diagonal().array() += 2.0 * kk * std::pow(r2, kk - 1.0);
    return m;
  }

  Dimension dim_;
  Point c_;
  double R_;
};

/// What the rest of the library needs from a domain. Only balls are provided.
template <class D>
concept GreenDomain = requires(const D& d, const Point& x) {
  { d.n() } -> std::convertible_to<int>;
  { d.contains(x) } -> std::convertible_to<bool>;
  { d.dist_boundary(x) } -> std::convertible_to<double>;
  { d.G(x, x) } -> std::convertible_to<double>;
  { d.H(x, x) } -> std::convertible_to<double>;
  { d.grad_H_a(x, x) } -> std::convertible_to<Point>;
  { d.grad_G_a(x, x) } -> std::convertible_to<Point>;
  { d.center() } -> std::convertible_to<Point>;
  { d.radius() } -> std::convertible_to<double>;
};

static_assert(GreenDomain<BallDomain>);

}  // namespace spikelab
