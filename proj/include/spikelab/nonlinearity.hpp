#pragma once

// The slightly subcritical nonlinearity f_eps(u) = |u|^{p-1} u / ln(e+|u|)^eps,
// its first two derivatives, and a cached antiderivative F_eps.

#include "spikelab/bubble.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace spikelab {

inline constexpr double kMaxEps = 0.5;

struct NonlinearityParams {
  double eps = 0.0;

  NonlinearityParams() = default;
  explicit NonlinearityParams(double e) : eps(e) {
    if (!(e >= 0.0)) throw DomainError("eps must be non-negative");
    if (e > kMaxEps) throw DomainError("eps above the supported cap 0.5");
  }
};

namespace detail {
inline double log_e_plus(double au) { return std::log(kE + au); }
}  // namespace detail

inline double f_eps(const Dimension& d, const NonlinearityParams& np, double u) {
  const double au = std::abs(u);
  if (au == 0.0) return 0.0;
  double v = std::pow(au, d.p() - 1.0) * u;
  if (np.eps != 0.0) v *= std::pow(detail::log_e_plus(au), -np.eps);
  return v;
}

inline double f_eps_prime(const Dimension& d, const NonlinearityParams& np, double u) {
  const double au = std::abs(u);
  if (au == 0.0) return 0.0;
  const double L = detail::log_e_plus(au);
  const double g = au / ((kE + au) * L);
  return std::pow(au, d.p() - 1.0) * std::pow(L, -np.eps) * (d.p() - np.eps * g);
}

inline double f_eps_second(const Dimension& d, const NonlinearityParams& np, double u) {
  const double au = std::abs(u);
  if (au == 0.0) return 0.0;
  const double p = d.p();
  const double L = detail::log_e_plus(au);
  const double Le = std::pow(L, -np.eps);
  const double g = au / ((kE + au) * L);
  const double sgn = u > 0.0 ? 1.0 : -1.0;
  const double t1 = np.eps * std::pow(au, p - 1.0) * Le * (au - kE * L) / ((kE + au) * (kE + au) * L * L);
  const double t2 = std::pow(au, p - 2.0) * Le * (p - 1.0 - np.eps * g) * (p - np.eps * g);
  return sgn * (t1 + t2);
}

/// F_eps(u) = int_0^u f_eps. Written as |u|^{p+1}/(p+1) * g(ln|u|) with g
/// smooth; g is interpolated by piecewise Chebyshev series on
/// ln|u| in [kLo, kHi] and evaluated by tanh-sinh quadrature outside.
class AntiderivativeTable {
 public:
  static constexpr double kLo = -20.0;
  static constexpr double kHi = 32.0;
  static constexpr int kDegree = 20;

  AntiderivativeTable(const Dimension& d, double eps, double tol = 1e-12) : n_(d.n()), p_(d.p()), eps_(eps) {
    if (eps_ == 0.0) return;
    build(kLo, kHi, tol, 0);
  }

  double operator()(double u) const {
    const double au = std::abs(u);
    if (au == 0.0) return 0.0;
    const double base = std::pow(au, p_ + 1.0) / (p_ + 1.0);
    if (eps_ == 0.0) return base;
    return base * shape(std::log(au));
  }

  /// g(x) = int_0^1 ln(e + e^x w^{1/(p+1)})^{-eps} dw, by tanh-sinh (reference path).
  double shape_direct(double x) const {
    const double u = std::exp(x);
    const double e = eps_;
    const double q = 1.0 / (p_ + 1.0);
    auto integrand = [u, e, q](double w) { return std::pow(std::log(kE + u * std::pow(w, q)), -e); };
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(integrand, 0.0, 1.0, 1e-15);
  }

  double shape(double x) const {
    if (x < kLo || x > kHi) return shape_direct(x);
    // locate segment
    std::size_t lo = 0, hi = segments_.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (segments_[mid].a <= x)
        lo = mid;
      else
        hi = mid;
    }
    return segments_[lo].eval(x);
  }

  double eps() const { return eps_; }
  std::size_t segment_count() const { return segments_.size(); }

 private:
  struct Segment {
    double a = 0.0, b = 0.0;
    std::array<double, kDegree + 1> c{};
    double eval(double x) const {
      const double t = (2.0 * x - a - b) / (b - a);
      // Clenshaw
      double b1 = 0.0, b2 = 0.0;
      for (int k = kDegree; k >= 1; --k) {
        const double tmp = 2.0 * t * b1 - b2 + c[k];
        b2 = b1;
        b1 = tmp;
      }
      return t * b1 - b2 + c[0];
    }
  };

  Segment fit(double a, double b) const {
    Segment s;
    s.a = a;
    s.b = b;
    constexpr int N = kDegree + 1;
    std::array<double, N> vals{};
    for (int j = 0; j < N; ++j) {
      const double t = std::cos(kPi * (j + 0.5) / N);
      vals[j] = shape_direct(0.5 * (a + b) + 0.5 * (b - a) * t);
    }
    for (int k = 0; k < N; ++k) {
      double sum = 0.0;
      for (int j = 0; j < N; ++j) sum += vals[j] * std::cos(kPi * k * (j + 0.5) / N);
      s.c[k] = (k == 0 ? 1.0 : 2.0) * sum / N;
    }
    return s;
  }

  void build(double a, double b, double tol, int depth) {
    Segment s = fit(a, b);
    bool ok = true;
    for (double frac : {0.13, 0.37, 0.61, 0.89}) {
      const double x = a + frac * (b - a);
      const double ref = shape_direct(x);
      if (std::abs(s.eval(x) - ref) > tol * std::abs(ref)) {
        ok = false;
        break;
      }
    }
    if (ok || depth > 12) {
      segments_.push_back(s);
      return;
    }
    const double mid = 0.5 * (a + b);
    build(a, mid, tol, depth + 1);
    build(mid, b, tol, depth + 1);
  }

  int n_;
  double p_;
  double eps_;
  std::vector<Segment> segments_;
};

/// Process-wide cache of antiderivative tables keyed by (n, eps).
inline std::shared_ptr<const AntiderivativeTable> antiderivative_table(const Dimension& d, double eps) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, std::shared_ptr<const AntiderivativeTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(d.n(), eps);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto table = std::make_shared<const AntiderivativeTable>(d, eps);
  cache.emplace(key, table);
  return table;
}

inline double F_eps(const Dimension& d, const NonlinearityParams& np, double u) {
  return (*antiderivative_table(d, np.eps))(u);
}

}  // namespace spikelab
