#pragma once

// Multispike ansatz u = sum_i alpha_i gamma_i P delta_(a_i, lambda_i) and its
// pointwise evaluation.

#include "spikelab/integrate.hpp"
#include "spikelab/projected.hpp"
#include "spikelab/reduced.hpp"

#include <cstdio>
#include <ostream>
#include <string>

namespace spikelab {

/// Thresholds of the admissible set. Lengths are fractions of the radius.
struct AnsatzLimits {
  double nu0 = 0.5;
  double d0_fraction = 0.05;        ///< minimal distance to the boundary
  double d0_sep_fraction = 0.3;     ///< minimal spike separation
  double lambda_ratio = 10.0;       ///< maximal lambda_i / lambda_j
  double lambda_d = kDefaultLambdaDThreshold;
};

struct AnsatzFlags {
  bool alpha = false;       ///< |alpha_i - 1| >= nu0
  bool boundary = false;    ///< d(a_i) <= d0 or lambda_i d(a_i) <= lambda_d
  bool loglog = false;      ///< eps lnln lambda_i >= nu0
  bool ratio = false;       ///< lambda_i / lambda_j >= lambda_ratio
  bool separation = false;  ///< |a_i - a_j| <= d0'

  bool any() const { return alpha || boundary || loglog || ratio || separation; }
  std::string describe() const {
    std::string s;
    auto add = [&](bool f, const char* w) {
      if (!f) return;
      if (!s.empty()) s += ", ";
      s += w;
    };
    add(alpha, "alpha");
    add(boundary, "boundary");
    add(loglog, "loglog");
    add(ratio, "ratio");
    add(separation, "separation");
    return s.empty() ? "none" : s;
  }
};

struct SpikeAnsatz {
  SpikePattern pattern;
  Vector alpha;
  Vector lambda;
  Configuration a;
  double eps = 0.0;

  int m() const { return pattern.m(); }
  int n() const { return int(a.front().size()); }
  BubbleParams bubble(int i) const { return BubbleParams(a[std::size_t(i)], lambda(i)); }
  double coefficient(int i) const { return alpha(i) * pattern.gamma[std::size_t(i)]; }

  template <GreenDomain D>
  void validate(const D& dom) const {
    pattern.validate();
    const int mm = m();
    if (alpha.size() != mm || lambda.size() != mm || int(a.size()) != mm)
      throw DomainError("ansatz arrays disagree with the pattern size");
    if (!(eps >= 0.0)) throw DomainError("ansatz eps must be non-negative");
    for (int i = 0; i < mm; ++i) {
      if (!(alpha(i) > 0.0)) throw DomainError("ansatz alpha must be positive");
      if (!(lambda(i) > 0.0)) throw DomainError("ansatz lambda must be positive");
      if (!dom.contains(a[std::size_t(i)])) throw DomainError("ansatz center outside the domain");
    }
  }

  template <GreenDomain D>
  AnsatzFlags flags(const D& dom, const AnsatzLimits& lim = {}) const {
    validate(dom);
    AnsatzFlags f;
    const double R = dom.radius();
    const double h = 0.5 * (n() - 2);
    for (int i = 0; i < m(); ++i) {
      const double d = dom.dist_boundary(a[std::size_t(i)]);
      if (std::abs(alpha(i) - 1.0) >= lim.nu0) f.alpha = true;
      if (d <= lim.d0_fraction * R || lambda(i) * d <= lim.lambda_d) f.boundary = true;
      if (lambda(i) <= kE || eps * std::log(h * std::log(lambda(i))) >= lim.nu0) f.loglog = true;
      for (int j = 0; j < m(); ++j) {
        if (j == i) continue;
        if (lambda(i) / lambda(j) >= lim.lambda_ratio) f.ratio = true;
        if ((a[std::size_t(i)] - a[std::size_t(j)]).norm() <= lim.d0_sep_fraction * R) f.separation = true;
      }
    }
    return f;
  }
};

/// Pointwise u and grad u of an ansatz (v = 0).
template <GreenDomain D = BallDomain>
class AnsatzField {
 public:
  AnsatzField(const SpikeAnsatz& ans, const D& dom) : dom_(&dom), coef_(ans.m()) {
    ans.validate(dom);
    for (int i = 0; i < ans.m(); ++i) {
      pb_.emplace_back(dom, ans.bubble(i));
      coef_(i) = ans.coefficient(i);
    }
  }

  int m() const { return int(pb_.size()); }
  const ProjectedBubble<D>& spike(int i) const { return pb_[std::size_t(i)]; }
  double coefficient(int i) const { return coef_(i); }
  const D& domain() const { return *dom_; }

  double value(const Point& y) const {
    require(y);
    double s = 0.0;
    for (int i = 0; i < m(); ++i) s += coef_(i) * pb_[std::size_t(i)].value(y);
    return s;
  }

  Point gradient(const Point& y) const {
    require(y);
    Point g = Point::Zero(y.size());
    for (int i = 0; i < m(); ++i) g += coef_(i) * pb_[std::size_t(i)].gradient(y);
    return g;
  }

  /// sum_i coef_i delta_i(y)^p, i.e. -Delta u with v = 0.
  double minus_laplacian(const Point& y) const {
    const double p = pb_.front().dimension().p();
    double s = 0.0;
    for (int i = 0; i < m(); ++i) s += coef_(i) * std::pow(pb_[std::size_t(i)].delta(y), p);
    return s;
  }

  std::vector<ScaleHint> hints() const {
    std::vector<ScaleHint> h;
    for (const auto& pb : pb_) h.push_back({pb.params().a, pb.params().lambda});
    return h;
  }

 private:
  void require(const Point& y) const {
    if (!dom_->contains(y)) throw DomainError("field evaluated outside the domain");
  }

  const D* dom_;
  std::vector<ProjectedBubble<D>> pb_;
  Vector coef_;
};

struct FieldSample {
  Point y;
  double u = 0.0;
  double grad_sq = 0.0;
};

template <GreenDomain D>
std::vector<FieldSample> sample_field(const AnsatzField<D>& field, const std::vector<Point>& grid) {
  std::vector<FieldSample> rows;
  rows.reserve(grid.size());
  for (const auto& y : grid) rows.push_back({y, field.value(y), field.gradient(y).squaredNorm()});
  return rows;
}

/// Points of a k x k grid on the plane spanned by coordinate axes 0 and 1
/// through the domain center, kept if inside the domain.
template <GreenDomain D>
std::vector<Point> plane_grid(const D& dom, int k, double fraction = 0.999) {
  std::vector<Point> pts;
  const double R = dom.radius() * fraction;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      Point y = dom.center();
      y(0) += -R + 2.0 * R * i / (k - 1);
      y(1) += -R + 2.0 * R * j / (k - 1);
      if (dom.contains(y)) pts.push_back(y);
    }
  return pts;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline void write_field_csv(std::ostream& os, const std::vector<FieldSample>& rows, int n) {
  for (int k = 1; k <= n; ++k) os << "y_" << k << ',';
  os << "u,grad_sq\n";
  for (const auto& r : rows) {
    for (int k = 0; k < n; ++k) os << format_double(r.y(k)) << ',';
    os << format_double(r.u) << ',' << format_double(r.grad_sq) << '\n';
  }
}

}  // namespace spikelab
