#pragma once

// One-dimensional panelwise Gauss-Legendre integration with geometric panel
// grading. These are the building blocks of every deterministic backend.

#include "spikelab/types.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <array>
#include <limits>
#include <vector>

namespace spikelab {

inline constexpr int kGaussOrder = 20;

/// 20-point Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::array<double, kGaussOrder> nodes{};
  std::array<double, kGaussOrder> weights{};

  static const GaussRule& instance() {
    static const GaussRule rule = [] {
      using G = boost::math::quadrature::gauss<double, kGaussOrder>;
      const auto& x = G::abscissa();
      const auto& w = G::weights();
      GaussRule r;
      const int half = kGaussOrder / 2;
      for (int i = 0; i < half; ++i) {
        r.nodes[half - 1 - i] = -x[i];
        r.weights[half - 1 - i] = w[i];
        r.nodes[half + i] = x[i];
        r.weights[half + i] = w[i];
      }
      return r;
    }();
    return rule;
  }
};

/// Integral of g over [a, b] split into `pieces` equal panels.
template <class G>
double gauss_panels(G&& g, double a, double b, int pieces) {
  const auto& rule = GaussRule::instance();
  CompensatedSum total;
  const double h = (b - a) / pieces;
  for (int k = 0; k < pieces; ++k) {
    const double lo = a + k * h;
    const double mid = lo + 0.5 * h;
    double s = 0.0;
    for (int i = 0; i < kGaussOrder; ++i) s += rule.weights[i] * g(mid + 0.5 * h * rule.nodes[i]);
    total.add(0.5 * h * s);
  }
  return total.value();
}

/// Breakpoints 0, L, 2L, 4L, ... clipped at `upper` (finite). A trailing
/// sliver shorter than half the previous panel is merged into it.
inline std::vector<double> geometric_breaks(double scale, double upper) {
  std::vector<double> b{0.0};
  double x = scale;
  while (x < upper) {
    b.push_back(x);
    x *= 2.0;
  }
  if (b.size() >= 2 && upper - b.back() < 0.5 * (b.back() - b[b.size() - 2])) b.pop_back();
  b.push_back(upper);
  return b;
}

/// Integral of g over [0, upper] on geometric panels anchored at `scale`,
/// each panel split into 2^level pieces.
template <class G>
double graded_integral(G&& g, double scale, double upper, int level) {
  if (!(upper > 0.0)) return 0.0;
  const auto breaks = geometric_breaks(std::min(scale, upper), upper);
  CompensatedSum total;
  const int pieces = 1 << level;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) total.add(gauss_panels(g, breaks[k], breaks[k + 1], pieces));
  return total.value();
}

/// Integral of g over [0, inf): geometric panels up to scale * 2^48, then the
/// tail r = R/v, v in (0, 1].
template <class G>
double graded_halfline(G&& g, double scale, int level) {
  constexpr int kDoublings = 48;
  const double far = std::ldexp(scale, kDoublings);
  CompensatedSum total;
  total.add(graded_integral(g, scale, far, level));
  auto tail = [&](double v) { return v > 0.0 ? g(far / v) * far / (v * v) : 0.0; };
  total.add(gauss_panels(tail, 0.0, 1.0, 1 << level));
  return total.value();
}

struct QuadOptions {
  double rel_tol = 1e-10;
  double abs_tol = 0.0;
  int min_level = 1;
  int max_level = 6;
};

/// Runs `level_sum(level)` for increasing levels until two successive values
/// agree; throws ConvergenceError carrying the best value otherwise.
template <class L>
IntegralResult refine_levels(L&& level_sum, const QuadOptions& opt, Backend backend, const char* what) {
  double prev = level_sum(0);
  double diff = std::numeric_limits<double>::infinity();
  for (int level = 1; level <= opt.max_level; ++level) {
    const double cur = level_sum(level);
    diff = std::abs(cur - prev);
    if (level >= opt.min_level && diff <= std::max(opt.rel_tol * std::abs(cur), opt.abs_tol))
      return IntegralResult{cur, diff, backend, level, 0};
    prev = cur;
  }
  throw ConvergenceError(std::string(what) + ": no convergence at max refinement level", prev,
                         diff / std::max(std::abs(prev), std::numeric_limits<double>::min()));
}

/// Integral over R^n of a radial function f(r) = f(|x|), resolved on the
/// length scale `scale`.
template <class F>
IntegralResult integrate_radial(F&& f, int n, double scale = 1.0, const QuadOptions& opt = {}) {
  const double area = sphere_area(n - 1);
  auto g = [&](double r) { return r > 0.0 ? f(r) * std::pow(r, n - 1) : 0.0; };
  auto level_sum = [&](int level) { return area * graded_halfline(g, scale, level); };
  return refine_levels(level_sum, opt, Backend::radial1D, "integrate_radial");
}

/// Integral over the ball B(0, upper) in R^n of a radial function.
template <class F>
IntegralResult integrate_radial_ball(F&& f, int n, double scale, double upper, const QuadOptions& opt = {}) {
  const double area = sphere_area(n - 1);
  auto g = [&](double r) { return r > 0.0 ? f(r) * std::pow(r, n - 1) : 0.0; };
  auto level_sum = [&](int level) { return area * graded_integral(g, scale, upper, level); };
  return refine_levels(level_sum, opt, Backend::radial1D, "integrate_radial_ball");
}

}  // namespace spikelab
