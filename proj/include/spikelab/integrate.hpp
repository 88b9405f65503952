#pragma once

// Integration over a ball (or all of R^n) of integrands concentrated at a few
// spike centers: a 2D axisymmetric backend for collinear geometry and a seeded
// importance-sampling Monte Carlo backend for everything else.

#include "spikelab/constants.hpp"
#include "spikelab/gauss.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <thread>
#include <vector>

namespace spikelab {

/// Ball B(center, radius); an infinite radius means all of R^n.
struct Region {
  Point center;
  double radius = std::numeric_limits<double>::infinity();

  static Region whole(int n) { return Region{Point::Zero(n), std::numeric_limits<double>::infinity()}; }
  static Region ball(Point c, double r) { return Region{std::move(c), r}; }
  bool is_whole() const { return !std::isfinite(radius); }
  bool contains(const Point& y) const { return is_whole() || (y - center).norm() < radius; }
};

/// Where the integrand concentrates and on which length scale (1/lambda).
struct ScaleHint {
  Point a;
  double lambda = 1.0;
};

struct AxisFrame {
  Point origin;
  Point e;     ///< unit axial direction
  Point perp;  ///< a unit vector orthogonal to e
};

/// Axis through the region center and all hints. Throws ConfigurationError if
/// the hints are not collinear with the center.
inline AxisFrame axis_frame(const Region& region, const std::vector<ScaleHint>& hints, double rel_tol = 1e-10) {
  const int n = int(region.center.size());
  AxisFrame f;
  f.origin = region.center;
  double length = std::isfinite(region.radius) ? region.radius : 1.0;
  for (const auto& h : hints) length = std::max(length, (h.a - region.center).norm());
  Point e = Point::Zero(n);
  double best = 0.0;
  for (const auto& h : hints) {
    const Point d = h.a - region.center;
    if (d.norm() > best) {
      best = d.norm();
      e = d;
    }
  }
  if (best <= rel_tol * length) {
    e = Point::Zero(n);
    e(0) = 1.0;
  } else {
    e /= best;
  }
  for (const auto& h : hints) {
    const Point d = h.a - region.center;
    const Point off = d - d.dot(e) * e;
    if (off.norm() > rel_tol * length)
      throw ConfigurationError("spike centers are not collinear with the region center; use the Monte Carlo backend");
  }
  int k = 0;
  for (int i = 1; i < n; ++i)
    if (std::abs(e(i)) < std::abs(e(k))) k = i;
  Point p = Point::Zero(n);
  p(k) = 1.0;
  p -= p.dot(e) * e;
  f.e = e;
  f.perp = p.normalized();
  return f;
}

namespace detail {

struct AxialSpike {
  double b;       // axial offset from the region center
  double scale;   // 1 / lambda
};

// Partition-of-unity weight of spike k at axial coordinates (t, s).
inline double partition_weight(const std::vector<AxialSpike>& sp, std::size_t k, double t, double s, int q) {
  if (sp.size() == 1) return 1.0;
  auto rho = [&](std::size_t j) {
    const double dt = t - sp[j].b;
    return sp[j].scale * sp[j].scale + dt * dt + s * s;
  };
  const double rk = rho(k);
  double denom = 0.0;
  for (std::size_t j = 0; j < sp.size(); ++j) denom += std::pow(rk / rho(j), q);
  return 1.0 / denom;
}

}  // namespace detail

/// Integral of f over the region, f assumed invariant under rotations about
/// the axis through the region center and the hints. Spherical coordinates
/// are centered at each spike and blended by a smooth partition of unity.
template <class F>
IntegralResult integrate_axisym(F&& f, const Region& region, const std::vector<ScaleHint>& hints,
                                const QuadOptions& opt = {1e-10, 0.0, 1, 5}) {
  const int n = int(region.center.size());
  if (n < 3) throw DomainError("integrate_axisym needs n >= 3");
  const AxisFrame frame = axis_frame(region, hints);
  std::vector<detail::AxialSpike> spikes;
  for (const auto& h : hints) {
    if (!region.contains(h.a)) continue;
    spikes.push_back({(h.a - region.center).dot(frame.e), 1.0 / h.lambda});
  }
  if (spikes.empty()) spikes.push_back({0.0, region.is_whole() ? 1.0 : 0.25 * region.radius});

  const double omega = sphere_area(n - 2);
  const int q = n + 1;
  const double Rg = region.radius;
  const bool whole = region.is_whole();

  auto level_sum = [&](int level) {
    CompensatedSum total;
    const int theta_pieces = 4 << level;
    for (std::size_t k = 0; k < spikes.size(); ++k) {
      const double b = spikes[k].b;
      const double L = spikes[k].scale;
      auto theta_integrand = [&](double th) {
        const double c = std::cos(th), sn = std::sin(th);
        const double ang = std::pow(sn, n - 2);
        if (ang == 0.0) return 0.0;
        auto radial = [&](double r) {
          if (r <= 0.0) return 0.0;
          const double t = b + r * c;
          const double s = r * sn;
          const double w = detail::partition_weight(spikes, k, t, s, q);
          if (w == 0.0) return 0.0;
          const Point y = region.center + t * frame.e + s * frame.perp;
          return w * f(y) * std::pow(r, n - 1);
        };
        double inner;
        if (whole) {
          inner = graded_halfline(radial, L, level);
        } else {
          const double rmax = -b * c + std::sqrt(std::max(0.0, Rg * Rg - b * b * sn * sn));
          inner = graded_integral(radial, L, rmax, level);
        }
        return ang * inner;
      };
      total.add(omega * gauss_panels(theta_integrand, 0.0, kPi, theta_pieces));
    }
    return total.value();
  };
  return refine_levels(level_sum, opt, Backend::axisym2D, "integrate_axisym");
}

struct MCPlan {
  std::size_t n_samples = 2'000'000;
  std::uint64_t master_seed = 20240611ULL;
  double uniform_weight = 0.2;  ///< rest is split equally among the spike proposals
  std::size_t chunk = 1 << 15;
  unsigned threads = 1;

  void validate() const {
    if (n_samples < 1000) throw ConfigurationError("MCPlan.n_samples must be at least 1000");
    if (!(uniform_weight > 0.0 && uniform_weight < 1.0))
      throw ConfigurationError("MCPlan.uniform_weight must lie in (0, 1)");
    if (chunk == 0) throw ConfigurationError("MCPlan.chunk must be positive");
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of chunk `chunk` of call `call` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t call, std::uint64_t chunk) {
  return splitmix64(splitmix64(splitmix64(master) ^ call) ^ chunk);
}

/// Importance-sampled Monte Carlo over a ball region. The proposal is a
/// mixture of the uniform law on the region and, per spike, the density
/// proportional to lambda^n (1 + lambda^2 |y-a|^2)^{-(n+1)/2} on R^n.
template <class F>
IntegralResult integrate_mc(F&& f, const Region& region, const std::vector<ScaleHint>& hints, const MCPlan& plan,
                            std::uint64_t call_index = 0) {
  plan.validate();
  if (region.is_whole()) throw ConfigurationError("Monte Carlo backend needs a bounded region");
  const int n = int(region.center.size());
  const double Rg = region.radius;
  const double vol = std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0) * std::pow(Rg, n);
  const double w_unif = hints.empty() ? 1.0 : plan.uniform_weight;
  const double w_spike = hints.empty() ? 0.0 : (1.0 - w_unif) / double(hints.size());
  const double spike_norm = beta_radial_integral(n, 0.5 * (n + 1));

  auto density = [&](const Point& y) {
    double q = region.contains(y) ? w_unif / vol : 0.0;
    for (const auto& h : hints) {
      const double l = h.lambda;
      q += w_spike * std::pow(l, n) * std::pow(1.0 + l * l * (y - h.a).squaredNorm(), -0.5 * (n + 1)) / spike_norm;
    }
    return q;
  };

  const std::size_t n_chunks = (plan.n_samples + plan.chunk - 1) / plan.chunk;
  struct Partial {
    double sum = 0.0, sumsq = 0.0;
  };
  std::vector<Partial> parts(n_chunks);

  auto run_chunk = [&](std::size_t c) {
    std::mt19937_64 rng(derive_seed(plan.master_seed, call_index, c));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t begin = c * plan.chunk;
    const std::size_t count = std::min(plan.chunk, plan.n_samples - begin);
    CompensatedSum s, s2;
    Point dir(n), y(n);
    for (std::size_t i = 0; i < count; ++i) {
      for (int j = 0; j < n; ++j) dir(j) = gauss(rng);
      dir.normalize();
      const double pick = unif(rng);
      if (pick < w_unif) {
        y = region.center + (Rg * std::pow(unif(rng), 1.0 / n)) * dir;
      } else {
        std::size_t k = std::min(hints.size() - 1, std::size_t((pick - w_unif) / w_spike));
        double phi;
        do {
          phi = 0.5 * kPi * unif(rng);
        } while (unif(rng) > std::pow(std::sin(phi), n - 1));
        y = hints[k].a + (std::tan(phi) / hints[k].lambda) * dir;
      }
      double v = 0.0;
      if (region.contains(y)) v = f(y) / density(y);
      s.add(v);
      s2.add(v * v);
    }
    parts[c] = {s.value(), s2.value()};
  };

  const unsigned threads = std::max(1u, plan.threads);
  if (threads == 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t c = t; c < n_chunks; c += threads) run_chunk(c);
      });
    for (auto& th : pool) th.join();
  }

  CompensatedSum sum, sumsq;
  for (const auto& p : parts) {
    sum.add(p.sum);
    sumsq.add(p.sumsq);
  }
  const double N = double(plan.n_samples);
  const double mean = sum.value() / N;
  const double var = std::max(0.0, sumsq.value() / N - mean * mean);
  IntegralResult r;
  r.value = mean;
  r.error = std::sqrt(var / N);
  r.backend = Backend::importanceMC;
  r.samples = plan.n_samples;
  return r;
}

enum class BackendChoice { automatic, axisym, monte_carlo };

inline const char* to_string(BackendChoice b) {
  switch (b) {
    case BackendChoice::automatic: return "auto";
    case BackendChoice::axisym: return "axisym";
    case BackendChoice::monte_carlo: return "mc";
  }
  return "unknown";
}

/// How a geometric integral is evaluated. `call_index` feeds the Monte Carlo
/// seed derivation; callers doing several integrals offset it per integral.
struct IntegrationPlan {
  BackendChoice backend = BackendChoice::automatic;
  QuadOptions quad{1e-10, 0.0, 1, 5};
  MCPlan mc;
  std::uint64_t call_index = 0;
};

inline bool is_collinear(const Region& region, const std::vector<ScaleHint>& hints) {
  try {
    axis_frame(region, hints);
    return true;
  } catch (const ConfigurationError&) {
    return false;
  }
}

/// Dispatches to the axisymmetric backend when the geometry allows it (or
/// when requested, throwing ConfigurationError if it does not), and to Monte
/// Carlo otherwise.
template <class F>
IntegralResult integrate_region(F&& f, const Region& region, const std::vector<ScaleHint>& hints,
                                const IntegrationPlan& plan, std::uint64_t sub_index = 0) {
  const bool det = plan.backend == BackendChoice::axisym ||
                   (plan.backend == BackendChoice::automatic && is_collinear(region, hints));
  if (det) return integrate_axisym(f, region, hints, plan.quad);
  return integrate_mc(f, region, hints, plan.mc, plan.call_index * 1024 + sub_index);
}

}  // namespace spikelab
