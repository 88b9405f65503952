#pragma once

// Finite-dimensional reduced landscape: M(x), its least eigenvalue rho(x), the
// minimizer Lambda(x) of F_x(L) = 1/2 L^T M L - sum ln L_i, and
// Ftilde(x) = m/2 - sum ln Lambda_i(x) with gradient, Hessian and critical points.

#include "spikelab/ball.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <random>
#include <vector>

namespace spikelab {

inline constexpr double kRhoPlusThreshold = 1e-10;

struct SpikePattern {
  std::vector<int> gamma;

  SpikePattern() = default;
  explicit SpikePattern(std::vector<int> g) : gamma(std::move(g)) { validate(); }
  static SpikePattern same_sign(int m) { return SpikePattern(std::vector<int>(std::size_t(m), 1)); }

  int m() const { return int(gamma.size()); }
  void validate() const {
    if (gamma.empty()) throw DomainError("spike pattern needs m >= 1");
    for (int g : gamma)
      if (g != 1 && g != -1) throw DomainError("spike signs must be +1 or -1");
  }
};

using Configuration = std::vector<Point>;

struct ReducedMatrix {
  Configuration x;
  Matrix M;
  double rho = 0.0;
};

template <GreenDomain D>
ReducedMatrix matrix_M(const Configuration& x, const SpikePattern& pattern, const D& dom) {
  const int m = pattern.m();
  if (int(x.size()) != m) throw DomainError("configuration size does not match the pattern");
  ReducedMatrix r;
  r.x = x;
  r.M.resize(m, m);
  for (int i = 0; i < m; ++i) {
    r.M(i, i) = dom.H(x[i], x[i]);
    for (int j = i + 1; j < m; ++j) {
      if ((x[i] - x[j]).norm() == 0.0) throw DomainError("coincident spike locations");
      r.M(i, j) = r.M(j, i) = -pattern.gamma[i] * pattern.gamma[j] * dom.G(x[i], x[j]);
    }
  }
  r.rho = Eigen::SelfAdjointEigenSolver<Matrix>(r.M, Eigen::EigenvaluesOnly).eigenvalues()(0);
  return r;
}

inline bool in_rho_plus(const ReducedMatrix& r) { return r.rho > kRhoPlusThreshold; }

/// F_x(L) = 1/2 L^T M L - sum ln L_i (infinite outside the positive orthant).
inline double F_x(const Matrix& M, const Vector& L) {
  if ((L.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
  return 0.5 * L.dot(M * L) - L.array().log().sum();
}

struct LambdaSolution {
  Vector Lambda;
  double residual = 0.0;  ///< max_i |L_i (M L)_i - 1|
  double roundoff = 0.0;  ///< size of the cancelling terms in the residual, times machine epsilon
  int iterations = 0;
};

/// Safeguarded Newton for the unique minimizer of F_x; requires rho > 0.
inline LambdaSolution solve_Lambda(const ReducedMatrix& r, int max_iter = 100) {
  if (!in_rho_plus(r)) throw DomainError("configuration not in rho+ (least eigenvalue of M is not positive)");
  const Matrix& M = r.M;
  const int m = int(M.rows());
  const Matrix Mabs = M.cwiseAbs();
  Vector L(m);
  for (int i = 0; i < m; ++i) L(i) = 1.0 / std::sqrt(M(i, i));
  auto grad = [&](const Vector& v) -> Vector { return M * v - v.cwiseInverse(); };
  auto scaled = [&](const Vector& v) { return (v.cwiseProduct(M * v).array() - 1.0).abs().maxCoeff(); };
  auto floor_of = [&](const Vector& v) {
    return 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, v.cwiseProduct(Mabs * v).maxCoeff());
  };
  Vector g = grad(L);
  double f = F_x(M, L);
  LambdaSolution out;
  int it = 0;
  for (; it < max_iter; ++it) {
    if (scaled(L) <= floor_of(L)) break;
    Matrix Hs = M;
    Hs.diagonal() += L.cwiseInverse().cwiseAbs2();
    const Vector step = -Hs.llt().solve(g);
    double t = 1.0;
    // stay in the positive orthant
    for (int i = 0; i < m; ++i)
      if (step(i) < 0.0) t = std::min(t, 0.9 * L(i) / -step(i));
    Vector trial = L + t * step;
    double ft = F_x(M, trial);
    const double r0 = scaled(L);
    int back = 0;
    // accept on sufficient decrease of F_x, or of the residual once F_x differences hit roundoff
    while (!(ft <= f + 1e-4 * t * g.dot(step)) && !(scaled(trial) < (1.0 - 1e-4 * t) * r0) && back < 60) {
      t *= 0.5;
      trial = L + t * step;
      ft = F_x(M, trial);
      ++back;
    }
    if (back == 60) break;
    L = trial;
    f = ft;
    g = grad(L);
  }
  out.Lambda = L;
  out.residual = scaled(L);
  out.roundoff = floor_of(L);
  out.iterations = it;
  if (!(out.residual < std::max(1e-10, 100.0 * out.roundoff)))
    throw ConvergenceError("solve_Lambda stalled", out.residual, out.residual);
  return out;
}

struct LandscapeValue {
  ReducedMatrix matrix;
  LambdaSolution lambda;
  double Ftilde = 0.0;
};

template <GreenDomain D>
LandscapeValue landscape(const Configuration& x, const SpikePattern& pattern, const D& dom) {
  LandscapeValue v;
  v.matrix = matrix_M(x, pattern, dom);
  v.lambda = solve_Lambda(v.matrix);
  v.Ftilde = 0.5 * pattern.m() - v.lambda.Lambda.array().log().sum();
  return v;
}

template <GreenDomain D>
double Ftilde(const Configuration& x, const SpikePattern& pattern, const D& dom) {
  return landscape(x, pattern, dom).Ftilde;
}

/// Envelope gradient 1/2 Lambda M'(x) Lambda, stacked as (a_1, ..., a_m).
template <GreenDomain D>
Vector grad_Ftilde(const Configuration& x, const SpikePattern& pattern, const D& dom) {
  const Vector L = landscape(x, pattern, dom).lambda.Lambda;
  const int m = pattern.m();
  const int n = dom.n();
  Vector g(m * n);
  for (int k = 0; k < m; ++k) {
    Point gk = (L(k) * L(k)) * dom.grad_H_a(x[k], x[k]);
    for (int j = 0; j < m; ++j) {
      if (j == k) continue;
      gk -= (pattern.gamma[k] * pattern.gamma[j] * L(k) * L(j)) * dom.grad_G_a(x[k], x[j]);
    }
    g.segment(k * n, n) = gk;
  }
  return g;
}

inline Configuration unstack(const Vector& v, int m, int n) {
  Configuration x(std::size_t(m), Point::Zero(n));
  for (int k = 0; k < m; ++k) x[std::size_t(k)] = v.segment(k * n, n);
  return x;
}

inline Vector stack(const Configuration& x) {
  const int n = int(x.front().size());
  Vector v(int(x.size()) * n);
  for (std::size_t k = 0; k < x.size(); ++k) v.segment(int(k) * n, n) = x[k];
  return v;
}

/// Hessian by central differences of the analytic gradient, symmetrized.
template <GreenDomain D>
Matrix hess_Ftilde(const Configuration& x, const SpikePattern& pattern, const D& dom, double rel_step = 1e-5) {
  const int m = pattern.m(), n = dom.n();
  const double h = rel_step * dom.radius();
  const Vector base = stack(x);
  Matrix Hs(m * n, m * n);
  for (int c = 0; c < m * n; ++c) {
    Vector p = base, q = base;
    p(c) += h;
    q(c) -= h;
    Hs.col(c) = (grad_Ftilde(unstack(p, m, n), pattern, dom) - grad_Ftilde(unstack(q, m, n), pattern, dom)) / (2 * h);
  }
  return 0.5 * (Hs + Hs.transpose());
}

struct CriticalPoint {
  Configuration x;
  double Ftilde = 0.0;
  double grad_norm = 0.0;
  Vector hess_eigs;      ///< eigenvalues of the Hessian in the searched coordinates
  bool nondegenerate = false;
  bool collinear = false;  ///< searched on an axis; hess_eigs has m entries
  Point axis;              ///< unit axis direction when collinear
  Vector Lambda;
  double rho = 0.0;
};

struct SearchConfig {
  bool collinear = false;  ///< restrict spikes to the line center + t * axis
  Point axis;              ///< defaults to e_1
  int grid = 16;           ///< starts per coordinate for collinear search
  int random_starts = 64;  ///< starts for the full search
  std::uint64_t seed = 1;
  double max_radius_fraction = 0.95;
  double dedupe = 1e-6;      ///< relative to the domain radius
  double hess_tol = 1e-6;
  double grad_tol = 1e-9;
  int max_newton = 80;
};

namespace detail {

// Coordinates of the search: either the full (m*n)-vector or one axial
// coordinate per spike.
template <GreenDomain D>
struct SearchSpace {
  const D& dom;
  const SpikePattern& pattern;
  const SearchConfig& cfg;
  Point axis;

  int dim() const { return cfg.collinear ? pattern.m() : pattern.m() * dom.n(); }

  Configuration to_config(const Vector& z) const {
    if (!cfg.collinear) return unstack(z, pattern.m(), dom.n());
    Configuration x;
    for (int k = 0; k < pattern.m(); ++k) x.push_back(dom.center() + z(k) * axis);
    return x;
  }

  bool feasible(const Vector& z) const {
    const Configuration x = to_config(z);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if ((x[i] - dom.center()).norm() >= cfg.max_radius_fraction * dom.radius()) return false;
      for (std::size_t j = i + 1; j < x.size(); ++j)
        if ((x[i] - x[j]).norm() < 1e-3 * dom.radius()) return false;
    }
    return in_rho_plus(matrix_M(x, pattern, dom));
  }

  Vector grad(const Vector& z) const {
    const Vector g = grad_Ftilde(to_config(z), pattern, dom);
    if (!cfg.collinear) return g;
    const int n = dom.n();
    Vector r(pattern.m());
    for (int k = 0; k < pattern.m(); ++k) r(k) = g.segment(k * n, n).dot(axis);
    return r;
  }

  Matrix hess(const Vector& z) const {
    const double h = 1e-5 * dom.radius();
    Matrix Hs(dim(), dim());
    for (int c = 0; c < dim(); ++c) {
      Vector p = z, q = z;
      p(c) += h;
      q(c) -= h;
      Hs.col(c) = (grad(p) - grad(q)) / (2 * h);
    }
    return 0.5 * (Hs + Hs.transpose());
  }
};

}  // namespace detail

/// Multistart Newton on grad Ftilde with a merit line search on |grad|^2.
/// Returned points are deduplicated and certified by Hessian eigenvalues.
template <GreenDomain D>
std::vector<CriticalPoint> find_critical_points(const SpikePattern& pattern, const D& dom, const SearchConfig& cfg = {}) {
  const int m = pattern.m(), n = dom.n();
  Point axis = cfg.axis;
  if (axis.size() != n) {
    axis = Point::Zero(n);
    axis(0) = 1.0;
  }
  axis.normalize();
  detail::SearchSpace<D> space{dom, pattern, cfg, axis};

  std::vector<Vector> starts;
  const double reach = cfg.max_radius_fraction * dom.radius();
  if (cfg.collinear) {
    std::vector<double> ticks;
    for (int i = 0; i < cfg.grid; ++i) ticks.push_back(-reach + (2.0 * reach) * (i + 0.5) / cfg.grid);
    std::vector<int> idx(std::size_t(m), 0);
    while (true) {
      Vector z(m);
      for (int k = 0; k < m; ++k) z(k) = ticks[std::size_t(idx[std::size_t(k)])];
      starts.push_back(z);
      int k = 0;
      while (k < m && ++idx[std::size_t(k)] == cfg.grid) idx[std::size_t(k++)] = 0;
      if (k == m) break;
    }
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < cfg.random_starts; ++s) {
      Vector z(m * n);
      for (int k = 0; k < m; ++k) {
        Point d(n);
        for (int j = 0; j < n; ++j) d(j) = g(rng);
        z.segment(k * n, n) = dom.center() + (reach * std::pow(u(rng), 1.0 / n)) * d.normalized();
      }
      starts.push_back(z);
    }
  }

  std::vector<CriticalPoint> found;
  for (const Vector& z0 : starts) {
    if (!space.feasible(z0)) continue;
    Vector z = z0;
    Vector g = space.grad(z);
    bool ok = false;
    for (int it = 0; it < cfg.max_newton; ++it) {
      if (g.norm() < cfg.grad_tol) {
        ok = true;
        break;
      }
      const Matrix Hs = space.hess(z);
      Eigen::SelfAdjointEigenSolver<Matrix> es(Hs);
      // Newton direction with eigenvalues bounded away from zero
      Vector coeff = es.eigenvectors().transpose() * g;
      const double floor = 1e-8 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
      for (int i = 0; i < coeff.size(); ++i) {
        double ev = es.eigenvalues()(i);
        if (std::abs(ev) < floor) ev = ev < 0 ? -floor : floor;
        coeff(i) /= ev;
      }
      Vector step = -(es.eigenvectors() * coeff);
      const double max_step = 0.1 * dom.radius();
      if (step.norm() > max_step) step *= max_step / step.norm();
      double t = 1.0;
      bool moved = false;
      for (int b = 0; b < 40; ++b, t *= 0.5) {
        const Vector trial = z + t * step;
        if (!space.feasible(trial)) continue;
        const Vector gt = space.grad(trial);
        if (gt.norm() < (1.0 - 1e-4 * t) * g.norm() || b == 39) {
          z = trial;
          g = gt;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    if (!ok && g.norm() < cfg.grad_tol) ok = true;
    if (!ok) continue;
    const Configuration x = space.to_config(z);
    bool dup = false;
    for (const auto& c : found) {
      double dist = 0.0;
      for (int k = 0; k < m; ++k) dist = std::max(dist, (c.x[std::size_t(k)] - x[std::size_t(k)]).norm());
      if (dist < cfg.dedupe * dom.radius()) dup = true;
    }
    if (dup) continue;
    CriticalPoint cp;
    cp.x = x;
    const auto lv = landscape(x, pattern, dom);
    cp.Ftilde = lv.Ftilde;
    cp.Lambda = lv.lambda.Lambda;
    cp.rho = lv.matrix.rho;
    cp.grad_norm = g.norm();
    cp.collinear = cfg.collinear;
    cp.axis = axis;
    cp.hess_eigs = Eigen::SelfAdjointEigenSolver<Matrix>(space.hess(z), Eigen::EigenvaluesOnly).eigenvalues();
    cp.nondegenerate = cp.hess_eigs.cwiseAbs().minCoeff() > cfg.hess_tol;
    found.push_back(cp);
  }
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.Ftilde < b.Ftilde; });
  return found;
}

}  // namespace spikelab
