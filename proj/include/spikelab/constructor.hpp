#pragma once

// The eps-family of ansaetze seeded by a critical point of Ftilde: change of
// variables, reduced residuals, Newton refinement and concentration diagnostics.

#include "spikelab/energy.hpp"

#include <sstream>

namespace spikelab {

/// s(eps) = (eps / |ln eps|)^{1/2}.
inline double eps_scale(double eps) {
  if (!(eps > 0.0 && eps < 1.0 / kE)) throw DomainError("eps must lie in (0, 1/e)");
  return std::sqrt(eps / std::abs(std::log(eps)));
}

/// lambda^{-(n-2)/2} = cbar * mu * s(eps).
inline double lambda_from_mu(int n, double cbar, double mu, double eps) {
  return std::pow(cbar * mu * eps_scale(eps), -2.0 / (n - 2));
}

inline double mu_from_lambda(int n, double cbar, double lambda, double eps) {
  return std::pow(lambda, -0.5 * (n - 2)) / (cbar * eps_scale(eps));
}

inline SpikeAnsatz asymptotic_ansatz(double eps, const CriticalPoint& cp, const SpikePattern& pattern,
                                     const UniversalConstants& k) {
  eps_scale(eps);
  if (!cp.nondegenerate) throw DomainError("asymptotic_ansatz needs a certified critical point");
  if (int(cp.x.size()) != pattern.m() || cp.Lambda.size() != pattern.m())
    throw DomainError("critical point and pattern disagree");
  const int n = int(cp.x.front().size());
  SpikeAnsatz a;
  a.pattern = pattern;
  a.eps = eps;
  a.a = cp.x;
  a.alpha = Vector::Ones(pattern.m());
  a.lambda.resize(pattern.m());
  for (int i = 0; i < pattern.m(); ++i) a.lambda(i) = lambda_from_mu(n, k.cbar, cp.Lambda(i), eps);
  return a;
}

enum class ResidualBackend { asymptotic, quadrature };

inline const char* to_string(ResidualBackend b) { return b == ResidualBackend::asymptotic ? "asymptotic" : "quadrature"; }

struct ResidualModel {
  /// add eps S lnln(lambda^{(n-2)/2}) to the alpha equation
  bool alpha_eps_shift = false;
};

struct ReducedResidual {
  Vector r_alpha, r_lambda, r_a;
  Vector err_alpha, err_lambda, err_a;  ///< quadrature error estimates (zero for the asymptotic backend)
  ResidualBackend backend = ResidualBackend::asymptotic;
};

namespace detail {

template <GreenDomain D>
Point position_leading(const SpikeAnsatz& ans, const D& dom, int i) {
  const double h = 0.5 * (dom.n() - 2);
  const auto& ai = ans.a[std::size_t(i)];
  const double li = ans.lambda(i);
  Point v = dom.grad_H_a(ai, ai) / std::pow(li, dom.n() - 2);
  for (int k = 0; k < ans.m(); ++k) {
    if (k == i) continue;
    const double gg = ans.pattern.gamma[std::size_t(i)] * ans.pattern.gamma[std::size_t(k)];
    v -= gg * dom.grad_G_a(ai, ans.a[std::size_t(k)]) / std::pow(li * ans.lambda(k), h);
  }
  return v;
}

}  // namespace detail

template <GreenDomain D>
ReducedResidual reduced_residual_asymptotic(const SpikeAnsatz& ans, const D& dom, const UniversalConstants& k,
                                            const ResidualModel& model = {}) {
  ans.validate(dom);
  const int m = ans.m(), n = dom.n();
  const Dimension d(n);
  const double h = d.half_weight();
  ReducedResidual r;
  r.backend = ResidualBackend::asymptotic;
  r.r_alpha.resize(m);
  r.r_lambda.resize(m);
  r.r_a.resize(m * n);
  for (int i = 0; i < m; ++i) {
    const auto& ai = ans.a[std::size_t(i)];
    const double li = ans.lambda(i);
    r.r_alpha(i) = -(d.p() - 1.0) * k.Sn_pow * (ans.alpha(i) - 1.0);
    if (model.alpha_eps_shift) r.r_alpha(i) += ans.eps * k.Sn_pow * std::log(h * std::log(li));
    double inter = dom.robin(ai) / std::pow(li, n - 2);
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      const double gg = ans.pattern.gamma[std::size_t(i)] * ans.pattern.gamma[std::size_t(j)];
      inter -= gg * dom.G(ai, ans.a[std::size_t(j)]) / std::pow(li * ans.lambda(j), h);
    }
    r.r_lambda(i) = k.Gamma1 * ans.eps / std::log(li) - k.Gamma2 * inter;
    r.r_a.segment(i * n, n) = (2.0 * k.Gamma3 / li) * detail::position_leading(ans, dom, i);
  }
  r.err_alpha = Vector::Zero(m);
  r.err_lambda = Vector::Zero(m);
  r.err_a = Vector::Zero(m * n);
  return r;
}

/// Residuals as pairings of grad I_eps(u) with the tangent directions, scaled
/// like the derivatives of K_eps: gamma_i, alpha_i gamma_i, alpha_i gamma_i.
template <GreenDomain D>
ReducedResidual reduced_residual_quadrature(const SpikeAnsatz& ans, const D& dom, const IntegrationPlan& plan = {}) {
  ans.validate(dom);
  const int m = ans.m(), n = dom.n();
  const NonlinearityParams np(ans.eps);
  const AnsatzField<D> field(ans, dom);
  const bool axial = plan.backend != BackendChoice::monte_carlo && is_collinear(domain_region(dom), field.hints());
  Point axis;
  if (axial) axis = axis_frame(domain_region(dom), field.hints()).e;
  ReducedResidual r;
  r.backend = ResidualBackend::quadrature;
  r.r_alpha.resize(m);
  r.r_lambda.resize(m);
  r.r_a = Vector::Zero(m * n);
  r.err_alpha.resize(m);
  r.err_lambda.resize(m);
  r.err_a = Vector::Zero(m * n);
  for (int i = 0; i < m; ++i) {
    const double g = ans.pattern.gamma[std::size_t(i)];
    const double ag = ans.alpha(i) * g;
    const auto pa = grad_pairing(ans, dom, np, PairingDirection::pdelta, i, plan);
    const auto pl = grad_pairing(ans, dom, np, PairingDirection::lambda, i, plan);
    r.r_alpha(i) = g * pa.value;
    r.err_alpha(i) = pa.error;
    r.r_lambda(i) = ag * pl.value;
    r.err_lambda(i) = std::abs(ag) * pl.error;
    if (axial) {
      const auto px = grad_pairing(ans, dom, np, PairingDirection::position, i, plan, axis);
      r.r_a.segment(i * n, n) = ag * px.value * axis;
      r.err_a.segment(i * n, n) = std::abs(ag) * px.error * axis.cwiseAbs();
    } else {
      IntegrationPlan sub = plan;
      for (int c = 0; c < n; ++c) {
        sub.call_index = plan.call_index * 64 + std::uint64_t(c);
        const auto px = grad_pairing(ans, dom, np, PairingDirection::position, i, sub, Point(Point::Unit(n, c)));
        r.r_a(i * n + c) = ag * px.value;
        r.err_a(i * n + c) = std::abs(ag) * px.error;
      }
    }
  }
  return r;
}

template <GreenDomain D>
ReducedResidual reduced_residual(const SpikeAnsatz& ans, const D& dom, const UniversalConstants& k,
                                 ResidualBackend backend, const IntegrationPlan& plan = {},
                                 const ResidualModel& model = {}) {
  if (backend == ResidualBackend::asymptotic) return reduced_residual_asymptotic(ans, dom, k, model);
  return reduced_residual_quadrature(ans, dom, plan);
}

struct RefineOptions {
  ResidualModel model{true};
  double tol = 1e-10;
  int max_iter = 60;
  double fd_step = 1e-7;
  /// move spikes only along the critical point's axis (needed when the full
  /// problem has a rotational zero mode)
  bool axial = false;
};

struct RefineResult {
  SpikeAnsatz ansatz;
  Vector beta, zeta;
  Configuration xi;
  double residual = 0.0;       ///< max norm of the scaled residual
  int iterations = 0;
  std::vector<double> history;  ///< scaled residual per iteration
  Matrix jacobian;              ///< (zeta, xi) block of the scaled Jacobian at the seed
  bool jacobian_regular = false;
};

namespace detail {

// Scaled unknowns z = (beta, zeta, xi) around a critical point and the
// residual map z -> E(z); E = 0 is the asymptotic reduced system.
template <GreenDomain D>
struct ScaledSystem {
  const D& dom;
  const CriticalPoint& cp;
  const SpikePattern& pattern;
  const UniversalConstants& k;
  double eps;
  RefineOptions opt;

  int m() const { return pattern.m(); }
  int n() const { return dom.n(); }
  int xi_dim() const { return opt.axial ? m() : m() * n(); }
  int dim() const { return 2 * m() + xi_dim(); }

  Configuration positions(const Vector& z) const {
    Configuration a = cp.x;
    for (int i = 0; i < m(); ++i) {
      if (opt.axial)
        a[std::size_t(i)] += z(2 * m() + i) * cp.axis;
      else
        a[std::size_t(i)] += z.segment(2 * m() + i * n(), n());
    }
    return a;
  }

  SpikeAnsatz ansatz(const Vector& z) const {
    SpikeAnsatz s;
    s.pattern = pattern;
    s.eps = eps;
    s.alpha = Vector::Ones(m()) + z.head(m());
    s.lambda.resize(m());
    for (int i = 0; i < m(); ++i) {
      const double mu = cp.Lambda(i) + z(m() + i);
      if (!(mu > 0.0)) throw DomainError("refine left the region mu > 0");
      s.lambda(i) = lambda_from_mu(n(), k.cbar, mu, eps);
    }
    s.a = positions(z);
    return s;
  }

  Vector residual(const Vector& z) const {
    const SpikeAnsatz s = ansatz(z);
    const ReducedMatrix M = matrix_M(s.a, pattern, dom);
    const Vector mu = cp.Lambda + z.segment(m(), m());
    const Vector Mmu = M.M * mu;
    const double le = std::abs(std::log(eps));
    const double h = 0.5 * (n() - 2);
    Vector E(dim());
    for (int i = 0; i < m(); ++i) {
      E(i) = -(pattern_p() - 1.0) * z(i);
      if (opt.model.alpha_eps_shift) E(i) += eps * std::log(h * std::log(s.lambda(i)));
      E(m() + i) = le / ((n() - 2) * std::log(s.lambda(i))) - mu(i) * Mmu(i);
      const auto& ai = s.a[std::size_t(i)];
      Point ea = mu(i) * mu(i) * dom.grad_H_a(ai, ai);
      for (int j = 0; j < m(); ++j) {
        if (j == i) continue;
        const double gg = pattern.gamma[std::size_t(i)] * pattern.gamma[std::size_t(j)];
        ea -= gg * mu(i) * mu(j) * dom.grad_G_a(ai, s.a[std::size_t(j)]);
      }
      if (opt.axial)
        E(2 * m() + i) = ea.dot(cp.axis);
      else
        E.segment(2 * m() + i * n(), n()) = ea;
    }
    return E;
  }

  Matrix jacobian(const Vector& z) const {
    Matrix J(dim(), dim());
    for (int c = 0; c < dim(); ++c) {
      Vector p = z, q = z;
      p(c) += opt.fd_step;
      q(c) -= opt.fd_step;
      J.col(c) = (residual(p) - residual(q)) / (2.0 * opt.fd_step);
    }
    return J;
  }

  double pattern_p() const { return Dimension(n()).p(); }
};

}  // namespace detail

/// Damped Newton on the scaled asymptotic system, started at the seed ansatz
/// (usually asymptotic_ansatz(eps, cp, ...)) and expressed around cp.
template <GreenDomain D>
RefineResult refine(const SpikeAnsatz& seed, const CriticalPoint& cp, const D& dom, const UniversalConstants& k,
                    RefineOptions opt = {}) {
  seed.validate(dom);
  const double eps = seed.eps;
  const SpikePattern& pattern = seed.pattern;
  eps_scale(eps);
  if (cp.collinear) opt.axial = true;
  if (opt.axial && cp.axis.size() != dom.n()) throw DomainError("axial refinement needs the critical point's axis");
  if (int(cp.x.size()) != seed.m()) throw DomainError("critical point and seed disagree");
  detail::ScaledSystem<D> sys{dom, cp, pattern, k, eps, opt};
  const int m = pattern.m(), n = dom.n();
  Vector z(sys.dim());
  for (int i = 0; i < m; ++i) {
    z(i) = seed.alpha(i) - 1.0;
    z(m + i) = mu_from_lambda(n, k.cbar, seed.lambda(i), eps) - cp.Lambda(i);
    const Point shift = seed.a[std::size_t(i)] - cp.x[std::size_t(i)];
    if (opt.axial) {
      z(2 * m + i) = shift.dot(cp.axis);
      if ((shift - z(2 * m + i) * cp.axis).norm() > 1e-12 * dom.radius())
        throw DomainError("seed is off the critical point's axis");
    } else {
      z.segment(2 * m + i * n, n) = shift;
    }
  }
  RefineResult out;
  {
    const Matrix J0 = sys.jacobian(Vector::Zero(sys.dim()));
    out.jacobian = J0.bottomRightCorner(sys.dim() - m, sys.dim() - m);
    const Eigen::JacobiSVD<Matrix> svd(out.jacobian);
    const auto sv = svd.singularValues();
    out.jacobian_regular = sv(sv.size() - 1) > 1e-6 * sv(0);
  }
  Vector E = sys.residual(z);
  double r = E.lpNorm<Eigen::Infinity>();
  out.history.push_back(r);
  int it = 0;
  for (; it < opt.max_iter && !(r < opt.tol); ++it) {
    const Matrix J = sys.jacobian(z);
    const Eigen::ColPivHouseholderQR<Matrix> qr(J);
    if (qr.rank() < sys.dim()) break;
    const Vector step = -qr.solve(E);
    double t = 1.0;
    Vector trial;
    double rt = std::numeric_limits<double>::infinity();
    for (int back = 0; back < 30; ++back, t *= 0.5) {
      trial = z + t * step;
      try {
        rt = sys.residual(trial).template lpNorm<Eigen::Infinity>();
      } catch (const DomainError&) {
        continue;
      }
      if (rt < (1.0 - 1e-4 * t) * r) break;
    }
    if (!(rt < r)) break;
    z = trial;
    E = sys.residual(z);
    r = E.lpNorm<Eigen::Infinity>();
    out.history.push_back(r);
  }
  out.iterations = it;
  out.residual = r;
  if (!(r < opt.tol)) {
    std::ostringstream os;
    os << "refine did not converge at eps = " << eps << "; residual history:";
    for (double v : out.history) os << ' ' << v;
    if (!out.jacobian_regular) os << " (Jacobian singular at the seed)";
    throw ConvergenceError(os.str(), r, r);
  }
  out.ansatz = out.iterations == 0 ? seed : sys.ansatz(z);
  out.beta = z.head(m);
  out.zeta = z.segment(m, m);
  out.xi.clear();
  for (int i = 0; i < m; ++i) out.xi.push_back(out.ansatz.a[std::size_t(i)] - cp.x[std::size_t(i)]);
  return out;
}

struct ConcentrationReport {
  std::vector<double> radii;
  Matrix local_mass;            ///< spike x radius Dirichlet mass in B(x_i, r)
  Matrix local_error;
  double total_mass = 0.0;      ///< int over the domain of |grad u|^2
  double total_error = 0.0;
  std::vector<double> exterior;  ///< total minus the local masses, per radius
  double Sn_pow = 0.0;
};

/// Dirichlet mass of the ansatz near each critical-point location.
template <GreenDomain D>
ConcentrationReport concentration_report(const SpikeAnsatz& ans, const D& dom, const Configuration& centers,
                                         const std::vector<double>& radii, const IntegrationPlan& plan = {}) {
  const AnsatzField<D> field(ans, dom);
  const int m = ans.m();
  if (int(centers.size()) != m) throw DomainError("one center per spike expected");
  ConcentrationReport rep;
  rep.radii = radii;
  rep.Sn_pow = constants_for(dom.n()).Sn_pow;
  rep.local_mass.resize(m, Eigen::Index(radii.size()));
  rep.local_error.resize(m, Eigen::Index(radii.size()));
  auto grad_sq = [&](const Point& y) { return field.gradient(y).squaredNorm(); };
  const auto whole = integrate_region(grad_sq, domain_region(dom), field.hints(), plan, 0);
  rep.total_mass = whole.value;
  rep.total_error = whole.error;
  std::uint64_t sub = 1;
  for (int i = 0; i < m; ++i) {
    const Point& c = centers[std::size_t(i)];
    // the domain center fixes the symmetry axis when the sub-ball is centered elsewhere
    std::vector<ScaleHint> hints = field.hints();
    if ((c - dom.center()).norm() > 1e-12 * dom.radius()) hints.push_back({dom.center(), 4.0 / dom.radius()});
    for (std::size_t r = 0; r < radii.size(); ++r) {
      if (!(radii[r] > 0.0)) throw DomainError("concentration radii must be positive");
      const Region ball = Region::ball(c, std::min(radii[r], dom.dist_boundary(c)));
      const auto res = integrate_region(grad_sq, ball, hints, plan, sub++);
      rep.local_mass(i, Eigen::Index(r)) = res.value;
      rep.local_error(i, Eigen::Index(r)) = res.error;
    }
  }
  for (std::size_t r = 0; r < radii.size(); ++r) rep.exterior.push_back(rep.total_mass - rep.local_mass.col(Eigen::Index(r)).sum());
  return rep;
}

}  // namespace spikelab
