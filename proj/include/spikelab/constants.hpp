#pragma once

// Universal constants of the bubble: S_n^{n/2}, cbar_1, Gamma_1..3 and cbar,
// plus the lambda-log decomposition used for the eps-expansion.

#include "spikelab/bubble.hpp"
#include "spikelab/gauss.hpp"

#include <map>
#include <mutex>

namespace spikelab {

struct UniversalConstants {
  int n = 0;
  double c0 = 0.0;
  double Sn_pow = 0.0;   ///< S_n^{n/2} = |grad delta|_2^2 = |delta|_{p+1}^{p+1}
  double cbar1 = 0.0;    ///< c0^{2n/(n-2)} int (1+|x|^2)^{-(n+2)/2}
  double Gamma1 = 0.0;   ///< (2/(n-2)) int delta^p ln(delta) psi0 over R^n
  double Gamma2 = 0.0;   ///< (n-2) cbar1 / 2
  double Gamma3 = 0.0;   ///< cbar1 / 2
  double cbar = 0.0;     ///< ((n-2) Gamma1 / Gamma2)^{1/2}
  double orthogonality = 0.0;  ///< int delta^p psi0 over R^n (zero analytically)
  double quad_error = 0.0;     ///< largest quadrature error estimate among the above
  bool outside_theorem = false;
};

/// int_{R^n} (1+|x|^2)^{-s} dx = pi^{n/2} Gamma(s-n/2) / Gamma(s), s > n/2.
inline double beta_radial_integral(int n, double s) {
  return std::pow(kPi, 0.5 * n) * std::exp(std::lgamma(s - 0.5 * n) - std::lgamma(s));
}

/// Radial quadrature of every constant. Throws ConvergenceError (carrying the
/// achieved tolerance) if a quadrature fails to settle.
inline UniversalConstants compute_constants(int n, const QuadOptions& opt = {1e-13, 0.0, 1, 8}) {
  const Dimension d(n);
  UniversalConstants k;
  k.n = n;
  k.c0 = d.c0();
  k.outside_theorem = d.outside_theorem();
  const double p = d.p();

  auto s_integrand = [&](double r) { return std::pow(unit_bubble(d, r), p + 1.0); };
  auto c1_integrand = [&](double r) { return std::pow(unit_bubble(d, r), p); };
  auto g1_integrand = [&](double r) {
    return std::pow(unit_bubble(d, r), p) * unit_log_bubble(d, r) * unit_psi0(d, r);
  };
  auto orth_integrand = [&](double r) { return std::pow(unit_bubble(d, r), p) * unit_psi0(d, r); };

  const IntegralResult S = integrate_radial(s_integrand, n, 1.0, opt);
  // delta^p = c0^p (1+r^2)^{-(n+2)/2}, hence cbar1 = c0 * int delta^p
  const IntegralResult C1 = integrate_radial(c1_integrand, n, 1.0, opt);
  const IntegralResult G1 = integrate_radial(g1_integrand, n, 1.0, opt);
  // the exact value is zero; accept level differences at the roundoff floor of the parts
  QuadOptions orth_opt = opt;
  orth_opt.abs_tol = 1e-14 * S.value;
  const IntegralResult O = integrate_radial(orth_integrand, n, 1.0, orth_opt);

  k.Sn_pow = S.value;
  k.cbar1 = k.c0 * C1.value;
  k.Gamma1 = 2.0 / (n - 2) * G1.value;
  k.Gamma3 = 0.5 * k.cbar1;
  k.Gamma2 = (n - 2) * k.Gamma3;
  k.cbar = std::sqrt((n - 2) * k.Gamma1 / k.Gamma2);
  k.orthogonality = O.value;
  k.quad_error = std::max({S.error / S.value, C1.error / C1.value, G1.error / std::abs(G1.value)});
  if (!(k.Gamma1 > 0.0)) throw ConvergenceError("Gamma1 not positive", k.Gamma1, k.quad_error);
  return k;
}

/// Constants are computed once per dimension and shared.
inline const UniversalConstants& constants_for(int n) {
  static std::mutex mu;
  static std::map<int, UniversalConstants> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_constants(n)).first;
  return it->second;
}

struct LogLogParts {
  double leading = 0.0;    ///< ln ln(lambda^{(n-2)/2})
  double linear = 0.0;     ///< 2 ln U / ((n-2) ln lambda)
  double remainder = 0.0;  ///< bracketed correction
};

/// Splits ln ln(e + lambda^{(n-2)/2} U) into leading, linear and remainder
/// parts; their sum reproduces the left side up to rounding.
inline LogLogParts loglog_decompose(const Dimension& d, double lambda, double U) {
  if (!(lambda > kE) || !(U > 0.0)) throw DomainError("loglog_decompose requires lambda > e and U > 0");
  const double w = d.half_weight();
  const double lnl = std::log(lambda);
  const double big = w * lnl;  // ln(lambda^{(n-2)/2})
  LogLogParts out;
  out.leading = std::log(big);
  out.linear = std::log(U) / big;
  // ln(e^{1 - w ln lambda} + U), computed stably
  const double inner = std::log(U + std::exp(1.0 - big));
  out.remainder = std::log1p(inner / big) - out.linear;
  return out;
}

}  // namespace spikelab
