#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace spikelab {

/// Maximum supported spatial dimension. Points are stored inline (no heap).
inline constexpr int kMaxDim = 12;

using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kE = std::numbers::e;

/// Invalid argument or a point outside the domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller requested an impossible combination (e.g. deterministic backend
/// on a non-collinear configuration).
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Iterative procedure failed; carries the best estimate obtained.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_estimate, double achieved_tolerance)
      : std::runtime_error(what), best_(best_estimate), achieved_(achieved_tolerance) {}
  double best_estimate() const noexcept { return best_; }
  double achieved_tolerance() const noexcept { return achieved_; }

 private:
  double best_;
  double achieved_;
};

enum class Backend { radial1D, axisym2D, importanceMC };

inline const char* to_string(Backend b) {
  switch (b) {
    case Backend::radial1D: return "radial1D";
    case Backend::axisym2D: return "axisym2D";
    case Backend::importanceMC: return "importanceMC";
  }
  return "unknown";
}

/// Value plus error estimate. Deterministic backends report the difference of
/// the last two refinement levels; Monte Carlo reports the standard error.
struct IntegralResult {
  double value = 0.0;
  double error = 0.0;
  Backend backend = Backend::radial1D;
  int levels = 0;            // refinement levels used (deterministic)
  std::size_t samples = 0;   // samples used (Monte Carlo)
};

/// Sum of two results; errors add linearly for deterministic backends and in
/// quadrature for Monte Carlo.
inline IntegralResult operator+(const IntegralResult& a, const IntegralResult& b) {
  IntegralResult r = a;
  r.value = a.value + b.value;
  if (a.backend == Backend::importanceMC && b.backend == Backend::importanceMC)
    r.error = std::hypot(a.error, b.error);
  else
    r.error = a.error + b.error;
  r.levels = std::max(a.levels, b.levels);
  r.samples = a.samples + b.samples;
  return r;
}

inline IntegralResult operator*(double s, IntegralResult r) {
  r.value *= s;
  r.error *= std::abs(s);
  return r;
}

/// Surface area of the unit sphere S^{k} in R^{k+1}.
inline double sphere_area(int k) {
  const double h = 0.5 * (k + 1);
  return 2.0 * std::pow(kPi, h) / std::tgamma(h);
}

/// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace spikelab
