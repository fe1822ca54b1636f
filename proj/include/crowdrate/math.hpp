#ifndef CROWDRATE_MATH_HPP
#define CROWDRATE_MATH_HPP

#include <cmath>
#include <limits>
#include <span>

namespace crowdrate {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double invlogit(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// log(1 + exp(x)) without overflow for large x.
inline double log1p_exp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// log(invlogit(x))
inline double log_invlogit(double x) { return -log1p_exp(-x); }

inline double log_sum_exp(double a, double b) {
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  const double m = a > b ? a : b;
  const double s = a > b ? b : a;
  return m + std::log1p(std::exp(s - m));
}

inline double log_sum_exp(std::span<const double> xs) {
  double m = neg_inf;
  for (double x : xs) m = std::max(m, x);
  if (m == neg_inf || std::isinf(m)) return m;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - m);
  return m + std::log(acc);
}

// --- prior log densities and their derivatives w.r.t. the variate ---

// Beta(2,2): log 6 + log x + log(1-x)
inline double beta22_lpdf(double x) {
  if (x <= 0.0 || x >= 1.0) return neg_inf;
  return 1.791759469228055 + std::log(x) + std::log1p(-x);
}
inline double beta22_lpdf_grad(double x) { return 1.0 / x - 1.0 / (1.0 - x); }

inline double normal_lpdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.9189385332046727;
}
inline double normal_lpdf_grad(double x, double mu, double sigma) {
  return -(x - mu) / (sigma * sigma);
}

inline double lognormal_lpdf(double x, double mu, double sigma) {
  if (x <= 0.0) return neg_inf;
  const double lx = std::log(x);
  const double z = (lx - mu) / sigma;
  return -0.5 * z * z - lx - std::log(sigma) - 0.9189385332046727;
}
inline double lognormal_lpdf_grad(double x, double mu, double sigma) {
  const double lx = std::log(x);
  return (-1.0 - (lx - mu) / (sigma * sigma)) / x;
}

}  // namespace crowdrate

#endif
