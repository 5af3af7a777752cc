#ifndef BNPDTR_STATS_DENSITIES_HPP
#define BNPDTR_STATS_DENSITIES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "bnpdtr/stats/random.hpp"

namespace bnpdtr::stats {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double norm_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// log Phi(z), accurate far into the lower tail.
inline double norm_log_cdf(double z) {
  if (z > -30.0) return std::log(norm_cdf(z));
  // Mills-ratio asymptotic expansion.
  const double z2 = z * z;
  return -0.5 * z2 - kLogSqrt2Pi - std::log(-z) +
         std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

inline double norm_quantile(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double norm_logpdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (std::log(var) + r * r / var) - kLogSqrt2Pi;
}

// Location-scale Student-t log density (scale is the standard scale, not a variance).
inline double t_logpdf(double x, double mean, double scale, double df) {
  const double z = (x - mean) / scale;
  return std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
         0.5 * std::log(df * std::numbers::pi) - std::log(scale) -
         0.5 * (df + 1.0) * std::log1p(z * z / df);
}

inline double t_log_cdf(double x, double mean, double scale, double df) {
  const double z = (x - mean) / scale;
  boost::math::students_t_distribution<double> dist(df);
  if (z < 0.0) return std::log(boost::math::cdf(dist, z));
  return std::log1p(-boost::math::cdf(boost::math::complement(dist, z)));
}

inline double t_log_ccdf(double x, double mean, double scale, double df) {
  return t_log_cdf(-x, -mean, scale, df);
}

namespace detail {

// Robert (1995) exponential rejection for N(0,1) restricted to [a, inf), a > 0.
inline double std_normal_tail(Rng& rng, double a) {
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(rnd::uniform(rng)) / alpha;
    const double rho = std::exp(-0.5 * (z - alpha) * (z - alpha));
    if (rnd::uniform(rng) <= rho) return z;
  }
}

// N(0,1) restricted to [lo, hi].
inline double std_truncated_normal(Rng& rng, double lo, double hi) {
  if (!(lo < hi)) throw std::domain_error("truncated_normal: empty interval");
  if (lo >= 0.5 && hi == std::numeric_limits<double>::infinity())
    return std_normal_tail(rng, lo);
  if (hi <= -0.5 && lo == -std::numeric_limits<double>::infinity())
    return -std_normal_tail(rng, -hi);
  // Work in whichever tail keeps the CDF differences well conditioned.
  if (lo > 0.0) {
    const double a = norm_cdf(-hi), b = norm_cdf(-lo);
    const double u = a + (b - a) * rnd::uniform(rng);
    double z = -norm_quantile(u);
    if (z >= lo && z <= hi) return z;
  } else {
    const double a = norm_cdf(lo), b = norm_cdf(hi);
    if (b - a > 1e-300) {
      const double u = a + (b - a) * rnd::uniform(rng);
      double z = norm_quantile(u);
      if (z >= lo && z <= hi) return z;
    }
  }
  // Numerically degenerate narrow interval far in a tail: fall back to the
  // endpoint nearest the mode.
  return (std::abs(lo) < std::abs(hi)) ? lo : hi;
}

}  // namespace detail

// Draw from N(mean, sd^2) restricted to [lo, hi]; either bound may be infinite.
inline double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
  if (sd <= 0.0) return std::clamp(mean, lo, hi);
  const double z = detail::std_truncated_normal(rng, (lo - mean) / sd, (hi - mean) / sd);
  return std::clamp(mean + sd * z, lo, hi);
}

}  // namespace bnpdtr::stats

#endif
