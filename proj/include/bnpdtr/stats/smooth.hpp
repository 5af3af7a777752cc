#ifndef BNPDTR_STATS_SMOOTH_HPP
#define BNPDTR_STATS_SMOOTH_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace bnpdtr::stats {

// Local linear regression evaluated at each x with tricube weights over the
// nearest floor(span * n) points. A span above 1 widens the bandwidth
// proportionally.
inline std::vector<double> loess(const std::vector<double>& x, const std::vector<double>& y, double span = 0.75) {
  const std::size_t n = x.size();
  if (n != y.size()) throw std::invalid_argument("loess: x and y lengths differ");
  if (n < 2) throw std::invalid_argument("loess: need at least two points");
  if (!(span > 0.0)) throw std::invalid_argument("loess: span must be positive");
  const std::size_t q = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(span * static_cast<double>(n))), 2, n);
  std::vector<double> fit(n), dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) dist[k] = std::abs(x[k] - x[i]);
    std::vector<double> sorted = dist;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(q - 1), sorted.end());
    double h = sorted[q - 1];
    if (span > 1.0) h *= span;
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
      double w = 0.0;
      if (h > 0.0) {
        const double u = dist[k] / h;
        if (u < 1.0) w = std::pow(1.0 - u * u * u, 3);
      } else if (dist[k] == 0.0) {
        w = 1.0;
      }
      const double dx = x[k] - x[i];
      sw += w;
      sx += w * dx;
      sy += w * y[k];
      sxx += w * dx * dx;
      sxy += w * dx * y[k];
    }
    if (!(sw > 0.0)) throw std::invalid_argument("loess: empty neighbourhood");
    const double det = sw * sxx - sx * sx;
    fit[i] = det > 1e-12 * sw * sxx ? (sxx * sy - sx * sxy) / det : sy / sw;
  }
  return fit;
}

// Pool-adjacent-violators: least-squares non-decreasing fit with equal weights.
inline std::vector<double> isotonic_increasing(const std::vector<double>& y) {
  std::vector<double> level;
  std::vector<std::size_t> count;
  for (double v : y) {
    level.push_back(v);
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const std::size_t c = count.back() + count[count.size() - 2];
      const double merged = (level.back() * static_cast<double>(count.back()) +
                             level[level.size() - 2] * static_cast<double>(count[count.size() - 2])) /
                            static_cast<double>(c);
      level.pop_back();
      count.pop_back();
      level.back() = merged;
      count.back() = c;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (std::size_t b = 0; b < level.size(); ++b) out.insert(out.end(), count[b], level[b]);
  return out;
}

struct Inversion {
  double x = 0.0;
  bool clamped = false;
};

// Solves f(x) = target on a piecewise-linear non-decreasing curve through
// (x_k, f_k). Targets outside [f_0, f_last] return the nearer end, clamped.
// On a flat run equal to the target the midpoint of the run is returned.
inline Inversion invert_monotone(const std::vector<double>& x, const std::vector<double>& f, double target) {
  const std::size_t n = x.size();
  if (n < 2 || f.size() != n) throw std::invalid_argument("invert_monotone: need matching vectors of length >= 2");
  if (target < f.front()) return {x.front(), true};
  if (target > f.back()) return {x.back(), true};
  std::size_t lo = n, hi = n;
  for (std::size_t k = 0; k < n; ++k) {
    if (f[k] == target) {
      if (lo == n) lo = k;
      hi = k;
    }
  }
  if (lo != n) return {0.5 * (x[lo] + x[hi]), false};
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (f[k] < target && target < f[k + 1])
      return {x[k] + (target - f[k]) / (f[k + 1] - f[k]) * (x[k + 1] - x[k]), false};
  }
  throw std::invalid_argument("invert_monotone: curve is not monotone");
}

// Sample quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double prob) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double h = prob * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace bnpdtr::stats

#endif
