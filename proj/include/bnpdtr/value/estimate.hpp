#ifndef BNPDTR_VALUE_ESTIMATE_HPP
#define BNPDTR_VALUE_ESTIMATE_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bnpdtr/value/engine.hpp"
#include "bnpdtr/value/utility.hpp"

namespace bnpdtr {

struct ValueEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_subjects = 0;
  double cost = 0.0;  // mean recommended months
  double cost_se = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {
struct MomentSums {
  double u = 0.0, uu = 0.0, c = 0.0, cc = 0.0;
};
inline double se_from_sums(double s, double ss, std::size_t n) {
  if (n < 2) return 0.0;
  const double nn = static_cast<double>(n);
  const double var = std::max(0.0, (ss - s * s / nn) / (nn - 1.0));
  return std::sqrt(var / nn);
}
}  // namespace detail

// g-computation estimate: simulate n subjects under the rule and average
// their utilities. Posterior sources draw one parameter set per subject.
template <class ActionRule>
ValueEstimate estimate_value(const ModelSource& source, const ActionRule& rule, const UtilitySpec& spec,
                             std::size_t n, std::uint64_t seed, unsigned threads = 1) {
  if (n == 0) throw std::invalid_argument("estimate_value: n must be at least 1");
  if (source.empty()) throw std::invalid_argument("estimate_value: empty model source");
  spec.validate();
  const std::size_t n_blocks = (n + kSubjectsPerBlock - 1) / kSubjectsPerBlock;
  std::vector<detail::MomentSums> sums(n_blocks);
  simulate_blocks(source, rule, n, spec.horizon, seed, threads, [&](std::size_t b, const Trajectory& tr) {
    const double u = utility(tr, spec);
    const double c = mean_action(tr);
    auto& s = sums[b];
    s.u += u;
    s.uu += u * u;
    s.c += c;
    s.cc += c * c;
  });
  detail::MomentSums tot;
  for (const auto& s : sums) {
    tot.u += s.u;
    tot.uu += s.uu;
    tot.c += s.c;
    tot.cc += s.cc;
  }
  ValueEstimate e;
  e.n_subjects = n;
  e.seed = seed;
  e.value = tot.u / static_cast<double>(n);
  e.cost = tot.c / static_cast<double>(n);
  e.std_error = detail::se_from_sums(tot.u, tot.uu, n);
  e.cost_se = detail::se_from_sums(tot.c, tot.cc, n);
  if (!std::isfinite(e.value) || !std::isfinite(e.std_error))
    throw NumericalError("estimate_value: non-finite estimate");
  return e;
}

}  // namespace bnpdtr

#endif
