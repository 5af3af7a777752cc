#ifndef BNPDTR_VALUE_UTILITY_HPP
#define BNPDTR_VALUE_UTILITY_HPP

#include <stdexcept>
#include <string>

#include "bnpdtr/core/types.hpp"

namespace bnpdtr {

enum class UtilityKind { average, reduction };

inline std::string to_string(UtilityKind k) { return k == UtilityKind::average ? "average" : "reduction"; }

inline UtilityKind parse_utility_kind(const std::string& s) {
  if (s == "average") return UtilityKind::average;
  if (s == "reduction") return UtilityKind::reduction;
  throw std::invalid_argument("unknown utility '" + s + "'");
}

struct UtilitySpec {
  UtilityKind kind = UtilityKind::reduction;
  double horizon = 60.0;

  void validate() const {
    if (!(horizon > 0.0)) throw std::invalid_argument("UtilitySpec: horizon must be positive");
  }
};

// Linear interpolation of the response at calendar month `at`, between the
// visits bracketing it. The baseline sits at month 0.
inline double response_at(const Trajectory& tr, double at) {
  double t_prev = 0.0, y_prev = tr.Y0;
  for (const VisitRecord& v : tr.visits) {
    const double t = t_prev + v.delta;
    if (t == at) return v.Y;
    if (t > at) return y_prev + (v.Y - y_prev) * (at - t_prev) / (t - t_prev);
    t_prev = t;
    y_prev = v.Y;
  }
  throw std::domain_error("response_at: trajectory ends before month " + std::to_string(at));
}

// average: minus the mean follow-up response, the horizon-crossing visit
// included. reduction: baseline minus the response interpolated at the horizon.
inline double utility(const Trajectory& tr, const UtilitySpec& spec) {
  if (tr.visits.empty()) throw std::domain_error("utility: no follow-up visits");
  if (tr.calendar_time() < spec.horizon) throw std::domain_error("utility: trajectory ends before the horizon");
  if (spec.kind == UtilityKind::reduction) return tr.Y0 - response_at(tr, spec.horizon);
  double s = 0.0;
  for (const VisitRecord& v : tr.visits) s += v.Y;
  return -s / static_cast<double>(tr.visits.size());
}

}  // namespace bnpdtr

#endif
