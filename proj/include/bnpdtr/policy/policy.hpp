#ifndef BNPDTR_POLICY_POLICY_HPP
#define BNPDTR_POLICY_POLICY_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bnpdtr/core/dynamics.hpp"
#include "bnpdtr/stats/random.hpp"

namespace bnpdtr {

enum class FeatureKind { covariate, covariate_scaled, noncompliance, current_response_scaled };

struct FeatureDescriptor {
  FeatureKind kind = FeatureKind::covariate;
  std::size_t index = 0;  // covariate position, 0-based
  double scale = 1.0;

  static FeatureDescriptor covariate(std::size_t j) { return {FeatureKind::covariate, j, 1.0}; }
  static FeatureDescriptor covariate_scaled(std::size_t j, double s) {
    return {FeatureKind::covariate_scaled, j, s};
  }
  static FeatureDescriptor noncompliance() { return {FeatureKind::noncompliance, 0, 1.0}; }
  static FeatureDescriptor current_response(double s = 1.0) {
    return {FeatureKind::current_response_scaled, 0, s};
  }
};

inline std::string to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::covariate: return "covariate";
    case FeatureKind::covariate_scaled: return "covariate_scaled";
    case FeatureKind::noncompliance: return "noncompliance";
    case FeatureKind::current_response_scaled: return "current_response_scaled";
  }
  return "covariate";
}

inline FeatureKind parse_feature_kind(const std::string& s) {
  if (s == "covariate") return FeatureKind::covariate;
  if (s == "covariate_scaled") return FeatureKind::covariate_scaled;
  if (s == "noncompliance") return FeatureKind::noncompliance;
  if (s == "current_response_scaled") return FeatureKind::current_response_scaled;
  throw std::invalid_argument("unknown feature kind '" + s + "'");
}

// Features of the history available at a decision. Before the first
// follow-up visit the previous recommendation and elapsed time default to
// initial_action / initial_delta.
struct FeatureSpec {
  std::vector<FeatureDescriptor> features;
  double initial_action = 6.0;
  double initial_delta = 6.0;

  std::size_t q() const { return features.size(); }

  double feature(std::size_t k, const HistoryTail& h) const {
    const FeatureDescriptor& f = features[k];
    switch (f.kind) {
      case FeatureKind::covariate:
      case FeatureKind::covariate_scaled:
        if (static_cast<Eigen::Index>(f.index) >= h.X.size())
          throw std::out_of_range("feature: covariate index out of range");
        return (f.kind == FeatureKind::covariate ? 1.0 : f.scale) * h.X(static_cast<Eigen::Index>(f.index));
      case FeatureKind::noncompliance: {
        const double a = h.has_previous ? h.A_prev : initial_action;
        const double d = h.has_previous ? h.delta_prev : initial_delta;
        return std::log(std::abs(d - a) + 1.0);
      }
      case FeatureKind::current_response_scaled:
        return f.scale * h.Y_prev;
    }
    return 0.0;
  }

  void extract(const HistoryTail& h, Eigen::Ref<Eigen::VectorXd> out) const {
    for (std::size_t k = 0; k < features.size(); ++k) out(static_cast<Eigen::Index>(k)) = feature(k, h);
  }

  // X_1 .. X_p-style features used by the two-covariate simulation study:
  // R = a1 X_1 + a2 X_2 + a3 log(|delta - A| + 1) + a4 Y_prev.
  static FeatureSpec simulation_study() {
    return FeatureSpec{{FeatureDescriptor::covariate(0), FeatureDescriptor::covariate(1),
                        FeatureDescriptor::noncompliance(), FeatureDescriptor::current_response(1.0)}};
  }

  // Age, diabetes, noncompliance and 10 * Y_prev, for the six-covariate
  // (gender, race, age, diabetes, smoking, insurance) clinical layout.
  static FeatureSpec clinical() {
    return FeatureSpec{{FeatureDescriptor::covariate(2), FeatureDescriptor::covariate(3),
                        FeatureDescriptor::noncompliance(), FeatureDescriptor::current_response(10.0)}};
  }
};

inline Eigen::VectorXd normalize_weights(const Eigen::VectorXd& raw) {
  const double n = raw.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("normalize_weights: zero or non-finite vector");
  return raw / n;
}

// Linear risk-score threshold policy: a1 when alpha . f(H) > kappa, a2 otherwise.
struct Policy {
  Eigen::VectorXd alpha;
  double kappa = 0.0;
  double a1 = 3.0;
  double a2 = 9.0;
  FeatureSpec feature_spec;

  void validate() const {
    if (static_cast<std::size_t>(alpha.size()) != feature_spec.q())
      throw std::invalid_argument("Policy: alpha length differs from feature count");
    if (std::abs(alpha.norm() - 1.0) > 1e-10) throw std::invalid_argument("Policy: alpha must have unit norm");
    if (!(a1 > 0.0) || !(a2 > a1)) throw std::invalid_argument("Policy: require 0 < a1 < a2");
    if (std::isnan(kappa)) throw std::invalid_argument("Policy: kappa is NaN");
  }

  double operator()(const HistoryTail& h, Rng&) const;
};

inline double risk_score(const Policy& policy, const HistoryTail& h) {
  double r = 0.0;
  for (std::size_t k = 0; k < policy.feature_spec.q(); ++k)
    r += policy.alpha(static_cast<Eigen::Index>(k)) * policy.feature_spec.feature(k, h);
  return r;
}

// Ties go to the longer interval: R <= kappa -> a2.
inline double decide(const Policy& policy, const HistoryTail& h) {
  return risk_score(policy, h) > policy.kappa ? policy.a1 : policy.a2;
}

inline double Policy::operator()(const HistoryTail& h, Rng&) const { return decide(*this, h); }

// Builds a unit-norm policy from an unnormalised score; kappa is rescaled with
// alpha so every decision is unchanged.
inline Policy policy_from_raw_score(const Eigen::VectorXd& raw_alpha, double raw_kappa, double a1, double a2,
                                    FeatureSpec spec) {
  const double n = raw_alpha.norm();
  Policy p{normalize_weights(raw_alpha), raw_kappa / n, a1, a2, std::move(spec)};
  p.validate();
  return p;
}

}  // namespace bnpdtr

#endif
