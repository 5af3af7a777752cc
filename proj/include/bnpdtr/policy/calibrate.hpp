#ifndef BNPDTR_POLICY_CALIBRATE_HPP
#define BNPDTR_POLICY_CALIBRATE_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bnpdtr/policy/policy.hpp"
#include "bnpdtr/stats/smooth.hpp"
#include "bnpdtr/value/engine.hpp"

namespace bnpdtr {

// Feature vectors at every decision point of a reference cohort, used only
// to place the threshold grid. Training data spans its full score range;
// simulated references use the 1st to 99th percentile.
struct ScoreReference {
  Eigen::MatrixXd features;  // one row per decision
  bool from_training = false;

  std::pair<double, double> range(const Eigen::VectorXd& alpha) const {
    if (features.rows() == 0) throw std::invalid_argument("ScoreReference: empty");
    if (features.cols() != alpha.size()) throw std::invalid_argument("ScoreReference: alpha length mismatch");
    const Eigen::VectorXd r = features * alpha;
    if (from_training) return {r.minCoeff(), r.maxCoeff()};
    std::vector<double> v(r.data(), r.data() + r.size());
    return {stats::quantile(v, 0.01), stats::quantile(v, 0.99)};
  }
};

inline ScoreReference reference_from_trajectories(std::span<const Trajectory> data, const FeatureSpec& spec,
                                                  bool from_training) {
  std::size_t rows = 0;
  for (const Trajectory& tr : data) rows += tr.visits.size();
  ScoreReference ref;
  ref.from_training = from_training;
  ref.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(spec.q()));
  Eigen::VectorXd f(static_cast<Eigen::Index>(spec.q()));
  Eigen::Index row = 0;
  for (const Trajectory& tr : data) {
    for (std::size_t t = 0; t < tr.visits.size(); ++t) {
      const bool prev = t > 0;
      const HistoryTail h{tr.X, tr.response_before(t), prev ? tr.visits[t - 1].A : 0.0,
                          prev ? tr.visits[t - 1].delta : 0.0, prev};
      spec.extract(h, f);
      ref.features.row(row++) = f.transpose();
    }
  }
  return ref;
}

// Reference for pure simulation: trajectories under the constant baseline
// recommendation.
inline ScoreReference simulated_reference(const ModelSource& source, const FeatureSpec& spec, std::size_t n,
                                          double horizon, std::uint64_t seed, double baseline_action = 6.0,
                                          unsigned threads = 1) {
  const auto cohort = simulate_cohort(source, ConstantAction{baseline_action}, n, horizon, seed, threads);
  return reference_from_trajectories(cohort, spec, false);
}

struct CalibrationConfig {
  double target = 6.0;
  std::size_t n1 = 2000;
  std::size_t grid_size = 10;
  double span = 0.75;
  double horizon = 60.0;
  double a1 = 3.0;
  double a2 = 9.0;
  unsigned threads = 1;

  void validate() const {
    if (n1 == 0) throw std::invalid_argument("CalibrationConfig: n1 must be positive");
    if (grid_size < 2) throw std::invalid_argument("CalibrationConfig: grid needs at least two points");
    if (!(a1 > 0.0) || !(a2 > a1)) throw std::invalid_argument("CalibrationConfig: require 0 < a1 < a2");
    if (!(target >= a1 && target <= a2))
      throw std::invalid_argument("CalibrationConfig: target cost outside [a1, a2]");
    if (!(horizon > 0.0)) throw std::invalid_argument("CalibrationConfig: horizon must be positive");
  }
};

struct CalibrationResult {
  double kappa = 0.0;
  bool flagged = false;
  std::string warning;
  std::vector<double> grid;
  std::vector<double> raw_cost;
  std::vector<double> smoothed_cost;
};

// Threshold giving mean recommended interval `target` for direction alpha.
// Every grid point reuses the same seed so the cost curve is estimated with
// common random numbers.
inline CalibrationResult calibrate_threshold(const ModelSource& source, const Eigen::VectorXd& alpha,
                                             const FeatureSpec& spec, const ScoreReference& reference,
                                             const CalibrationConfig& config, std::uint64_t seed) {
  config.validate();
  if (std::abs(alpha.norm() - 1.0) > 1e-10) throw std::invalid_argument("calibrate_threshold: alpha must be unit");
  auto [lo, hi] = reference.range(alpha);
  if (!(hi > lo)) {
    const double pad = 1e-6 * (1.0 + std::abs(lo));
    lo -= pad;
    hi += pad;
  }
  CalibrationResult res;
  const std::size_t K = config.grid_size;
  Policy pol{alpha, 0.0, config.a1, config.a2, spec};
  for (std::size_t k = 0; k < K; ++k) {
    const double kappa = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(K - 1);
    pol.kappa = kappa;
    res.grid.push_back(kappa);
    res.raw_cost.push_back(estimate_cost(source, pol, config.n1, config.horizon, seed, config.threads));
  }
  res.smoothed_cost = stats::isotonic_increasing(stats::loess(res.grid, res.raw_cost, config.span));
  const stats::Inversion inv = stats::invert_monotone(res.grid, res.smoothed_cost, config.target);
  res.kappa = inv.x;
  if (inv.clamped) {
    res.flagged = true;
    res.warning = "target cost " + std::to_string(config.target) + " outside smoothed range [" +
                  std::to_string(res.smoothed_cost.front()) + ", " + std::to_string(res.smoothed_cost.back()) +
                  "]; threshold set to grid endpoint";
  }
  return res;
}

}  // namespace bnpdtr

#endif
