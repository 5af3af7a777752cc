#ifndef BNPDTR_BENCH_DGP_HPP
#define BNPDTR_BENCH_DGP_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bnpdtr/core/dynamics.hpp"
#include "bnpdtr/core/types.hpp"

namespace bnpdtr::bench {

enum class Allocation { single, mixture };

inline std::string to_string(Allocation a) { return a == Allocation::single ? "single" : "mixture"; }

inline Allocation parse_allocation(const std::string& s) {
  if (s == "single") return Allocation::single;
  if (s == "mixture") return Allocation::mixture;
  throw std::invalid_argument("unknown scenario '" + s + "'");
}

inline double group1_probability(Allocation a) { return a == Allocation::single ? 1.0 : 0.8; }

inline constexpr std::size_t kStudyCovariates = 2;

// Two-covariate simulation study written as a two-atom mixture with centred
// elapsed time (delta - 6). Atom 0 is the compliant group, atom 1 ignores
// the recommendation.
inline MixtureModel study_dgp(double prob_group1) {
  if (!(prob_group1 >= 0.0 && prob_group1 <= 1.0))
    throw std::invalid_argument("study_dgp: probability outside [0, 1]");
  constexpr std::size_t p = kStudyCovariates;
  const std::size_t d = regression_dim(p);
  // theta layout: 0 intercept, 1..2 X, 3 Y, 4 s, 5..6 X s, 7 Y s
  MixtureModel m;
  m.mode = ModelMode::basic;
  m.delta_coding = DeltaCoding{DeltaTransform::centered, 6.0};
  m.weights = {prob_group1, 1.0 - prob_group1};
  m.Sigma0 = Eigen::MatrixXd::Constant(p + 1, p + 1, 0.5);
  m.Sigma0.diagonal().setOnes();
  m.sigma1_sq = 0.1 * 0.1;
  m.sigma2_sq = 0.5 * 0.5;

  Atom g1;
  g1.theta0 = Eigen::VectorXd::Zero(p + 1);
  g1.theta1 = Eigen::VectorXd::Zero(d);
  g1.theta1(4) = 0.9;
  g1.theta1(5) = 0.1;
  g1.theta2 = Eigen::VectorXd::Zero(d);
  g1.theta2(0) = 0.1;
  g1.theta2(2) = 0.2;
  g1.theta2(3) = 0.9;
  g1.theta2(4) = 0.2;
  g1.theta2(7) = 0.02;

  Atom g2;
  g2.theta0 = Eigen::VectorXd::Zero(p + 1);
  g2.theta0(0) = 1.0;
  g2.theta1 = Eigen::VectorXd::Zero(d);
  g2.theta1(0) = std::log(5.3);
  g2.theta2 = Eigen::VectorXd::Zero(d);
  g2.theta2(0) = 0.1;
  g2.theta2(1) = 0.3;
  g2.theta2(3) = 0.9;
  g2.theta2(4) = -0.2;

  m.atoms = {g1, g2};
  m.validate();
  return m;
}

inline MixtureModel study_dgp(Allocation a) { return study_dgp(group1_probability(a)); }

// Observational behaviour: logit P(A = 3) = Y_prev, otherwise 9 months.
inline LogisticBehavior study_behavior() { return LogisticBehavior{3.0, 9.0, 0.0, 1.0}; }

inline constexpr double kStudyHorizon = 60.0;

inline std::vector<Trajectory> generate_group(std::size_t group, std::size_t n, Rng& rng) {
  const PreparedModel pm(study_dgp(0.8));
  const auto behavior = study_behavior();
  std::vector<Trajectory> out(n);
  for (auto& tr : out) sample_subject_from_atom(tr, pm, group, behavior, kStudyHorizon, rng);
  return out;
}

inline std::vector<Trajectory> generate_group1(std::size_t n, Rng& rng) { return generate_group(0, n, rng); }
inline std::vector<Trajectory> generate_group2(std::size_t n, Rng& rng) { return generate_group(1, n, rng); }

inline std::vector<Trajectory> generate_dataset(Allocation a, std::size_t n, Rng& rng) {
  const PreparedModel pm(study_dgp(a));
  const auto behavior = study_behavior();
  std::vector<Trajectory> out(n);
  for (auto& tr : out) sample_subject_into(tr, pm, behavior, kStudyHorizon, rng);
  return out;
}

}  // namespace bnpdtr::bench

#endif
