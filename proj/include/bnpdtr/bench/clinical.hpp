#ifndef BNPDTR_BENCH_CLINICAL_HPP
#define BNPDTR_BENCH_CLINICAL_HPP

#include <Eigen/Dense>

#include "bnpdtr/core/types.hpp"
#include "bnpdtr/policy/policy.hpp"

namespace bnpdtr::bench {

// Covariate order: gender, race, age (standardised), diabetes, smoking,
// insurance. All but age are binary.
inline constexpr std::size_t kClinicalCovariates = 6;

// A single-atom extended model whose regression blocks are the published
// weighted-average posterior means (reported x100). Baseline moments and
// error scales are not published; plausible values are used so the model
// can drive end-to-end runs.
inline MixtureModel synthetic_clinical_model() {
  constexpr std::size_t p = kClinicalCovariates;
  auto row = [](std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x / 100.0;
    return out;
  };
  // intercept, X1..X6, Y, s, X1 s..X6 s, Y s
  Atom a;
  a.theta1 = row({84.63, -0.41, 24.75, -10.41, -4.16, -17.87, -23.10, -37.24, 63.92, 0.21, -11.95, 3.12, 2.33, 9.47,
                  10.63, 17.76});
  a.theta2 = row({-1.76, -0.16, -0.25, 0.47, -0.36, 0.98, 2.44, 89.67, 1.33, 0.15, 0.00, -0.03, 0.26, -0.14, -1.28,
                  3.61});
  a.theta3 = row({-47.83, 6.84, 1.42, -1.08, -13.87, -9.89, 7.71, 92.70, 16.36, 3.36, -3.72, 0.07, 7.62, 10.50, 1.31,
                  2.77});
  a.theta0 = Eigen::VectorXd::Zero(p + 1);
  a.theta0 << 0.0, -0.5, 0.0, -1.0, -1.0, 0.5, 0.15;

  MixtureModel m;
  m.mode = ModelMode::extended;
  m.delta_coding = DeltaCoding{DeltaTransform::log, 0.0};
  m.weights = {1.0};
  m.atoms = {a};
  m.Sigma0 = Eigen::MatrixXd::Identity(p + 1, p + 1);
  m.Sigma0(p, p) = 0.01;
  m.sigma1_sq = 0.3 * 0.3;
  m.sigma2_sq = 0.05 * 0.05;
  m.nu1 = 5.0;
  m.nu2 = 5.0;
  m.binary_mask = {true, true, false, true, true, true};
  m.validate();
  return m;
}

// The published clinical policy: weights (-0.17, 0.50, 0.22, 0.82) on age,
// diabetes, noncompliance and 10 Y_prev, threshold 1.06, 3 or 9 months.
inline Policy published_clinical_policy() {
  Eigen::VectorXd raw(4);
  raw << -0.17, 0.50, 0.22, 0.82;
  return policy_from_raw_score(raw, 1.06, 3.0, 9.0, FeatureSpec::clinical());
}

}  // namespace bnpdtr::bench

#endif
