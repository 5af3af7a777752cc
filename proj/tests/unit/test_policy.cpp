#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "bnpdtr/bench/clinical.hpp"
#include "bnpdtr/bench/dgp.hpp"
#include "bnpdtr/policy/calibrate.hpp"

using namespace bnpdtr;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Policy study_policy(Eigen::VectorXd raw, double kappa) {
  return Policy{normalize_weights(raw), kappa, 3.0, 9.0, FeatureSpec::simulation_study()};
}

// Clinical covariates: gender, race, age, diabetes, smoking, insurance.
Eigen::VectorXd clinical_x(double age, double diabetes) { return vec({0, 0, age, diabetes, 0, 0}); }

}  // namespace

TEST(Features, ExtractionAndBaselineDefaults) {
  const FeatureSpec spec = FeatureSpec::simulation_study();
  ASSERT_EQ(spec.q(), 4u);
  const Eigen::VectorXd x = vec({0.4, -1.2});
  const HistoryTail first{x, 0.25, 0.0, 0.0, false};
  EXPECT_DOUBLE_EQ(spec.feature(0, first), 0.4);
  EXPECT_DOUBLE_EQ(spec.feature(1, first), -1.2);
  EXPECT_DOUBLE_EQ(spec.feature(2, first), 0.0);
  EXPECT_DOUBLE_EQ(spec.feature(3, first), 0.25);
  const HistoryTail late{x, 0.25, 3.0, 7.0, true};
  EXPECT_DOUBLE_EQ(spec.feature(2, late), std::log(5.0));
  const HistoryTail on_time{x, 0.25, 9.0, 9.0, true};
  EXPECT_DOUBLE_EQ(spec.feature(2, on_time), 0.0);

  const Eigen::VectorXd short_x = vec({1.0});
  const HistoryTail bad{short_x, 0.0, 0.0, 0.0, false};
  EXPECT_THROW(spec.feature(1, bad), std::out_of_range);
}

TEST(Policy, RiskScoreExamples) {
  const FeatureSpec spec{{FeatureDescriptor::covariate(0), FeatureDescriptor::covariate(1),
                          FeatureDescriptor::noncompliance(), FeatureDescriptor::current_response(10.0)}};
  const Policy p{vec({0, 0, 0, 1}), 0.0, 3.0, 9.0, spec};
  const Eigen::VectorXd x = vec({5.0, 5.0});
  EXPECT_NEAR(risk_score(p, HistoryTail{x, 0.3, 6.0, 6.0, true}), 3.0, 1e-12);
}

TEST(Policy, NormalizeWeightsExamples) {
  EXPECT_EQ(normalize_weights(vec({2, 0, 0, 0})), vec({1, 0, 0, 0}));
  EXPECT_EQ(normalize_weights(vec({1, 1, 1, 1})), vec({0.5, 0.5, 0.5, 0.5}));
  const Eigen::VectorXd raw = vec({-2, -1, 0, 1});
  const Eigen::VectorXd u = normalize_weights(raw);
  EXPECT_NEAR(u.norm(), 1.0, 1e-15);
  EXPECT_NEAR(u(0) / u(1), 2.0, 1e-14);
  EXPECT_NEAR(u(3) / u(1), -1.0, 1e-14);
  EXPECT_EQ(u(2), 0.0);
  EXPECT_THROW(normalize_weights(Eigen::VectorXd::Zero(4)), std::invalid_argument);
}

TEST(Policy, TiesGoToLongerInterval) {
  Policy p{vec({0, 0, 0, 1}), 0.5, 3.0, 9.0, FeatureSpec::simulation_study()};
  const Eigen::VectorXd x = vec({0, 0});
  EXPECT_EQ(decide(p, HistoryTail{x, 0.5, 6, 6, true}), 9.0);
  EXPECT_EQ(decide(p, HistoryTail{x, std::nextafter(0.5, 1.0), 6, 6, true}), 3.0);
  p.kappa = -std::numeric_limits<double>::infinity();
  EXPECT_EQ(decide(p, HistoryTail{x, -1e300, 6, 6, true}), 3.0);
  p.kappa = std::numeric_limits<double>::infinity();
  EXPECT_EQ(decide(p, HistoryTail{x, 1e300, 6, 6, true}), 9.0);
}

TEST(Policy, PublishedClinicalThresholds) {
  const Policy hp = bench::published_clinical_policy();
  EXPECT_NEAR(hp.alpha.norm(), 1.0, 1e-12);
  // Diabetic, mean age, on time: the boundary sits at 6.8% unhealthy sites.
  const Eigen::VectorXd diabetic = clinical_x(0.0, 1.0);
  const double raw_norm = vec({-0.17, 0.50, 0.22, 0.82}).norm();
  EXPECT_NEAR(risk_score(hp, HistoryTail{diabetic, 0.068, 6, 6, true}) * raw_norm, 1.06, 0.005);
  EXPECT_EQ(decide(hp, HistoryTail{diabetic, 0.070, 6, 6, true}), 3.0);
  EXPECT_EQ(decide(hp, HistoryTail{diabetic, 0.065, 6, 6, true}), 9.0);
  // Not diabetic: the boundary moves to 12.9%.
  const Eigen::VectorXd healthy = clinical_x(0.0, 0.0);
  EXPECT_EQ(decide(hp, HistoryTail{healthy, 0.13, 6, 6, true}), 3.0);
  EXPECT_EQ(decide(hp, HistoryTail{healthy, 0.128, 6, 6, true}), 9.0);
}

TEST(Policy, DecisionsAreScaleInvariant) {
  Rng rng = make_rng(41);
  const FeatureSpec spec = FeatureSpec::simulation_study();
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd raw = rnd::std_normal_vector(rng, 4);
    const double kappa = rnd::std_normal(rng);
    const double c = std::exp(3.0 * rnd::std_normal(rng));
    const Policy a = policy_from_raw_score(raw, kappa, 3.0, 9.0, spec);
    const Policy b = policy_from_raw_score(c * raw, c * kappa, 3.0, 9.0, spec);
    const Eigen::VectorXd x = rnd::std_normal_vector(rng, 2);
    const HistoryTail h{x, rnd::std_normal(rng), 3.0, std::exp(rnd::std_normal(rng) + 1.8), true};
    // Scores exactly at the threshold are measure-zero for continuous draws.
    EXPECT_EQ(decide(a, h), decide(b, h));
  }
}

TEST(Policy, ValidationRejectsBadPolicies) {
  const FeatureSpec spec = FeatureSpec::simulation_study();
  EXPECT_THROW((Policy{vec({1, 0, 0}), 0.0, 3, 9, spec}.validate()), std::invalid_argument);
  EXPECT_THROW((Policy{vec({1, 1, 0, 0}), 0.0, 3, 9, spec}.validate()), std::invalid_argument);
  EXPECT_THROW((Policy{vec({1, 0, 0, 0}), 0.0, 9, 3, spec}.validate()), std::invalid_argument);
  EXPECT_THROW((Policy{vec({1, 0, 0, 0}), std::nan(""), 3, 9, spec}.validate()), std::invalid_argument);
}

TEST(Calibration, CostBracketsAtInfiniteThresholds) {
  const ModelSource src = ModelSource::fixed(bench::study_dgp(0.8));
  Rng rng = make_rng(42);
  for (int trial = 0; trial < 3; ++trial) {
    Policy p = study_policy(rnd::std_normal_vector(rng, 4), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(estimate_cost(src, p, 500, 60.0, 7), 3.0);
    p.kappa = std::numeric_limits<double>::infinity();
    EXPECT_EQ(estimate_cost(src, p, 500, 60.0, 7), 9.0);
  }
}

TEST(Calibration, CostIsMonotoneInThresholdUnderCommonNumbers) {
  const ModelSource src = ModelSource::fixed(bench::study_dgp(1.0));
  const Policy base = study_policy(vec({0.3, 0.3, 0.1, 0.9}), 0.0);
  double prev = 0.0;
  for (double k = -2.0; k <= 2.0; k += 0.25) {
    Policy p = base;
    p.kappa = k;
    const double c = estimate_cost(src, p, 1000, 60.0, 8);
    EXPECT_GE(c, prev - 0.05) << "kappa " << k;
    prev = c;
  }
}

TEST(Calibration, HitsTargetCostOnSingleGroupModel) {
  const ModelSource src = ModelSource::fixed(bench::study_dgp(1.0));
  const FeatureSpec spec = FeatureSpec::simulation_study();
  const ScoreReference ref = simulated_reference(src, spec, 2000, 60.0, 9);
  for (const Eigen::VectorXd& raw : {vec({0.3, 0.3, 0.1, 0.9}), vec({1.0, -0.5, 0.2, 0.3}), vec({-0.2, 0.1, 1, 0.4})}) {
    const Eigen::VectorXd alpha = normalize_weights(raw);
    CalibrationConfig cfg;
    const CalibrationResult r = calibrate_threshold(src, alpha, spec, ref, cfg, 10);
    ASSERT_EQ(r.grid.size(), 10u);
    for (std::size_t k = 1; k < r.smoothed_cost.size(); ++k) EXPECT_LE(r.smoothed_cost[k - 1], r.smoothed_cost[k]);
    const double realized =
        estimate_cost(src, Policy{alpha, r.kappa, 3.0, 9.0, spec}, 20000, 60.0, 11);
    EXPECT_NEAR(realized, 6.0, 0.15) << "alpha " << alpha.transpose();
    EXPECT_FALSE(r.flagged);
  }
}

TEST(Calibration, ThresholdIsStableAcrossSeeds) {
  const ModelSource src = ModelSource::fixed(bench::study_dgp(0.8));
  const FeatureSpec spec = FeatureSpec::simulation_study();
  const ScoreReference ref = simulated_reference(src, spec, 2000, 60.0, 12);
  const Eigen::VectorXd alpha = normalize_weights(vec({0.5, 0.2, -0.3, 0.8}));
  const auto [lo, hi] = ref.range(alpha);
  CalibrationConfig cfg;
  const double k1 = calibrate_threshold(src, alpha, spec, ref, cfg, 13).kappa;
  const double k2 = calibrate_threshold(src, alpha, spec, ref, cfg, 14).kappa;
  EXPECT_LT(std::abs(k1 - k2), 0.05 * (hi - lo));
}

TEST(Calibration, UnreachableTargetIsFlagged) {
  const ModelSource src = ModelSource::fixed(bench::study_dgp(1.0));
  const FeatureSpec spec = FeatureSpec::simulation_study();
  // A training range covering only X1 in [-0.1, 0.1] cannot push the
  // cost anywhere near either bound.
  ScoreReference ref;
  ref.from_training = true;
  ref.features = Eigen::MatrixXd::Zero(2, 4);
  ref.features(0, 0) = -0.1;
  ref.features(1, 0) = 0.1;
  const Eigen::VectorXd alpha = vec({1, 0, 0, 0});
  CalibrationConfig cfg;
  cfg.target = 3.0;
  cfg.n1 = 500;
  const CalibrationResult r = calibrate_threshold(src, alpha, spec, ref, cfg, 16);
  EXPECT_TRUE(r.flagged);
  EXPECT_FALSE(r.warning.empty());
  EXPECT_DOUBLE_EQ(r.kappa, r.grid.front());
  cfg.target = 10.0;
  EXPECT_THROW(calibrate_threshold(src, alpha, spec, ref, cfg, 16), std::invalid_argument);
}

TEST(Calibration, TrainingReferenceUsesFullRange) {
  Rng rng = make_rng(17);
  const auto data = bench::generate_dataset(bench::Allocation::single, 50, rng);
  const FeatureSpec spec = FeatureSpec::simulation_study();
  const ScoreReference ref = reference_from_trajectories(data, spec, true);
  std::size_t rows = 0;
  for (const auto& tr : data) rows += tr.visits.size();
  ASSERT_EQ(static_cast<std::size_t>(ref.features.rows()), rows);
  const Eigen::VectorXd alpha = vec({0, 0, 0, 1});
  double lo = 1e300, hi = -1e300;
  for (const auto& tr : data)
    for (std::size_t t = 0; t < tr.visits.size(); ++t) {
      lo = std::min(lo, tr.response_before(t));
      hi = std::max(hi, tr.response_before(t));
    }
  const auto [a, b] = ref.range(alpha);
  EXPECT_DOUBLE_EQ(a, lo);
  EXPECT_DOUBLE_EQ(b, hi);
}
