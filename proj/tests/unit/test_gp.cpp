#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "bnpdtr/bench/dgp.hpp"
#include "bnpdtr/gp/search.hpp"

using namespace bnpdtr;
using namespace bnpdtr::gp;

namespace {

Eigen::MatrixXd circle_points(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return random_unit_vectors(rng, n, 2);
}

}  // namespace

TEST(Ccd, CountsAndNorms) {
  const auto d1 = ccd_design(1);
  ASSERT_EQ(d1.size(), 4u);
  int plus = 0;
  for (const auto& a : d1) {
    EXPECT_DOUBLE_EQ(std::abs(a(0)), 1.0);
    plus += a(0) > 0;
  }
  EXPECT_EQ(plus, 2);
  const auto d4 = ccd_design(4);
  EXPECT_EQ(d4.size(), 624u);
  for (const auto& a : d4) EXPECT_NEAR(a.norm(), 1.0, 1e-12);
  EXPECT_EQ(SearchConfig{}.M1(), 624u);
}

TEST(ExpectedGain, ClosedFormValues) {
  // Oracle values evaluated with 30-digit arithmetic.
  EXPECT_NEAR(expected_gain(0.0, 1.0, 0.0), 0.398942280401432678, 1e-12);
  EXPECT_NEAR(expected_gain(1.0, 1.0, 0.0), 1.08331547058768630, 1e-12);
  EXPECT_EQ(expected_gain(0.0, 0.0, 0.0), 0.0);
  EXPECT_NEAR(expected_gain(-1.0, 2.0, 0.0), 0.395593114802612059, 1e-12);
  EXPECT_NEAR(expected_gain(2.5, 0.5, 0.5), 2.00000357262921620, 1e-12);
  EXPECT_EQ(expected_gain(3.0, 0.0, 1.0), 2.0);
  EXPECT_EQ(expected_gain(-3.0, 0.0, 1.0), 0.0);
}

TEST(ExpectedGain, NonNegativeAndVanishesWithCertainty) {
  Rng rng = make_rng(51);
  for (int i = 0; i < 10000; ++i) {
    const double m = 5.0 * rnd::std_normal(rng), s = std::abs(3.0 * rnd::std_normal(rng));
    EXPECT_GE(expected_gain(m, s, 5.0 * rnd::std_normal(rng)), 0.0);
  }
  EXPECT_LT(expected_gain(-0.1, 1e-6, 0.0), 1e-100);
  EXPECT_LT(expected_gain(0.0, 1e-9, 0.0), 1e-9);
}

TEST(Surrogate, MatchesDirectSolveAndInterpolates) {
  const Eigen::MatrixXd P = circle_points(20, 52);
  const Eigen::VectorXd v = P.col(0);
  const Surrogate s = fit_surrogate(P, v);
  ASSERT_EQ(s.size(), 20u);

  // Direct oracle at the fitted phi.
  const double r = s.r();
  const Eigen::Index n = P.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k) {
      const double d = (s.phi().array() * (P.row(i) - P.row(k)).transpose().array().square()).sum();
      K(i, k) = r * std::exp(-d) + (i == k ? 1.0 - r + s.jitter() : 0.0);
    }
  const double mu = v.mean();
  const double sd_v = std::sqrt((v.array() - mu).square().sum() / (n - 1.0));
  EXPECT_NEAR(s.mu(), mu, 1e-14);
  EXPECT_NEAR(s.sigma_sq(), sd_v * sd_v, 1e-14);
  const Eigen::VectorXd w = K.ldlt().solve((v.array() - mu).matrix());
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd c(n);
    const Eigen::VectorXd a = P.row(i).transpose();
    for (Eigen::Index k = 0; k < n; ++k) c(k) = s.cross_correlation(a, k);
    const Prediction pr = s.predict(a);
    EXPECT_NEAR(pr.mean, mu + c.dot(w), 1e-8);
    EXPECT_NEAR(pr.mean, v(i), 3.0 * std::sqrt(1.0 - r) * sd_v);
    EXPECT_GE(pr.sd, 0.0);
  }
  Eigen::VectorXd m, sd;
  s.predict_batch(P, m, sd);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Prediction pr = s.predict(P.row(i).transpose());
    EXPECT_NEAR(m(i), pr.mean, 1e-10);
    EXPECT_NEAR(sd(i), pr.sd, 1e-8);
  }
}

TEST(Surrogate, RevertsToPriorFarFromData) {
  Eigen::MatrixXd P(3, 2);
  P << 1.0, 0.0, 0.995, 0.0998749, 0.995, -0.0998749;
  Eigen::VectorXd v(3);
  v << 1.0, 2.0, 4.0;
  const Surrogate s(P, v, Eigen::Vector2d(30.0, 30.0));
  const Prediction far = s.predict(Eigen::Vector2d(-1.0, 0.0));
  EXPECT_NEAR(far.mean, s.mu(), 1e-12);
  EXPECT_NEAR(far.sd, std::sqrt(s.sigma_sq()), 1e-12);
  EXPECT_NEAR(s.mu(), 7.0 / 3.0, 1e-14);
}

TEST(Surrogate, DuplicatePointsAndDegenerateValues) {
  Eigen::MatrixXd P(3, 2);
  P << 1.0, 0.0, 1.0, 0.0, 0.0, 1.0;
  Eigen::VectorXd v(3);
  v << 0.5, 0.7, -0.1;
  const Surrogate dup = fit_surrogate(P, v);
  EXPECT_NEAR(dup.predict(Eigen::Vector2d(1.0, 0.0)).mean, 0.6, 0.1);

  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(3, -0.4);
  const Surrogate f = fit_surrogate(P, flat);
  EXPECT_DOUBLE_EQ(f.sigma_sq(), Surrogate::variance_floor(-0.4));
  const Prediction pr = f.predict(Eigen::Vector2d(0.6, 0.8));
  EXPECT_NEAR(pr.mean, -0.4, 1e-9);
  EXPECT_TRUE(std::isfinite(expected_gain(pr.mean, pr.sd, -0.4)));

  EXPECT_THROW(fit_surrogate(P.topRows(1), v.head(1)), std::invalid_argument);
  EXPECT_THROW(Surrogate(P, v, Eigen::Vector2d(-1.0, 1.0)), std::invalid_argument);
}

TEST(Surrogate, CoordinateFlipGivesMirroredPredictions) {
  const Eigen::MatrixXd P = circle_points(15, 53);
  Eigen::VectorXd v(P.rows());
  for (Eigen::Index i = 0; i < P.rows(); ++i) v(i) = std::sin(3.0 * P(i, 0)) + P(i, 1);
  Eigen::MatrixXd F = P;
  F.col(0) *= -1.0;
  const Surrogate a(P, v, Eigen::Vector2d(2.0, 0.5)), b(F, v, Eigen::Vector2d(2.0, 0.5));
  const Eigen::Vector2d x(0.28, 0.96);
  EXPECT_NEAR(a.predict(x).mean, b.predict(Eigen::Vector2d(-x(0), x(1))).mean, 1e-12);
}

// Decisions are unchanged when a feature and its weight both change sign.
TEST(Search, SignSymmetryIsDecisionEquivalent) {
  const ModelSource src = ModelSource::fixed(bench::study_dgp(0.8));
  const auto cohort = simulate_cohort(src, ConstantAction{6.0}, 200, 60.0, 54);
  FeatureSpec flipped = FeatureSpec::simulation_study();
  flipped.features[0] = FeatureDescriptor::covariate_scaled(0, -1.0);
  const Eigen::Vector4d alpha = Eigen::Vector4d(0.4, -0.2, 0.3, 0.8).normalized();
  Eigen::Vector4d alpha_f = alpha;
  alpha_f(0) *= -1.0;
  const Policy p{alpha, 0.3, 3, 9, FeatureSpec::simulation_study()};
  const Policy q{alpha_f, 0.3, 3, 9, flipped};
  for (const auto& tr : cohort)
    for (std::size_t t = 0; t < tr.visits.size(); ++t) {
      const bool prev = t > 0;
      const HistoryTail h{tr.X, tr.response_before(t), prev ? tr.visits[t - 1].A : 0.0,
                          prev ? tr.visits[t - 1].delta : 0.0, prev};
      ASSERT_EQ(decide(p, h), decide(q, h));
    }
  const auto ep = estimate_value(src, p, UtilitySpec{UtilityKind::average, 60}, 3000, 55);
  const auto eq = estimate_value(src, q, UtilitySpec{UtilityKind::average, 60}, 3000, 55);
  EXPECT_EQ(ep.value, eq.value);
}

TEST(Search, RecoversToyOptimum) {
  const Objective toy = [](const Eigen::VectorXd& a, std::uint64_t) {
    Evaluation e;
    e.value = -(a - Eigen::VectorXd::Unit(a.size(), 0)).squaredNorm();
    e.cost = 6.0;
    return e;
  };
  SearchConfig cfg;
  cfg.M2 = 50;
  Rng rng = make_rng(56);
  const SearchResult r = search(toy, cfg, rng);
  ASSERT_EQ(r.trace.size(), 624u + 50u + 1u);
  for (const auto& row : r.trace) EXPECT_NEAR(row.alpha.norm(), 1.0, 1e-10);
  EXPECT_EQ(r.trace.back().stage, Stage::final);
  const double angle = std::acos(std::clamp(r.alpha(0), -1.0, 1.0)) * 180.0 / std::numbers::pi;
  EXPECT_LT(angle, 15.0);
  EXPECT_NEAR(r.final_eval.value, r.predicted_value, 0.05);

  std::ostringstream os;
  write_trace_csv(os, r.trace);
  const std::string csv = os.str();
  EXPECT_EQ(csv.rfind("step,alpha_1,alpha_2,alpha_3,alpha_4,kappa,value,se,cost,stage", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), r.trace.size() + 1);
}

TEST(Search, IsDeterministicGivenSeed) {
  const Objective toy = [](const Eigen::VectorXd& a, std::uint64_t seed) {
    Evaluation e;
    Rng rng = make_rng(seed);
    e.value = a(1) - a(0) * a(0) + 0.01 * rnd::std_normal(rng);
    return e;
  };
  SearchConfig cfg;
  cfg.q = 2;
  cfg.M2 = 10;
  cfg.M3 = 3000;
  cfg.threads = 2;
  Rng r1 = make_rng(57), r2 = make_rng(57);
  const SearchResult a = search(toy, cfg, r1);
  cfg.threads = 1;
  const SearchResult b = search(toy, cfg, r2);
  EXPECT_EQ(a.alpha, b.alpha);
  EXPECT_EQ(a.predicted_value, b.predicted_value);
  ASSERT_EQ(a.trace.size(), 24u + 10u + 1u);
  EXPECT_GT(a.alpha(1), 0.9);
}
