#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "bnpdtr/bench/dgp.hpp"
#include "bnpdtr/dpm/gibbs.hpp"
#include "bnpdtr/value/estimate.hpp"

using namespace bnpdtr;
using namespace bnpdtr::dpm;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

struct Moments {
  double mean = 0, var = 0;
  double se(std::size_t n) const { return std::sqrt(var / static_cast<double>(n)); }
};

template <class F>
Moments sample_moments(std::size_t n, F&& draw) {
  double s = 0, ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = draw();
    s += x;
    ss += x * x;
  }
  const double m = s / static_cast<double>(n);
  return {m, ss / static_cast<double>(n) - m * m};
}

// Extended-mode model with p = 1 whose responses hit both bounds and are
// often carried forward.
MixtureModel censoring_model() {
  MixtureModel m;
  m.mode = ModelMode::extended;
  m.delta_coding = DeltaCoding{DeltaTransform::log, 0.0};
  m.weights = {1.0};
  Atom a;
  a.theta0 = vec({0.0, 0.5});
  a.theta1 = vec({1.8, 0.0, 0.0, 0.0, 0.0, 0.0});
  a.theta2 = vec({0.0, 0.2, 1.0, 0.0, 0.0, 0.0});
  a.theta3 = vec({-0.3, 0.0, 0.0, 0.0, 0.0, 0.0});
  m.atoms = {a};
  m.Sigma0 = Eigen::MatrixXd::Identity(2, 2);
  m.Sigma0(1, 1) = 0.2;
  m.sigma1_sq = 0.05;
  m.sigma2_sq = 0.09;
  m.binary_mask = {true};
  m.validate();
  return m;
}

std::vector<Trajectory> simulate(const MixtureModel& m, std::size_t n, std::uint64_t seed) {
  const PreparedModel pm(m);
  Rng rng = make_rng(seed);
  std::vector<Trajectory> out(n);
  for (auto& tr : out) sample_subject_into(tr, pm, ConstantAction{6.0}, 36.0, rng);
  return out;
}

FitOptions study_options(std::size_t iter, std::size_t burn) {
  FitOptions o;
  o.mode = ModelMode::basic;
  o.delta_coding = DeltaCoding{DeltaTransform::centered, 6.0};
  o.n_iter = iter;
  o.n_burnin = burn;
  return o;
}

}  // namespace

TEST(Conditionals, RegressionBlockMatchesConjugatePosterior) {
  Rng rng = make_rng(21);
  RegressionStats st(2);
  Rng data_rng = make_rng(22);
  for (int i = 0; i < 30; ++i) {
    const Eigen::Vector2d x(1.0, rnd::std_normal(data_rng));
    st.add(x, 0.5 + 2.0 * x(1) + 0.7 * rnd::std_normal(data_rng), 0.49);
  }
  const Eigen::Vector2d m0(0.0, 1.0);
  Eigen::Matrix2d p0;
  p0 << 2.0, 0.3, 0.3, 1.0;
  const Eigen::Matrix2d prec = p0 + st.gram();
  const Eigen::Matrix2d cov = prec.inverse();
  const Eigen::Vector2d mean = cov * (p0 * m0 + st.xty);

  const std::size_t n = 40000;
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  Eigen::Matrix2d ss = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd b = draw_regression_block(rng, m0, p0, st);
    s += b;
    ss += b * b.transpose();
  }
  const Eigen::Vector2d m = s / n;
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(m(k), mean(k), 3 * std::sqrt(cov(k, k) / n));
  const Eigen::Matrix2d c = ss / n - m * m.transpose();
  EXPECT_LT(((c - cov).array() / cov.diagonal().maxCoeff()).abs().maxCoeff(), 0.03);
}

TEST(Conditionals, GaussianMeanMatchesConjugatePosterior) {
  Rng rng = make_rng(23);
  const Eigen::Vector2d m0(1.0, -1.0);
  const Eigen::Matrix2d p0 = Eigen::Matrix2d::Identity() * 0.5;
  Eigen::Matrix2d dp;
  dp << 4.0, -1.0, -1.0, 2.0;
  const Eigen::Vector2d sum(3.0, 5.0);
  const double cnt = 4.0;
  const Eigen::Matrix2d cov = (p0 + cnt * dp).inverse();
  const Eigen::Vector2d mean = cov * (p0 * m0 + dp * sum);
  const std::size_t n = 40000;
  Eigen::Vector2d s = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < n; ++i) s += draw_gaussian_mean(rng, m0, p0, dp, sum, cnt);
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(s(k) / n, mean(k), 3 * std::sqrt(cov(k, k) / n));
}

TEST(Conditionals, CovarianceMatchesInverseWishartMean) {
  Rng rng = make_rng(24);
  Eigen::Matrix2d scatter;
  scatter << 3.0, 1.0, 1.0, 2.0;
  const Eigen::Matrix2d prior = Eigen::Matrix2d::Identity();
  const double df = 4.0, cnt = 6.0;
  const Eigen::Matrix2d expected = (prior + scatter) / (df + cnt - 2.0 - 1.0);
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  const int n = 40000;
  for (int i = 0; i < n; ++i) acc += draw_covariance(rng, df, prior, scatter, cnt);
  EXPECT_LT((acc / n - expected).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Conditionals, ErrorVarianceAndScaleLatentMoments) {
  Rng rng = make_rng(25);
  const std::size_t n = 100000;
  // InvGamma(0.1 + 10, 0.1 + 4): mean b / (a - 1)
  const double a = 10.1, b = 4.1;
  const auto ev = sample_moments(n, [&] { return draw_error_variance(rng, 0.1, 0.1, 8.0, 20.0); });
  EXPECT_NEAR(ev.mean, b / (a - 1.0), 3 * ev.se(n));
  // lambda | r: InvGamma(3, (5 + 4) / 2) for nu = 5, r = 1, sigma^2 = 0.25
  const auto sl = sample_moments(n, [&] { return draw_scale_latent(rng, 5.0, 1.0, 0.25); });
  EXPECT_NEAR(sl.mean, 4.5 / 2.0, 3 * sl.se(n));
}

TEST(Conditionals, SticksFollowTheirBetaConditionals) {
  Rng rng = make_rng(26);
  const std::vector<double> counts{5.0, 0.0, 3.0, 2.0};
  const double alpha0 = 1.0;
  const std::size_t n = 50000;
  std::vector<double> mean(4, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = draw_sticks(rng, counts, alpha0);
    ASSERT_DOUBLE_EQ(v.back(), 1.0);
    for (std::size_t l = 0; l < 4; ++l) mean[l] += v[l] / n;
  }
  // Beta(1 + n_l, alpha0 + sum_{h>l} n_h)
  const double a[3] = {6.0, 1.0, 4.0}, b[3] = {6.0, 6.0, 3.0};
  for (int l = 0; l < 3; ++l) {
    const double m = a[l] / (a[l] + b[l]);
    const double var = a[l] * b[l] / ((a[l] + b[l]) * (a[l] + b[l]) * (a[l] + b[l] + 1.0));
    EXPECT_NEAR(mean[l], m, 3 * std::sqrt(var / n));
  }
}

TEST(Conditionals, StickWeightsExample) {
  const auto w = stick_weights({0.5, 0.5, 1.0});
  ASSERT_EQ(w.size(), 3u);
  EXPECT_DOUBLE_EQ(w[0], 0.5);
  EXPECT_DOUBLE_EQ(w[1], 0.25);
  EXPECT_DOUBLE_EQ(w[2], 0.25);
  const auto one = stick_weights({1.0});
  EXPECT_DOUBLE_EQ(one[0], 1.0);
}

TEST(Conditionals, TobitAndProbitLatents) {
  Rng rng = make_rng(27);
  const std::size_t n = 100000;
  // observed 0: Z ~ N(0.2, 0.5^2) restricted below 0
  const double mu = 0.2, sd = 0.5, a0 = (0.0 - mu) / sd;
  const auto lo = sample_moments(n, [&] {
    const double z = draw_tobit_latent(rng, 0.0, mu, sd);
    EXPECT_LE(z, 0.0);
    return z;
  });
  EXPECT_NEAR(lo.mean, mu - sd * stats::norm_pdf(a0) / stats::norm_cdf(a0), 3 * lo.se(n));
  const auto hi = sample_moments(n, [&] {
    const double z = draw_tobit_latent(rng, 1.0, mu, sd);
    EXPECT_GE(z, 1.0);
    return z;
  });
  const double b0 = (1.0 - mu) / sd;
  EXPECT_NEAR(hi.mean, mu + sd * stats::norm_pdf(b0) / (1.0 - stats::norm_cdf(b0)), 3 * hi.se(n));
  EXPECT_DOUBLE_EQ(draw_tobit_latent(rng, 0.4, mu, sd), 0.4);

  const double m = -0.4;
  const auto w = sample_moments(n, [&] { return draw_probit_latent(rng, true, m); });
  EXPECT_NEAR(w.mean, m + stats::norm_pdf(m) / stats::norm_cdf(m), 3 * w.se(n));
}

TEST(Likelihood, BaselineOnlySubject) {
  MixtureModel m = censoring_model();
  m.mode = ModelMode::basic;
  m.atoms[0].theta3.reset();
  m.binary_mask.clear();
  Trajectory tr;
  tr.X = vec({1.0});
  tr.Y0 = 0.3;
  const auto s = SharedParams::from_model(m);
  // diag(1, 0.2), mean (0, 0.5): -0.5 (1 + 0.04 / 0.2 + log 0.2) - log(2 pi)
  const double expected = -0.5 * (1.0 + 0.04 / 0.2 + std::log(0.2)) - std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(log_subject_likelihood(tr, m.atoms[0], s), expected, 1e-12);
}

TEST(Likelihood, TwoVisitBasicSubjectByHand) {
  MixtureModel m = censoring_model();
  m.mode = ModelMode::basic;
  m.atoms[0].theta3.reset();
  m.binary_mask.clear();
  m.delta_coding = DeltaCoding{DeltaTransform::raw, 0.0};
  Trajectory tr;
  tr.X = vec({0.0});
  tr.Y0 = 0.5;
  tr.visits = {{6.0, 5.0, 0.8}, {6.0, 7.0, 0.9}};
  const auto s = SharedParams::from_model(m);
  auto lnorm = [](double x, double mu, double v) {
    return -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * (x - mu) * (x - mu) / v;
  };
  // theta1 has only the intercept 1.8; theta2 = 0.2 X + Y_prev
  double expected = -0.5 * (0.0 + std::log(0.2)) - std::log(2.0 * std::numbers::pi);
  expected += lnorm(std::log(5.0), 1.8, 0.05) + lnorm(0.8, 0.5, 0.09);
  expected += lnorm(std::log(7.0), 1.8, 0.05) + lnorm(0.9, 0.8, 0.09);
  EXPECT_NEAR(log_subject_likelihood(tr, m.atoms[0], s), expected, 1e-12);
}

TEST(Likelihood, CarryForwardVisitMixesPointMassAndDensity) {
  const MixtureModel m = censoring_model();
  Trajectory tr;
  tr.X = vec({1.0});
  tr.Y0 = 0.5;
  tr.visits = {{6.0, 6.0, 0.5}};
  const auto s = SharedParams::from_model(m);
  const Eigen::VectorXd base = vec({0.4, 0.5});
  const double pc = stats::norm_cdf(-0.3);
  // t_5 density of the response around 0.2 + 0.5 = 0.7 with scale 0.3
  const double z = (0.5 - 0.7) / 0.3;
  const double t5 = std::exp(std::lgamma(3.0) - std::lgamma(2.5)) / std::sqrt(5.0 * std::numbers::pi) / 0.3 *
                    std::pow(1.0 + z * z / 5.0, -3.0);
  const double z1 = (std::log(6.0) - 1.8) / std::sqrt(0.05);
  const double t1 = std::exp(std::lgamma(3.0) - std::lgamma(2.5)) / std::sqrt(5.0 * std::numbers::pi) /
                    std::sqrt(0.05) * std::pow(1.0 + z1 * z1 / 5.0, -3.0);
  const double base_ll = -0.5 * (0.16 + std::log(0.2)) - std::log(2.0 * std::numbers::pi);
  const double expected = base_ll + std::log(t1) + std::log(pc + (1.0 - pc) * t5);
  EXPECT_NEAR(log_subject_likelihood(tr, m.atoms[0], s, &base), expected, 1e-10);

  tr.visits[0].Y = 0.6;
  const double moved = -0.5 * (0.16 + std::log(0.2)) - std::log(2.0 * std::numbers::pi) + std::log(t1) +
                       std::log(1.0 - pc) + stats::t_logpdf(0.6, 0.7, 0.3, 5.0);
  EXPECT_NEAR(log_subject_likelihood(tr, m.atoms[0], s, &base), moved, 1e-10);
}

TEST(Likelihood, MixtureLikelihoodIsLabelPermutationInvariant) {
  MixtureModel m = bench::study_dgp(0.7);
  Rng rng = make_rng(28);
  const auto data = bench::generate_dataset(bench::Allocation::mixture, 50, rng);
  auto mixture_ll = [&](const MixtureModel& mm) {
    const auto s = SharedParams::from_model(mm);
    double total = 0.0;
    for (const auto& tr : data) {
      std::vector<double> terms;
      for (std::size_t l = 0; l < mm.L(); ++l)
        terms.push_back(std::log(mm.weights[l]) + log_subject_likelihood(tr, mm.atoms[l], s));
      const double mx = *std::max_element(terms.begin(), terms.end());
      double acc = 0.0;
      for (double t : terms) acc += std::exp(t - mx);
      total += mx + std::log(acc);
    }
    return total;
  };
  MixtureModel swapped = m;
  std::swap(swapped.atoms[0], swapped.atoms[1]);
  std::swap(swapped.weights[0], swapped.weights[1]);
  const double a = mixture_ll(m), b = mixture_ll(swapped);
  EXPECT_TRUE(std::isfinite(a));
  EXPECT_NEAR(a, b, 1e-9 * std::abs(a));
}

TEST(Gibbs, StateStaysValidEverySweep) {
  Rng data_rng = make_rng(29);
  const auto data = bench::generate_dataset(bench::Allocation::mixture, 150, data_rng);
  HyperParams h = HyperParams::defaults_for(ModelMode::basic);
  Rng rng = make_rng(30);
  GibbsSampler g(data, h, study_options(40, 10), rng);
  for (int it = 0; it < 40; ++it) {
    g.sweep();
    const auto w = g.state().weights();
    ASSERT_EQ(w.size(), h.L);
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
    for (double x : w) EXPECT_GE(x, 0.0);
    EXPECT_GT(g.state().sigma1_sq, 0.0);
    EXPECT_GT(g.state().sigma2_sq, 0.0);
    EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(g.state().Sigma0).info(), Eigen::Success);
    for (std::size_t a : g.state().assignment) EXPECT_LT(a, h.L);
    EXPECT_TRUE(std::isfinite(g.log_likelihood()));
  }
  EXPECT_NO_THROW(g.export_draw().validate());
}

TEST(Gibbs, SameSeedGivesIdenticalChain) {
  Rng data_rng = make_rng(31);
  const auto data = bench::generate_dataset(bench::Allocation::single, 60, data_rng);
  const HyperParams h = HyperParams::defaults_for(ModelMode::basic);
  Rng r1 = make_rng(5), r2 = make_rng(5);
  const auto c1 = fit(data, h, study_options(30, 10), r1, 5);
  const auto c2 = fit(data, h, study_options(30, 10), r2, 5);
  ASSERT_EQ(c1.size(), 20u);
  ASSERT_EQ(c1.size(), c2.size());
  for (std::size_t k = 0; k < c1.size(); ++k) {
    EXPECT_EQ(c1.log_likelihood[k], c2.log_likelihood[k]);
    EXPECT_EQ(c1.draws[k].atoms[0].theta2, c2.draws[k].atoms[0].theta2);
  }
}

TEST(Gibbs, ThinningAndArgumentChecks) {
  Rng data_rng = make_rng(32);
  const auto data = bench::generate_dataset(bench::Allocation::single, 20, data_rng);
  HyperParams h = HyperParams::defaults_for(ModelMode::basic);
  h.L = 2;
  FitOptions o = study_options(25, 5);
  o.thin = 4;
  Rng rng = make_rng(1);
  EXPECT_EQ(fit(data, h, o, rng).size(), 5u);
  o.n_burnin = 25;
  EXPECT_THROW(fit(data, h, o, rng), std::invalid_argument);
  EXPECT_THROW(fit(std::vector<Trajectory>{}, h, study_options(5, 1), rng), std::invalid_argument);
  h.alpha0 = 0.0;
  EXPECT_THROW(fit(data, h, study_options(5, 1), rng), std::invalid_argument);
}

// With one atom the regression blocks are ordinary Bayesian linear models,
// so with weak priors the posterior centres on least squares.
TEST(Gibbs, SingleAtomRecoversLeastSquares) {
  Rng data_rng = make_rng(33);
  const auto data = bench::generate_dataset(bench::Allocation::single, 400, data_rng);
  HyperParams h = HyperParams::defaults_for(ModelMode::basic);
  h.L = 1;
  Rng rng = make_rng(34);
  const auto chain = fit(data, h, study_options(500, 200), rng);

  const std::size_t d = regression_dim(2);
  const DeltaCoding coding{DeltaTransform::centered, 6.0};
  std::vector<Eigen::VectorXd> rows1, rows2;
  std::vector<double> out1, out2;
  for (const auto& tr : data) {
    double y_prev = tr.Y0;
    for (const auto& v : tr.visits) {
      Eigen::VectorXd r(d);
      regression_row(r, tr.X, y_prev, std::log(v.A));
      rows1.push_back(r);
      out1.push_back(std::log(v.delta));
      regression_row(r, tr.X, y_prev, coding.apply(v.delta));
      rows2.push_back(r);
      out2.push_back(v.Y);
      y_prev = v.Y;
    }
  }
  auto ols = [&](const std::vector<Eigen::VectorXd>& rows, const std::vector<double>& y) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    Eigen::VectorXd yy(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      X.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
      yy(static_cast<Eigen::Index>(i)) = y[i];
    }
    return Eigen::VectorXd(X.colPivHouseholderQr().solve(yy));
  };
  const Eigen::VectorXd b1 = ols(rows1, out1), b2 = ols(rows2, out2);

  for (int block = 0; block < 2; ++block) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    Eigen::VectorXd ss = s;
    for (const auto& m : chain.draws) {
      const Eigen::VectorXd& t = block == 0 ? m.atoms[0].theta1 : m.atoms[0].theta2;
      s += t;
      ss += t.cwiseProduct(t);
    }
    const double n = static_cast<double>(chain.size());
    const Eigen::VectorXd mean = s / n;
    const Eigen::VectorXd sd = (ss / n - mean.cwiseProduct(mean)).cwiseSqrt();
    const Eigen::VectorXd& ref = block == 0 ? b1 : b2;
    for (Eigen::Index k = 0; k < mean.size(); ++k)
      EXPECT_LT(std::abs(mean(k) - ref(k)), 2.0 * sd(k)) << "block " << block + 1 << " coefficient " << k;
  }
  // Generating values of the progression block.
  const MixtureModel truth = bench::study_dgp(1.0);
  double mean_y = 0.0;
  for (const auto& m : chain.draws) mean_y += m.atoms[0].theta2(3) / chain.size();
  EXPECT_NEAR(mean_y, truth.atoms[0].theta2(3), 0.05);
}

TEST(Gibbs, ExtendedLatentsRespectCensoring) {
  const auto data = simulate(censoring_model(), 120, 35);
  std::size_t zeros = 0, ones = 0, repeats = 0;
  for (const auto& tr : data)
    for (std::size_t t = 0; t < tr.visits.size(); ++t) {
      zeros += tr.visits[t].Y <= 0.0;
      ones += tr.visits[t].Y >= 1.0;
      repeats += tr.visits[t].Y == tr.response_before(t);
    }
  ASSERT_GT(zeros, 10u);
  ASSERT_GT(ones, 10u);
  ASSERT_GT(repeats, 10u);

  HyperParams h = HyperParams::defaults_for(ModelMode::extended);
  h.L = 3;
  FitOptions o;
  o.mode = ModelMode::extended;
  o.delta_coding = DeltaCoding::for_mode(ModelMode::extended);
  o.binary_mask = {true};
  o.n_iter = 20;
  o.n_burnin = 5;
  Rng rng = make_rng(36);
  GibbsSampler g(data, h, o, rng);
  for (int it = 0; it < 15; ++it) {
    g.sweep();
    for (const auto& s : g.subjects()) {
      EXPECT_EQ(s.base(0) > 0.0, s.x(0) > 0.5);
      if (s.y0 <= 0.0) EXPECT_LE(s.base(1), 0.0);
      if (s.y0 >= 1.0) EXPECT_GE(s.base(1), 1.0);
      if (s.y0 > 0.0 && s.y0 < 1.0) EXPECT_EQ(s.base(1), s.y0);
      for (Eigen::Index t = 0; t < s.visits(); ++t) {
        const auto tu = static_cast<std::size_t>(t);
        if (s.carry[tu]) EXPECT_TRUE(s.repeat[tu]);
        EXPECT_EQ(s.probit_latent(t) > 0.0, s.carry[tu] != 0);
        if (s.carry[tu]) continue;
        if (s.y(t) <= 0.0) EXPECT_LE(s.y_latent(t), 0.0);
        else if (s.y(t) >= 1.0) EXPECT_GE(s.y_latent(t), 1.0);
        else EXPECT_EQ(s.y_latent(t), s.y(t));
        EXPECT_GT(s.lambda1(t), 0.0);
        EXPECT_GT(s.lambda2(t), 0.0);
      }
    }
  }
  const MixtureModel draw = g.export_draw();
  EXPECT_NO_THROW(draw.validate());
  EXPECT_TRUE(draw.atoms[0].theta3.has_value());
  EXPECT_EQ(draw.binary_mask, std::vector<bool>{true});
}

TEST(Gibbs, RejectsMalformedData) {
  const HyperParams h = HyperParams::defaults_for(ModelMode::basic);
  Rng rng = make_rng(1);
  Trajectory tr;
  tr.X = vec({0.0, 1.0});
  tr.Y0 = 0.0;
  EXPECT_THROW(GibbsSampler(std::vector<Trajectory>{tr}, h, study_options(5, 1), rng), std::invalid_argument);
  tr.visits = {{0.0, 6.0, 0.1}};
  EXPECT_THROW(GibbsSampler(std::vector<Trajectory>{tr}, h, study_options(5, 1), rng), std::invalid_argument);
  FitOptions ext = study_options(5, 1);
  ext.mode = ModelMode::extended;
  tr.visits = {{6.0, 6.0, 1.5}};
  EXPECT_THROW(GibbsSampler(std::vector<Trajectory>{tr}, h, ext, rng), std::invalid_argument);
}

// Fitting the DP mixture to data from the true model should recover the
// value of the constant six-month rule.
TEST(Gibbs, PosteriorValueContractsToTruth) {
  Rng data_rng = make_rng(37);
  const auto data = bench::generate_dataset(bench::Allocation::single, 1000, data_rng);
  HyperParams h = HyperParams::defaults_for(ModelMode::basic);
  h.L = 5;
  Rng rng = make_rng(38);
  const auto chain = fit(data, h, study_options(600, 300), rng);
  const UtilitySpec u{UtilityKind::average, bench::kStudyHorizon};
  const auto post = estimate_value(ModelSource::posterior(chain), ConstantAction{6.0}, u, 40000, 39);
  const auto truth = estimate_value(ModelSource::fixed(bench::study_dgp(1.0)), ConstantAction{6.0}, u, 200000, 40);
  EXPECT_NEAR(post.value, truth.value, 0.05);
}
