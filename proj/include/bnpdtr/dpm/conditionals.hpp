#ifndef BNPDTR_DPM_CONDITIONALS_HPP
#define BNPDTR_DPM_CONDITIONALS_HPP

// Conjugate full-conditional draws used by the Gibbs sweep. Each function is
// self-contained so its output distribution can be checked against the
// closed-form posterior in isolation.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "bnpdtr/stats/densities.hpp"
#include "bnpdtr/stats/linalg.hpp"
#include "bnpdtr/stats/random.hpp"

namespace bnpdtr::dpm {

inline constexpr double kSpdJitter = 1e-8;
inline constexpr int kSpdEscalations = 3;

// Sufficient statistics of a weighted Gaussian regression y ~ N(x'b, v_i):
// sum x x' / v_i and sum x y / v_i.
struct RegressionStats {
  Eigen::MatrixXd xtx;
  Eigen::VectorXd xty;
  double count = 0.0;

  explicit RegressionStats(Eigen::Index d = 0)
      : xtx(Eigen::MatrixXd::Zero(d, d)), xty(Eigen::VectorXd::Zero(d)) {}

  void add(const Eigen::Ref<const Eigen::VectorXd>& x, double y, double var) {
    xtx.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / var);
    xty.noalias() += x * (y / var);
    count += 1.0;
  }

  Eigen::MatrixXd gram() const {
    Eigen::MatrixXd g = xtx.selfadjointView<Eigen::Lower>();
    return g;
  }
};

// Draw from N(P^{-1} b, P^{-1}) with SPD repair of P.
inline Eigen::VectorXd draw_canonical_normal(Rng& rng, const Eigen::MatrixXd& precision,
                                             const Eigen::VectorXd& linear) {
  auto ch = cholesky_with_jitter(symmetrize(precision), kSpdJitter, kSpdEscalations,
                                 "conditional precision");
  Eigen::VectorXd mean = ch.llt.solve(linear);
  Eigen::VectorXd z = rnd::std_normal_vector(rng, mean.size());
  return mean + ch.llt.matrixU().solve(z);
}

// Regression coefficients with prior N(prior_mean, prior_cov) given
// sufficient statistics.
inline Eigen::VectorXd draw_regression_block(Rng& rng, const Eigen::VectorXd& prior_mean,
                                             const Eigen::MatrixXd& prior_precision,
                                             const RegressionStats& stats) {
  Eigen::MatrixXd precision = prior_precision + stats.gram();
  Eigen::VectorXd linear = prior_precision * prior_mean + stats.xty;
  return draw_canonical_normal(rng, precision, linear);
}

// Mean of a Gaussian block: n iid draws from N(mu, cov) with prior
// N(prior_mean, prior_cov) on mu, expressed through precisions.
inline Eigen::VectorXd draw_gaussian_mean(Rng& rng, const Eigen::VectorXd& prior_mean,
                                          const Eigen::MatrixXd& prior_precision,
                                          const Eigen::MatrixXd& data_precision,
                                          const Eigen::VectorXd& data_sum, double n) {
  Eigen::MatrixXd precision = prior_precision + n * data_precision;
  Eigen::VectorXd linear = prior_precision * prior_mean + data_precision * data_sum;
  return draw_canonical_normal(rng, precision, linear);
}

// Covariance with prior InvWishart(df, scale) given the centred scatter matrix.
inline Eigen::MatrixXd draw_covariance(Rng& rng, double prior_df, const Eigen::MatrixXd& prior_scale,
                                       const Eigen::MatrixXd& scatter, double n) {
  Eigen::MatrixXd scale = symmetrize(prior_scale + scatter);
  auto ch = cholesky_with_jitter(scale, kSpdJitter, kSpdEscalations, "inverse-Wishart scale");
  if (ch.jitter > 0.0) scale.diagonal().array() += ch.jitter;
  return rnd::inv_wishart(rng, prior_df + n, scale);
}

// Error variance with prior InvGamma(a, b) given sum of r^2 / lambda over n terms.
inline double draw_error_variance(Rng& rng, double a, double b, double weighted_ss, double n) {
  return rnd::inv_gamma(rng, a + 0.5 * n, b + 0.5 * weighted_ss);
}

// Scale-mixture latent: lambda | r ~ InvGamma((nu+1)/2, (nu + r^2/sigma^2)/2).
inline double draw_scale_latent(Rng& rng, double nu, double residual, double sigma_sq) {
  return rnd::inv_gamma(rng, 0.5 * (nu + 1.0), 0.5 * (nu + residual * residual / sigma_sq));
}

// Stick-breaking variables V_l ~ Beta(1 + n_l, alpha0 + sum_{h>l} n_h),
// l < L; the last stick is fixed at 1 so the weights sum to one.
inline std::vector<double> draw_sticks(Rng& rng, const std::vector<double>& counts, double alpha0) {
  const std::size_t L = counts.size();
  std::vector<double> v(L, 1.0);
  double tail = 0.0;
  for (double c : counts) tail += c;
  for (std::size_t l = 0; l + 1 < L; ++l) {
    tail -= counts[l];
    v[l] = rnd::beta(rng, 1.0 + counts[l], alpha0 + tail);
    // Keep the exported weights strictly inside the simplex.
    v[l] = std::clamp(v[l], 1e-300, 1.0 - 1e-16);
  }
  return v;
}

inline std::vector<double> stick_weights(const std::vector<double>& v) {
  std::vector<double> w(v.size());
  double remaining = 1.0;
  for (std::size_t l = 0; l < v.size(); ++l) {
    if (l + 1 == v.size()) {
      w[l] = remaining;
    } else {
      w[l] = v[l] * remaining;
      remaining *= (1.0 - v[l]);
    }
  }
  return w;
}

// Tobit latent for a response censored to [0, 1]: the observed value when
// interior, otherwise a truncated-normal draw below 0 or above 1.
inline double draw_tobit_latent(Rng& rng, double observed, double mean, double sd) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (observed <= 0.0) return std::min(stats::truncated_normal(rng, mean, sd, -inf, 0.0), 0.0);
  if (observed >= 1.0) return std::max(stats::truncated_normal(rng, mean, sd, 1.0, inf), 1.0);
  return observed;
}

// Albert-Chib probit augmentation: w ~ N(mean, 1) restricted by the indicator.
inline double draw_probit_latent(Rng& rng, bool indicator, double mean) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return indicator ? stats::truncated_normal(rng, mean, 1.0, 0.0, inf)
                   : stats::truncated_normal(rng, mean, 1.0, -inf, 0.0);
}

}  // namespace bnpdtr::dpm

#endif
