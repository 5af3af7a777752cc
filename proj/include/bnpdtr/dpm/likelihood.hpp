#ifndef BNPDTR_DPM_LIKELIHOOD_HPP
#define BNPDTR_DPM_LIKELIHOOD_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bnpdtr/core/design.hpp"
#include "bnpdtr/core/types.hpp"
#include "bnpdtr/stats/densities.hpp"
#include "bnpdtr/stats/linalg.hpp"

namespace bnpdtr::dpm {

// Parameters shared by every mixture component.
struct SharedParams {
  ModelMode mode = ModelMode::basic;
  DeltaCoding delta_coding{};
  Eigen::MatrixXd Sigma0;
  double sigma1_sq = 1.0;
  double sigma2_sq = 1.0;
  double nu1 = 5.0;
  double nu2 = 5.0;

  static SharedParams from_model(const MixtureModel& m) {
    return SharedParams{m.mode, m.delta_coding, m.Sigma0, m.sigma1_sq, m.sigma2_sq, m.nu1, m.nu2};
  }
};

// Gaussian log density with a precomputed Cholesky factor of the covariance.
inline double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                         const Eigen::LLT<Eigen::MatrixXd>& cov_llt) {
  Eigen::VectorXd r = cov_llt.matrixL().solve(x - mean);
  return -0.5 * (r.squaredNorm() + log_det_from_llt(cov_llt)) -
         static_cast<double>(x.size()) * stats::kLogSqrt2Pi;
}

// Censored-response density phi*: point probabilities at the bounds 0 and 1,
// the ordinary density inside. Scale mixing is integrated out when df > 0
// (Student-t), otherwise the latent response is Gaussian.
inline double tobit_logpdf(double y, double mean, double sd, double df) {
  const bool t = df > 0.0;
  if (y <= 0.0)
    return t ? stats::t_log_cdf(0.0, mean, sd, df) : stats::norm_log_cdf((0.0 - mean) / sd);
  if (y >= 1.0)
    return t ? stats::t_log_ccdf(1.0, mean, sd, df) : stats::norm_log_cdf((mean - 1.0) / sd);
  return t ? stats::t_logpdf(y, mean, sd, df)
           : stats::norm_logpdf(y, mean, sd * sd);
}

// log f(y | y_prev) = log[p 1{y == y_prev} + (1 - p) phi*(y)].
inline double carry_forward_logpdf(double y, double y_prev, double prob_carry, double log_phi_star) {
  if (y == y_prev) {
    if (prob_carry >= 1.0) return 0.0;
    const double cont = std::log1p(-prob_carry) + log_phi_star;
    if (prob_carry <= 0.0) return cont;
    const double point = std::log(prob_carry);
    const double mx = std::max(point, cont);
    return mx + std::log(std::exp(point - mx) + std::exp(cont - mx));
  }
  if (prob_carry >= 1.0) return -std::numeric_limits<double>::infinity();
  return std::log1p(-prob_carry) + log_phi_star;
}

// Contribution of the follow-up visits, the baseline excluded.
inline double log_visits_likelihood(const Trajectory& traj, const Atom& atom, const SharedParams& s) {
  const bool extended = s.mode == ModelMode::extended;
  const double sd1 = std::sqrt(s.sigma1_sq), sd2 = std::sqrt(s.sigma2_sq);
  double total = 0.0;
  double y_prev = traj.Y0;
  for (const VisitRecord& v : traj.visits) {
    const double log_a = std::log(v.A);
    const double log_d = std::log(v.delta);
    const double m1 = regression_dot(atom.theta1, traj.X, y_prev, log_a);
    const double sc = s.delta_coding.apply(v.delta);
    const double m2 = regression_dot(atom.theta2, traj.X, y_prev, sc);
    if (!extended) {
      total += stats::norm_logpdf(log_d, m1, s.sigma1_sq) + stats::norm_logpdf(v.Y, m2, s.sigma2_sq);
    } else {
      total += stats::t_logpdf(log_d, m1, sd1, s.nu1);
      const double pc = stats::norm_cdf(regression_dot(*atom.theta3, traj.X, y_prev, sc));
      total += carry_forward_logpdf(v.Y, y_prev, pc, tobit_logpdf(v.Y, m2, sd2, s.nu2));
    }
    y_prev = v.Y;
  }
  return total;
}

// Full subject log-likelihood under one atom. The baseline term is the
// Gaussian density of `baseline` (the latent (X*, Y0*) in extended mode);
// when omitted, the observed (X, Y0) is used.
inline double log_subject_likelihood(const Trajectory& traj, const Atom& atom, const SharedParams& s,
                                     const Eigen::VectorXd* baseline = nullptr) {
  const Eigen::Index p = traj.X.size();
  if (atom.theta0.size() != p + 1 || atom.theta1.size() != static_cast<Eigen::Index>(regression_dim(traj.p())) ||
      s.Sigma0.rows() != p + 1)
    throw std::invalid_argument("log_subject_likelihood: non-conformable dimensions");
  if (s.mode == ModelMode::extended && !atom.theta3)
    throw std::invalid_argument("log_subject_likelihood: extended mode requires theta3");
  Eigen::VectorXd b(p + 1);
  if (baseline) {
    b = *baseline;
  } else {
    b.head(p) = traj.X;
    b(p) = traj.Y0;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(s.Sigma0);
  if (llt.info() != Eigen::Success) throw NumericalError("log_subject_likelihood: Sigma0 not SPD");
  const double total = mvn_logpdf(b, atom.theta0, llt) + log_visits_likelihood(traj, atom, s);
  if (std::isnan(total)) throw NumericalError("log_subject_likelihood: NaN");
  return total;
}

}  // namespace bnpdtr::dpm

#endif
