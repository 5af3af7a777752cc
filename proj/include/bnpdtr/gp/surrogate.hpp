#ifndef BNPDTR_GP_SURROGATE_HPP
#define BNPDTR_GP_SURROGATE_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "bnpdtr/stats/densities.hpp"
#include "bnpdtr/stats/linalg.hpp"
#include "bnpdtr/stats/random.hpp"

namespace bnpdtr::gp {

inline constexpr double kDefaultNuggetMass = 0.99;
inline constexpr double kJitterStart = 1e-10;
inline constexpr int kJitterEscalations = 4;  // up to 1e-6

// All points of {-2, -1, 0, 1, 2}^q except the origin, scaled to unit norm.
// Points that coincide after scaling are kept.
inline std::vector<Eigen::VectorXd> ccd_design(std::size_t q) {
  if (q < 1) throw std::invalid_argument("ccd_design: q must be >= 1");
  std::size_t total = 1;
  for (std::size_t j = 0; j < q; ++j) total *= 5;
  std::vector<Eigen::VectorXd> out;
  out.reserve(total - 1);
  Eigen::VectorXd v(static_cast<Eigen::Index>(q));
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t j = 0; j < q; ++j, c /= 5) v(static_cast<Eigen::Index>(j)) = static_cast<double>(c % 5) - 2.0;
    if (v.squaredNorm() == 0.0) continue;
    out.push_back(v.normalized());
  }
  return out;
}

inline Eigen::VectorXd random_unit_vector(Rng& rng, std::size_t q) {
  for (;;) {
    Eigen::VectorXd v = rnd::std_normal_vector(rng, static_cast<Eigen::Index>(q));
    const double n = v.norm();
    if (n > 1e-300) return v / n;
  }
}

inline Eigen::MatrixXd random_unit_vectors(Rng& rng, std::size_t n, std::size_t q) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
  for (std::size_t i = 0; i < n; ++i) out.row(static_cast<Eigen::Index>(i)) = random_unit_vector(rng, q).transpose();
  return out;
}

struct Prediction {
  double mean = 0.0;
  double sd = 0.0;
};

// Constant-mean GP on the sphere:
//   Cov(V_l, V_k) = sigma_sq [(1 - r) 1{l = k} + r exp(-sum_j phi_j (a_lj - a_kj)^2)].
class Surrogate {
 public:
  Surrogate() = default;

  Surrogate(Eigen::MatrixXd points, Eigen::VectorXd values, Eigen::VectorXd phi, double r = kDefaultNuggetMass)
      : points_(std::move(points)), values_(std::move(values)), phi_(std::move(phi)), r_(r) {
    if (points_.rows() != values_.size()) throw std::invalid_argument("Surrogate: points/values mismatch");
    if (points_.rows() < 2) throw std::invalid_argument("Surrogate: need at least two points");
    if (phi_.size() != points_.cols()) throw std::invalid_argument("Surrogate: phi length");
    if ((phi_.array() <= 0.0).any()) throw std::invalid_argument("Surrogate: phi must be positive");
    if (!(r_ > 0.0 && r_ < 1.0)) throw std::invalid_argument("Surrogate: r must be in (0, 1)");
    const double n = static_cast<double>(values_.size());
    mu_ = values_.mean();
    sigma_sq_ = (values_.array() - mu_).square().sum() / (n - 1.0);
    sigma_sq_ = std::max(sigma_sq_, variance_floor(mu_));
    factor();
  }

  static double variance_floor(double mu) { return 1e-12 * std::abs(mu) + 1e-12; }

  double mu() const { return mu_; }
  double sigma_sq() const { return sigma_sq_; }
  double r() const { return r_; }
  double jitter() const { return jitter_; }
  const Eigen::VectorXd& phi() const { return phi_; }
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  std::size_t q() const { return static_cast<std::size_t>(points_.cols()); }

  double cross_correlation(const Eigen::VectorXd& a, Eigen::Index l) const {
    const double d = (phi_.array() * (points_.row(l).transpose() - a).array().square()).sum();
    return r_ * std::exp(-d);
  }

  Prediction predict(const Eigen::VectorXd& alpha) const {
    Eigen::VectorXd c(points_.rows());
    for (Eigen::Index l = 0; l < points_.rows(); ++l) c(l) = cross_correlation(alpha, l);
    return from_cross(c);
  }

  // Rows of `candidates` are query points.
  void predict_batch(const Eigen::MatrixXd& candidates, Eigen::VectorXd& mean, Eigen::VectorXd& sd) const {
    const Eigen::Index n = points_.rows(), m = candidates.rows();
    Eigen::MatrixXd c(n, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::ArrayXd d = Eigen::ArrayXd::Zero(n);
      for (Eigen::Index j = 0; j < points_.cols(); ++j)
        d += phi_(j) * (points_.col(j).array() - candidates(i, j)).square();
      c.col(i) = r_ * (-d).exp();
    }
    mean = (c.transpose() * weights_).array() + mu_;
    const Eigen::MatrixXd v = llt_.matrixL().solve(c);
    sd = (sigma_sq_ * (1.0 - v.colwise().squaredNorm().array()).max(0.0)).sqrt();
  }

  // Gaussian log-likelihood of the training values at the current phi.
  double log_likelihood() const { return log_lik_; }

 private:
  Prediction from_cross(const Eigen::VectorXd& c) const {
    Prediction p;
    p.mean = mu_ + c.dot(weights_);
    const double explained = llt_.matrixL().solve(c).squaredNorm();
    p.sd = std::sqrt(sigma_sq_ * std::max(0.0, 1.0 - explained));
    return p;
  }

  void factor() {
    const Eigen::Index n = points_.rows();
    Eigen::MatrixXd corr(n, n);
    for (Eigen::Index l = 0; l < n; ++l) {
      corr(l, l) = 1.0;
      for (Eigen::Index k = 0; k < l; ++k) {
        const double d = (phi_.array() * (points_.row(l) - points_.row(k)).transpose().array().square()).sum();
        corr(l, k) = corr(k, l) = r_ * std::exp(-d);
      }
    }
    JitteredCholesky jc = cholesky_with_jitter(corr, kJitterStart, kJitterEscalations, "Surrogate");
    llt_ = std::move(jc.llt);
    jitter_ = jc.jitter;
    const Eigen::VectorXd centred = values_.array() - mu_;
    weights_ = llt_.solve(centred);
    log_lik_ = -0.5 * (static_cast<double>(n) * std::log(sigma_sq_) + log_det_from_llt(llt_) +
                       centred.dot(weights_) / sigma_sq_) -
               static_cast<double>(n) * stats::kLogSqrt2Pi;
  }

  Eigen::MatrixXd points_;
  Eigen::VectorXd values_;
  Eigen::VectorXd phi_;
  double r_ = kDefaultNuggetMass;
  double mu_ = 0.0;
  double sigma_sq_ = 1.0;
  double jitter_ = 0.0;
  double log_lik_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd weights_;  // corr^{-1} (values - mu)
};

// Expected increase over the incumbent: Phi(z)(m - best) + s phi(z).
inline double expected_gain(double mean, double sd, double best) {
  const double diff = mean - best;
  if (!(sd > 0.0)) return std::max(diff, 0.0);
  const double z = diff / sd;
  return std::max(0.0, diff * stats::norm_cdf(z) + sd * stats::norm_pdf(z));
}

inline double expected_gain(const Surrogate& s, const Eigen::VectorXd& alpha, double best) {
  const Prediction p = s.predict(alpha);
  return expected_gain(p.mean, p.sd, best);
}

struct SurrogateFitOptions {
  double r = kDefaultNuggetMass;
  std::vector<double> starts{0.1, 1.0, 10.0};  // each start sets every phi_j to the value
  std::size_t max_iter = 200;
  double size_tol = 1e-3;  // simplex size on the log scale
  double log_phi_bound = 12.0;
};

namespace detail {

// Profile objective over log phi with mu, sigma_sq and r held fixed. The
// pairwise squared differences are computed once per fit.
struct PhiObjective {
  const Eigen::MatrixXd* points;
  const Eigen::VectorXd* values;
  std::vector<Eigen::MatrixXd> sqdiff;
  double r, mu, sigma_sq, bound;
  Eigen::VectorXd centred;

  PhiObjective(const Eigen::MatrixXd& pts, const Eigen::VectorXd& vals, double r_in, double bound_in)
      : points(&pts), values(&vals), r(r_in), bound(bound_in) {
    const Eigen::Index n = pts.rows();
    mu = vals.mean();
    sigma_sq = std::max((vals.array() - mu).square().sum() / static_cast<double>(n - 1),
                        Surrogate::variance_floor(mu));
    centred = vals.array() - mu;
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      Eigen::MatrixXd d(n, n);
      for (Eigen::Index k = 0; k < n; ++k) d.col(k) = (pts.col(j).array() - pts(k, j)).square().matrix();
      sqdiff.push_back(std::move(d));
    }
  }

  double negative_log_lik(const double* log_phi) const {
    const Eigen::Index n = points->rows();
    Eigen::MatrixXd expo = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < sqdiff.size(); ++j) {
      if (std::abs(log_phi[j]) > bound) return std::numeric_limits<double>::max();
      expo.noalias() -= std::exp(log_phi[j]) * sqdiff[j];
    }
    Eigen::MatrixXd corr = r * expo.array().exp().matrix();
    corr.diagonal().setOnes();
    Eigen::LLT<Eigen::MatrixXd> llt(corr);
    if (llt.info() != Eigen::Success) {
      try {
        llt = cholesky_with_jitter(corr, kJitterStart, kJitterEscalations, "phi objective").llt;
      } catch (const NumericalError&) {
        return std::numeric_limits<double>::max();
      }
    }
    const Eigen::VectorXd w = llt.matrixL().solve(centred);
    return 0.5 * (log_det_from_llt(llt) + w.squaredNorm() / sigma_sq);
  }

  static double gsl_f(const gsl_vector* x, void* self) {
    return static_cast<const PhiObjective*>(self)->negative_log_lik(x->data);
  }
};

}  // namespace detail

struct PhiFit {
  Eigen::VectorXd phi;
  double negative_log_lik = 0.0;
};

// Maximum-likelihood length scales by Nelder-Mead on log phi, started from
// each entry of `starts` plus any caller-supplied warm start.
inline PhiFit fit_phi(const Eigen::MatrixXd& points, const Eigen::VectorXd& values, const SurrogateFitOptions& opt,
                      const std::vector<Eigen::VectorXd>& warm_starts = {}) {
  const std::size_t q = static_cast<std::size_t>(points.cols());
  detail::PhiObjective obj(points, values, opt.r, opt.log_phi_bound);
  std::vector<Eigen::VectorXd> starts = warm_starts;
  for (double s : opt.starts) starts.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(q), s));
  if (starts.empty()) throw std::invalid_argument("fit_phi: no starting points");

  gsl_set_error_handler_off();
  gsl_multimin_function fn{&detail::PhiObjective::gsl_f, q, &obj};
  gsl_vector* x = gsl_vector_alloc(q);
  gsl_vector* step = gsl_vector_alloc(q);
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, q);
  PhiFit best;
  best.negative_log_lik = std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& s : starts) {
    for (std::size_t j = 0; j < q; ++j) {
      gsl_vector_set(x, j, std::log(s(static_cast<Eigen::Index>(j))));
      gsl_vector_set(step, j, 1.0);
    }
    gsl_multimin_fminimizer_set(m, &fn, x, step);
    for (std::size_t it = 0; it < opt.max_iter; ++it) {
      if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), opt.size_tol) == GSL_SUCCESS) break;
    }
    const double f = gsl_multimin_fminimizer_minimum(m);
    if (f < best.negative_log_lik) {
      best.negative_log_lik = f;
      best.phi.resize(static_cast<Eigen::Index>(q));
      const gsl_vector* xm = gsl_multimin_fminimizer_x(m);
      for (std::size_t j = 0; j < q; ++j) best.phi(static_cast<Eigen::Index>(j)) = std::exp(gsl_vector_get(xm, j));
    }
  }
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(step);
  gsl_vector_free(x);
  if (!std::isfinite(best.negative_log_lik) || best.negative_log_lik == std::numeric_limits<double>::max())
    throw NumericalError("fit_phi: likelihood could not be evaluated at any start");
  return best;
}

inline Surrogate fit_surrogate(const Eigen::MatrixXd& points, const Eigen::VectorXd& values,
                               const SurrogateFitOptions& opt = {},
                               const std::vector<Eigen::VectorXd>& warm_starts = {}) {
  if (points.rows() < 2) throw std::invalid_argument("fit_surrogate: need at least two points");
  if (points.rows() != values.size()) throw std::invalid_argument("fit_surrogate: points/values mismatch");
  const PhiFit f = fit_phi(points, values, opt, warm_starts);
  return Surrogate(points, values, f.phi, opt.r);
}

}  // namespace bnpdtr::gp

#endif
