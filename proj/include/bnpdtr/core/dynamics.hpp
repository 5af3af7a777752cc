#ifndef BNPDTR_CORE_DYNAMICS_HPP
#define BNPDTR_CORE_DYNAMICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "bnpdtr/core/design.hpp"
#include "bnpdtr/core/types.hpp"
#include "bnpdtr/stats/densities.hpp"
#include "bnpdtr/stats/random.hpp"

namespace bnpdtr {

// What a decision rule may look at before visit t: the baseline covariates
// and the previous (recommendation, elapsed time, response). At the first
// decision there is no previous visit and has_previous is false.
struct HistoryTail {
  const Eigen::VectorXd& X;
  double Y_prev;
  double A_prev;
  double delta_prev;
  bool has_previous;
};

// Bound on log(delta) so a pathological draw cannot generate an unbounded
// number of visits.
inline constexpr double kMaxAbsLogDelta = 6.0;
// Same idea for the unbounded basic-mode response: an explosive
// autoregression from a prior-drawn atom stays finite.
inline constexpr double kMaxAbsResponse = 20.0;

// A model with its baseline Cholesky factor computed once, shared read-only
// across any number of simulations.
class PreparedModel {
 public:
  explicit PreparedModel(MixtureModel model) : model_(std::move(model)) {
    model_.validate();
    Eigen::LLT<Eigen::MatrixXd> llt(model_.Sigma0);
    if (llt.info() != Eigen::Success)
      throw NumericalError("PreparedModel: Sigma0 not positive definite");
    chol0_ = llt.matrixL();
    sd1_ = std::sqrt(model_.sigma1_sq);
    sd2_ = std::sqrt(model_.sigma2_sq);
  }

  const MixtureModel& model() const { return model_; }
  const Eigen::MatrixXd& chol0() const { return chol0_; }
  double sd1() const { return sd1_; }
  double sd2() const { return sd2_; }

 private:
  MixtureModel model_;
  Eigen::MatrixXd chol0_;
  double sd1_ = 0.0, sd2_ = 0.0;
};

// Forward-simulates one subject from a fixed atom. Visits are generated
// until calendar time reaches the horizon; the crossing visit is kept.
// ActionRule: double(const HistoryTail&, Rng&), returning months > 0.
template <class ActionRule>
void sample_subject_from_atom(Trajectory& out, const PreparedModel& pm, std::size_t atom_index,
                              ActionRule&& rule, double horizon_months, Rng& rng) {
  if (!(horizon_months > 0.0))
    throw std::invalid_argument("sample_subject: horizon must be positive");
  const MixtureModel& m = pm.model();
  const Atom& atom = m.atoms.at(atom_index);
  const Eigen::Index p = static_cast<Eigen::Index>(m.p());
  const bool extended = m.mode == ModelMode::extended;

  Eigen::VectorXd base = rnd::mvn_chol(rng, atom.theta0, pm.chol0());
  out.X.resize(p);
  for (Eigen::Index j = 0; j < p; ++j)
    out.X(j) = m.is_binary(static_cast<std::size_t>(j)) ? (base(j) > 0.0 ? 1.0 : 0.0) : base(j);
  if (extended) {
    out.Y0_latent = base(p);
    out.Y0 = std::clamp(base(p), 0.0, 1.0);
  } else {
    out.Y0_latent.reset();
    out.Y0 = base(p);
  }
  out.visits.clear();
  out.group_id = static_cast<int>(atom_index);

  double t = 0.0;
  double y_prev = out.Y0;
  double a_prev = 0.0, d_prev = 0.0;
  bool has_prev = false;
  while (t < horizon_months) {
    const double A = rule(HistoryTail{out.X, y_prev, a_prev, d_prev, has_prev}, rng);
    if (!(A > 0.0)) throw std::domain_error("sample_subject: action must be positive");
    VisitRecord v;
    v.A = A;
    const double log_a = std::log(A);
    const double mean1 = regression_dot(atom.theta1, out.X, y_prev, log_a);
    double var1_scale = 1.0;
    if (extended) var1_scale = rnd::inv_gamma(rng, 0.5 * m.nu1, 0.5 * m.nu1);
    double log_delta = rnd::normal(rng, mean1, pm.sd1() * std::sqrt(var1_scale));
    log_delta = std::clamp(log_delta, -kMaxAbsLogDelta, kMaxAbsLogDelta);
    v.delta = std::exp(log_delta);
    const double s = m.delta_coding.apply(v.delta);

    if (extended) {
      const double p_carry = stats::norm_cdf(regression_dot(*atom.theta3, out.X, y_prev, s));
      if (rnd::bernoulli(rng, p_carry)) {
        v.Y = y_prev;
        v.carried_forward = true;
      } else {
        const double lam2 = rnd::inv_gamma(rng, 0.5 * m.nu2, 0.5 * m.nu2);
        const double mean2 = regression_dot(atom.theta2, out.X, y_prev, s);
        const double latent = rnd::normal(rng, mean2, pm.sd2() * std::sqrt(lam2));
        v.Y_latent = latent;
        v.Y = std::clamp(latent, 0.0, 1.0);
      }
    } else {
      v.Y = std::clamp(rnd::normal(rng, regression_dot(atom.theta2, out.X, y_prev, s), pm.sd2()),
                       -kMaxAbsResponse, kMaxAbsResponse);
    }
    out.visits.push_back(v);
    t += v.delta;
    y_prev = v.Y;
    a_prev = v.A;
    d_prev = v.delta;
    has_prev = true;
  }
}

template <class ActionRule>
void sample_subject_into(Trajectory& out, const PreparedModel& pm, ActionRule&& rule,
                         double horizon_months, Rng& rng) {
  const std::size_t l = rnd::categorical(rng, pm.model().weights);
  sample_subject_from_atom(out, pm, l, rule, horizon_months, rng);
}

template <class ActionRule>
Trajectory sample_subject(const PreparedModel& pm, ActionRule&& rule, double horizon_months,
                          Rng& rng) {
  Trajectory out;
  sample_subject_into(out, pm, rule, horizon_months, rng);
  return out;
}

// Stochastic behaviour policies used to generate observational training data.
struct ConstantAction {
  double months = 6.0;
  double operator()(const HistoryTail&, Rng&) const { return months; }
};

// logit P(A = short) = intercept + slope * Y_prev; otherwise the long action.
struct LogisticBehavior {
  double short_action = 3.0;
  double long_action = 9.0;
  double intercept = 0.0;
  double slope = 1.0;

  double prob_short(double y_prev) const {
    const double eta = intercept + slope * y_prev;
    return 1.0 / (1.0 + std::exp(-eta));
  }
  double operator()(const HistoryTail& h, Rng& rng) const {
    return rnd::bernoulli(rng, prob_short(h.Y_prev)) ? short_action : long_action;
  }
};

template <class ActionSampler>
Trajectory sample_subject_with_behavior(const PreparedModel& pm, ActionSampler&& behavior,
                                        double horizon_months, Rng& rng) {
  return sample_subject(pm, behavior, horizon_months, rng);
}

}  // namespace bnpdtr

#endif
