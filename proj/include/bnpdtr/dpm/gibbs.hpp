#ifndef BNPDTR_DPM_GIBBS_HPP
#define BNPDTR_DPM_GIBBS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bnpdtr/core/design.hpp"
#include "bnpdtr/core/types.hpp"
#include "bnpdtr/dpm/chain.hpp"
#include "bnpdtr/dpm/conditionals.hpp"
#include "bnpdtr/dpm/likelihood.hpp"
#include "bnpdtr/stats/densities.hpp"
#include "bnpdtr/stats/random.hpp"

namespace bnpdtr::dpm {

// Per-subject data with precomputed design matrices and the augmentation
// latents of the extended model.
struct SubjectData {
  Eigen::VectorXd x;         // observed covariates
  double y0 = 0.0;           // observed baseline response
  Eigen::MatrixXd design1;   // visits x d, compliance rows
  Eigen::MatrixXd design2;   // visits x d, progression / carry-forward rows
  Eigen::VectorXd log_delta;
  Eigen::VectorXd y;
  std::vector<unsigned char> repeat;  // y_t == y_{t-1}

  Eigen::VectorXd base;       // (X, Y0), latent (X*, Y0*) in extended mode
  Eigen::VectorXd y_latent;   // Y*, equals y when uncensored
  Eigen::VectorXd lambda1, lambda2;
  std::vector<unsigned char> carry;  // visit attributed to the point mass
  Eigen::VectorXd probit_latent;

  Eigen::Index visits() const { return y.size(); }
};

struct GibbsState {
  std::vector<std::size_t> assignment;
  std::vector<double> sticks;
  std::vector<Atom> atoms;
  // Block hyper-parameters for theta0..theta3.
  std::array<Eigen::VectorXd, 4> block_mean;
  std::array<Eigen::MatrixXd, 4> block_cov;
  Eigen::MatrixXd Sigma0;
  double sigma1_sq = 1.0;
  double sigma2_sq = 1.0;

  std::vector<double> weights() const { return stick_weights(sticks); }
};

class GibbsSampler {
 public:
  GibbsSampler(std::span<const Trajectory> data, HyperParams hyper, FitOptions options, Rng& rng)
      : hyper_(std::move(hyper)), opt_(std::move(options)), rng_(rng) {
    hyper_.validate();
    if (data.empty()) throw std::invalid_argument("fit: empty dataset");
    p_ = static_cast<Eigen::Index>(data.front().p());
    d_ = static_cast<Eigen::Index>(regression_dim(data.front().p()));
    if (extended()) {
      if (opt_.binary_mask.empty()) opt_.binary_mask.assign(static_cast<std::size_t>(p_), false);
      if (opt_.binary_mask.size() != static_cast<std::size_t>(p_))
        throw std::invalid_argument("fit: binary mask length differs from covariate count");
    } else {
      opt_.binary_mask.clear();
    }
    subjects_.reserve(data.size());
    for (const Trajectory& tr : data) subjects_.push_back(prepare(tr));
    initialize();
  }

  const GibbsState& state() const { return state_; }
  std::size_t n_subjects() const { return subjects_.size(); }
  const std::vector<SubjectData>& subjects() const { return subjects_; }
  bool extended() const { return opt_.mode == ModelMode::extended; }

  void sweep() {
    update_assignments();
    update_sticks();
    update_atoms();
    update_block_hyper();
    update_variances();
    if (extended()) update_latents();
  }

  MixtureModel export_draw() const {
    MixtureModel m;
    m.mode = opt_.mode;
    m.delta_coding = opt_.delta_coding;
    m.weights = state_.weights();
    m.atoms = state_.atoms;
    m.Sigma0 = state_.Sigma0;
    m.sigma1_sq = state_.sigma1_sq;
    m.sigma2_sq = state_.sigma2_sq;
    m.nu1 = hyper_.nu1;
    m.nu2 = hyper_.nu2;
    m.binary_mask = opt_.binary_mask;
    return m;
  }

  // Sum over subjects of the log-likelihood under their current atom.
  double log_likelihood() const {
    Eigen::LLT<Eigen::MatrixXd> llt(state_.Sigma0);
    double total = 0.0;
    for (std::size_t i = 0; i < subjects_.size(); ++i)
      total += subject_loglik(subjects_[i], state_.atoms[state_.assignment[i]], llt);
    if (!std::isfinite(total)) throw NumericalError("Gibbs: non-finite log-likelihood");
    return total;
  }

  // Log-likelihood of one prepared subject under an atom, with the current
  // shared parameters. Scale-mixture latents are integrated out.
  double subject_loglik(const SubjectData& s, const Atom& atom,
                        const Eigen::LLT<Eigen::MatrixXd>& sigma0_llt) const {
    double total = mvn_logpdf(s.base, atom.theta0, sigma0_llt);
    const Eigen::VectorXd m1 = s.design1 * atom.theta1;
    const Eigen::VectorXd m2 = s.design2 * atom.theta2;
    if (!extended()) {
      const double r1 = (s.log_delta - m1).squaredNorm();
      const double r2 = (s.y - m2).squaredNorm();
      const double n = static_cast<double>(s.visits());
      total += -0.5 * (n * std::log(state_.sigma1_sq) + r1 / state_.sigma1_sq) -
               0.5 * (n * std::log(state_.sigma2_sq) + r2 / state_.sigma2_sq) -
               2.0 * n * stats::kLogSqrt2Pi;
      return total;
    }
    const double sd1 = std::sqrt(state_.sigma1_sq), sd2 = std::sqrt(state_.sigma2_sq);
    const Eigen::VectorXd m3 = s.design2 * *atom.theta3;
    for (Eigen::Index t = 0; t < s.visits(); ++t) {
      total += stats::t_logpdf(s.log_delta(t), m1(t), sd1, hyper_.nu1);
      const double y_prev = t == 0 ? s.y0 : s.y(t - 1);
      total += carry_forward_logpdf(s.y(t), y_prev, stats::norm_cdf(m3(t)),
                                    tobit_logpdf(s.y(t), m2(t), sd2, hyper_.nu2));
    }
    return total;
  }

 private:
  SubjectData prepare(const Trajectory& tr) const {
    if (static_cast<Eigen::Index>(tr.p()) != p_)
      throw std::invalid_argument("fit: non-conformable covariate dimensions");
    if (tr.visits.empty()) throw std::invalid_argument("fit: trajectory without follow-up visits");
    SubjectData s;
    const Eigen::Index n = static_cast<Eigen::Index>(tr.visits.size());
    s.x = tr.X;
    s.y0 = tr.Y0;
    s.design1.resize(n, d_);
    s.design2.resize(n, d_);
    s.log_delta.resize(n);
    s.y.resize(n);
    s.repeat.assign(static_cast<std::size_t>(n), 0);
    double y_prev = tr.Y0;
    for (Eigen::Index t = 0; t < n; ++t) {
      const VisitRecord& v = tr.visits[static_cast<std::size_t>(t)];
      if (!(v.A > 0.0) || !(v.delta > 0.0))
        throw std::invalid_argument("fit: recommendation and elapsed time must be positive");
      Eigen::VectorXd row(d_);
      regression_row(row, tr.X, y_prev, std::log(v.A));
      s.design1.row(t) = row.transpose();
      regression_row(row, tr.X, y_prev, opt_.delta_coding.apply(v.delta));
      s.design2.row(t) = row.transpose();
      s.log_delta(t) = std::log(v.delta);
      s.y(t) = v.Y;
      s.repeat[static_cast<std::size_t>(t)] = (v.Y == y_prev) ? 1 : 0;
      if (extended() && (v.Y < 0.0 || v.Y > 1.0))
        throw std::invalid_argument("fit: extended-mode responses must lie in [0, 1]");
      y_prev = v.Y;
    }
    s.base.resize(p_ + 1);
    s.base.head(p_) = tr.X;
    s.base(p_) = tr.Y0;
    s.y_latent = s.y;
    s.lambda1 = Eigen::VectorXd::Ones(n);
    s.lambda2 = Eigen::VectorXd::Ones(n);
    s.carry.assign(static_cast<std::size_t>(n), 0);
    s.probit_latent = Eigen::VectorXd::Constant(n, -0.5);
    if (extended()) {
      for (Eigen::Index j = 0; j < p_; ++j) {
        if (!opt_.binary_mask[static_cast<std::size_t>(j)]) continue;
        if (tr.X(j) != 0.0 && tr.X(j) != 1.0)
          throw std::invalid_argument("fit: binary covariate not coded 0/1");
        s.base(j) = tr.X(j) > 0.5 ? 0.5 : -0.5;
      }
      if (tr.Y0 < 0.0 || tr.Y0 > 1.0)
        throw std::invalid_argument("fit: extended-mode baseline response must lie in [0, 1]");
      if (tr.Y0 <= 0.0) s.base(p_) = -0.05;
      if (tr.Y0 >= 1.0) s.base(p_) = 1.05;
      for (Eigen::Index t = 0; t < n; ++t) {
        if (s.y(t) <= 0.0) s.y_latent(t) = -0.05;
        if (s.y(t) >= 1.0) s.y_latent(t) = 1.05;
        s.carry[static_cast<std::size_t>(t)] = s.repeat[static_cast<std::size_t>(t)];
        s.probit_latent(t) = s.carry[static_cast<std::size_t>(t)] ? 0.5 : -0.5;
      }
    }
    return s;
  }

  Eigen::Index block_dim(std::size_t j) const { return j == 0 ? p_ + 1 : d_; }
  std::size_t n_blocks() const { return extended() ? 4 : 3; }

  // k-means on (Y0, mean elapsed time, mean response), then per-cluster
  // least squares for the atoms.
  void initialize() {
    const std::size_t n = subjects_.size();
    const std::size_t L = hyper_.L;
    std::vector<std::array<double, 3>> feat(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = subjects_[i];
      feat[i] = {s.y0, s.log_delta.array().exp().mean(), s.y.mean()};
    }
    for (int k = 0; k < 3; ++k) {
      double mean = 0.0, sq = 0.0;
      for (auto& f : feat) mean += f[k];
      mean /= static_cast<double>(n);
      for (auto& f : feat) sq += (f[k] - mean) * (f[k] - mean);
      const double sd = std::sqrt(sq / static_cast<double>(n)) + 1e-12;
      for (auto& f : feat) f[k] = (f[k] - mean) / sd;
    }
    state_.assignment = kmeans(feat, L);

    state_.atoms.assign(L, Atom{});
    RegressionStats g1(d_), g2(d_);
    for (const auto& s : subjects_)
      for (Eigen::Index t = 0; t < s.visits(); ++t) {
        g1.add(s.design1.row(t).transpose(), s.log_delta(t), 1.0);
        g2.add(s.design2.row(t).transpose(), s.y_latent(t), 1.0);
      }
    const Eigen::VectorXd global1 = ridge(g1), global2 = ridge(g2);
    Eigen::VectorXd global0 = Eigen::VectorXd::Zero(p_ + 1);
    for (const auto& s : subjects_) global0 += s.base;
    global0 /= static_cast<double>(n);

    double repeat_frac = 0.0, n_vis = 0.0;
    for (const auto& s : subjects_) {
      for (auto r : s.repeat) repeat_frac += r;
      n_vis += static_cast<double>(s.visits());
    }
    repeat_frac /= n_vis;

    std::vector<double> counts(L, 0.0);
    for (std::size_t l = 0; l < L; ++l) {
      RegressionStats s1(d_), s2(d_);
      Eigen::VectorXd sum0 = Eigen::VectorXd::Zero(p_ + 1);
      for (std::size_t i = 0; i < n; ++i) {
        if (state_.assignment[i] != l) continue;
        const auto& s = subjects_[i];
        counts[l] += 1.0;
        sum0 += s.base;
        for (Eigen::Index t = 0; t < s.visits(); ++t) {
          s1.add(s.design1.row(t).transpose(), s.log_delta(t), 1.0);
          s2.add(s.design2.row(t).transpose(), s.y_latent(t), 1.0);
        }
      }
      Atom& a = state_.atoms[l];
      const bool enough = s1.count > 2.0 * static_cast<double>(d_);
      a.theta0 = counts[l] > 0.0 ? Eigen::VectorXd(sum0 / counts[l]) : global0;
      a.theta1 = enough ? ridge(s1) : global1;
      a.theta2 = enough ? ridge(s2) : global2;
      if (extended()) {
        Eigen::VectorXd t3 = Eigen::VectorXd::Zero(d_);
        t3(0) = stats::norm_quantile(std::clamp(repeat_frac, 0.01, 0.99));
        a.theta3 = t3;
      }
    }

    double ss1 = 0.0, ss2 = 0.0;
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(p_ + 1, p_ + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = subjects_[i];
      const Atom& a = state_.atoms[state_.assignment[i]];
      ss1 += (s.log_delta - s.design1 * a.theta1).squaredNorm();
      ss2 += (s.y_latent - s.design2 * a.theta2).squaredNorm();
      const Eigen::VectorXd r = s.base - a.theta0;
      scatter += r * r.transpose();
    }
    state_.sigma1_sq = std::max(ss1 / n_vis, 1e-6);
    state_.sigma2_sq = std::max(ss2 / n_vis, 1e-6);
    state_.Sigma0 = scatter / static_cast<double>(n);
    state_.Sigma0.diagonal().array() += 1e-6;
    if (extended()) fix_probit_scale(state_.Sigma0);

    for (std::size_t j = 0; j < n_blocks(); ++j) {
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(block_dim(j));
      for (const Atom& a : state_.atoms) mean += block(a, j);
      state_.block_mean[j] = mean / static_cast<double>(L);
      state_.block_cov[j] = Eigen::MatrixXd::Identity(block_dim(j), block_dim(j));
    }

    state_.sticks.assign(L, 1.0);
    double remaining = static_cast<double>(n);
    for (std::size_t l = 0; l + 1 < L; ++l) {
      state_.sticks[l] = remaining > 0.0 ? std::clamp(counts[l] / remaining, 0.01, 0.99) : 0.5;
      remaining -= counts[l];
    }
  }

  std::vector<std::size_t> kmeans(const std::vector<std::array<double, 3>>& feat, std::size_t k) {
    const std::size_t n = feat.size();
    std::vector<std::size_t> assign(n, 0);
    if (k == 1) return assign;
    auto dist2 = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
      double s = 0.0;
      for (int c = 0; c < 3; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
      return s;
    };
    // k-means++ seeding.
    std::vector<std::array<double, 3>> centers;
    centers.push_back(feat[static_cast<std::size_t>(rnd::uniform(rng_) * static_cast<double>(n)) % n]);
    std::vector<double> d2(n);
    while (centers.size() < k) {
      for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) best = std::min(best, dist2(feat[i], c));
        d2[i] = best;
      }
      if (std::accumulate(d2.begin(), d2.end(), 0.0) <= 0.0) break;
      centers.push_back(feat[rnd::categorical(rng_, d2)]);
    }
    for (int iter = 0; iter < 25; ++iter) {
      bool changed = false;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers.size(); ++c) {
          const double dd = dist2(feat[i], centers[c]);
          if (dd < bd) bd = dd, best = c;
        }
        if (assign[i] != best) assign[i] = best, changed = true;
      }
      std::vector<std::array<double, 3>> sum(centers.size(), {0.0, 0.0, 0.0});
      std::vector<double> cnt(centers.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) sum[assign[i]][c] += feat[i][c];
        cnt[assign[i]] += 1.0;
      }
      for (std::size_t c = 0; c < centers.size(); ++c)
        if (cnt[c] > 0.0)
          for (int q = 0; q < 3; ++q) centers[c][q] = sum[c][q] / cnt[c];
      if (!changed && iter > 0) break;
    }
    // Larger clusters first, matching the stochastic ordering of the sticks.
    std::vector<double> cnt(k, 0.0);
    for (auto a : assign) cnt[a] += 1.0;
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cnt[a] > cnt[b]; });
    std::vector<std::size_t> rank(k);
    for (std::size_t r = 0; r < k; ++r) rank[order[r]] = r;
    for (auto& a : assign) a = rank[a];
    return assign;
  }

  Eigen::VectorXd ridge(const RegressionStats& s) const {
    Eigen::MatrixXd g = s.gram();
    g.diagonal().array() += 1e-3;
    return g.ldlt().solve(s.xty);
  }

  static const Eigen::VectorXd& block(const Atom& a, std::size_t j) {
    switch (j) {
      case 0: return a.theta0;
      case 1: return a.theta1;
      case 2: return a.theta2;
      default: return *a.theta3;
    }
  }

  void fix_probit_scale(Eigen::MatrixXd& sigma) const {
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(sigma.rows());
    for (Eigen::Index j = 0; j < p_; ++j)
      if (opt_.binary_mask[static_cast<std::size_t>(j)]) scale(j) = 1.0 / std::sqrt(sigma(j, j));
    sigma = scale.asDiagonal() * sigma * scale.asDiagonal();
    for (Eigen::Index j = 0; j < p_; ++j)
      if (opt_.binary_mask[static_cast<std::size_t>(j)]) sigma(j, j) = 1.0;
  }

  void update_assignments() {
    const std::size_t L = hyper_.L;
    if (L == 1) {
      std::fill(state_.assignment.begin(), state_.assignment.end(), 0);
      return;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(state_.Sigma0);
    if (llt.info() != Eigen::Success) throw NumericalError("Gibbs: Sigma0 lost positive definiteness");
    const std::vector<double> w = state_.weights();
    std::vector<double> logp(L);
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
      for (std::size_t l = 0; l < L; ++l)
        logp[l] = (w[l] > 0.0 ? std::log(w[l]) : -std::numeric_limits<double>::infinity()) +
                  subject_loglik(subjects_[i], state_.atoms[l], llt);
      for (double v : logp)
        if (std::isnan(v)) throw NumericalError("Gibbs: NaN in cluster assignment");
      state_.assignment[i] = rnd::categorical_from_log(rng_, logp);
    }
  }

  std::vector<double> cluster_counts() const {
    std::vector<double> counts(hyper_.L, 0.0);
    for (auto a : state_.assignment) counts[a] += 1.0;
    return counts;
  }

  void update_sticks() { state_.sticks = draw_sticks(rng_, cluster_counts(), hyper_.alpha0); }

  void update_atoms() {
    const std::size_t L = hyper_.L;
    std::vector<RegressionStats> s1(L, RegressionStats(d_)), s2(L, RegressionStats(d_)),
        s3(L, RegressionStats(d_));
    std::vector<Eigen::VectorXd> sum0(L, Eigen::VectorXd::Zero(p_ + 1));
    std::vector<double> n0(L, 0.0);
    const double v1 = state_.sigma1_sq, v2 = state_.sigma2_sq;
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
      const auto& s = subjects_[i];
      const std::size_t l = state_.assignment[i];
      sum0[l] += s.base;
      n0[l] += 1.0;
      for (Eigen::Index t = 0; t < s.visits(); ++t) {
        s1[l].add(s.design1.row(t).transpose(), s.log_delta(t), s.lambda1(t) * v1);
        if (!s.carry[static_cast<std::size_t>(t)])
          s2[l].add(s.design2.row(t).transpose(), s.y_latent(t), s.lambda2(t) * v2);
        if (extended()) s3[l].add(s.design2.row(t).transpose(), s.probit_latent(t), 1.0);
      }
    }
    const Eigen::MatrixXd sigma0_prec = state_.Sigma0.llt().solve(
        Eigen::MatrixXd::Identity(p_ + 1, p_ + 1));
    std::array<Eigen::MatrixXd, 4> prior_prec;
    for (std::size_t j = 0; j < n_blocks(); ++j)
      prior_prec[j] = state_.block_cov[j].llt().solve(
          Eigen::MatrixXd::Identity(block_dim(j), block_dim(j)));
    for (std::size_t l = 0; l < L; ++l) {
      Atom& a = state_.atoms[l];
      a.theta0 = draw_gaussian_mean(rng_, state_.block_mean[0], prior_prec[0], sigma0_prec, sum0[l], n0[l]);
      a.theta1 = draw_regression_block(rng_, state_.block_mean[1], prior_prec[1], s1[l]);
      a.theta2 = draw_regression_block(rng_, state_.block_mean[2], prior_prec[2], s2[l]);
      if (extended()) a.theta3 = draw_regression_block(rng_, state_.block_mean[3], prior_prec[3], s3[l]);
    }
  }

  // m_bj ~ N(0, I) and Sigma_bj ~ InvWishart(p_j + 1, (p_j + 1) I).
  void update_block_hyper() {
    const double L = static_cast<double>(hyper_.L);
    for (std::size_t j = 0; j < n_blocks(); ++j) {
      const Eigen::Index dim = block_dim(j);
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
      for (const Atom& a : state_.atoms) sum += block(a, j);
      const Eigen::MatrixXd cov_prec = state_.block_cov[j].llt().solve(eye);
      state_.block_mean[j] = draw_gaussian_mean(rng_, Eigen::VectorXd::Zero(dim), eye, cov_prec, sum, L);
      Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(dim, dim);
      for (const Atom& a : state_.atoms) {
        const Eigen::VectorXd r = block(a, j) - state_.block_mean[j];
        scatter += r * r.transpose();
      }
      const double df = static_cast<double>(dim) + 1.0;
      state_.block_cov[j] = draw_covariance(rng_, df, df * eye, scatter, L);
    }
  }

  void update_variances() {
    double ss1 = 0.0, n1 = 0.0, ss2 = 0.0, n2 = 0.0;
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(p_ + 1, p_ + 1);
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
      const auto& s = subjects_[i];
      const Atom& a = state_.atoms[state_.assignment[i]];
      const Eigen::VectorXd r1 = s.log_delta - s.design1 * a.theta1;
      const Eigen::VectorXd r2 = s.y_latent - s.design2 * a.theta2;
      for (Eigen::Index t = 0; t < s.visits(); ++t) {
        ss1 += r1(t) * r1(t) / s.lambda1(t);
        n1 += 1.0;
        if (!s.carry[static_cast<std::size_t>(t)]) {
          ss2 += r2(t) * r2(t) / s.lambda2(t);
          n2 += 1.0;
        }
      }
      const Eigen::VectorXd rb = s.base - a.theta0;
      scatter += rb * rb.transpose();
    }
    state_.sigma1_sq = draw_error_variance(rng_, hyper_.sigma_a, hyper_.sigma_b, ss1, n1);
    state_.sigma2_sq = draw_error_variance(rng_, hyper_.sigma_a, hyper_.sigma_b, ss2, n2);
    const double dim = static_cast<double>(p_ + 1);
    state_.Sigma0 = draw_covariance(rng_, dim + hyper_.sigma0_df_offset,
                                    hyper_.sigma0_scale * Eigen::MatrixXd::Identity(p_ + 1, p_ + 1),
                                    scatter, static_cast<double>(subjects_.size()));
    if (extended()) fix_probit_scale(state_.Sigma0);
  }

  void update_latents() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double v1 = state_.sigma1_sq, v2 = state_.sigma2_sq;
    const Eigen::MatrixXd q0 = state_.Sigma0.llt().solve(Eigen::MatrixXd::Identity(p_ + 1, p_ + 1));
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
      auto& s = subjects_[i];
      const Atom& a = state_.atoms[state_.assignment[i]];
      const Eigen::VectorXd m1 = s.design1 * a.theta1;
      const Eigen::VectorXd m2 = s.design2 * a.theta2;
      const Eigen::VectorXd m3 = s.design2 * *a.theta3;
      for (Eigen::Index t = 0; t < s.visits(); ++t) {
        const auto tu = static_cast<std::size_t>(t);
        s.lambda1(t) = draw_scale_latent(rng_, hyper_.nu1, s.log_delta(t) - m1(t), v1);
        bool carry = false;
        if (s.repeat[tu]) {
          const double pc = stats::norm_cdf(m3(t));
          const double sd = std::sqrt(s.lambda2(t) * v2);
          const double log_cont = std::log1p(-std::min(pc, 1.0 - 1e-16)) + tobit_logpdf(s.y(t), m2(t), sd, 0.0);
          const double log_point = std::log(std::max(pc, 1e-300));
          const double prob = 1.0 / (1.0 + std::exp(log_cont - log_point));
          carry = rnd::bernoulli(rng_, prob);
        }
        s.carry[tu] = carry ? 1 : 0;
        if (!carry) {
          s.y_latent(t) = draw_tobit_latent(rng_, s.y(t), m2(t), std::sqrt(s.lambda2(t) * v2));
          s.lambda2(t) = draw_scale_latent(rng_, hyper_.nu2, s.y_latent(t) - m2(t), v2);
        } else {
          s.y_latent(t) = s.y(t);
          s.lambda2(t) = rnd::inv_gamma(rng_, 0.5 * hyper_.nu2, 0.5 * hyper_.nu2);
        }
        s.probit_latent(t) = draw_probit_latent(rng_, carry, m3(t));
      }
      // Baseline latents from their Gaussian full conditionals given the
      // other coordinates.
      for (Eigen::Index j = 0; j <= p_; ++j) {
        const bool binary = j < p_ && opt_.binary_mask[static_cast<std::size_t>(j)];
        if (!binary && j < p_) continue;
        const double cond_var = 1.0 / q0(j, j);
        double shift = 0.0;
        for (Eigen::Index k = 0; k <= p_; ++k)
          if (k != j) shift += q0(j, k) * (s.base(k) - a.theta0(k));
        const double cond_mean = a.theta0(j) - cond_var * shift;
        const double sd = std::sqrt(cond_var);
        if (binary) {
          s.base(j) = s.x(j) > 0.5 ? stats::truncated_normal(rng_, cond_mean, sd, 0.0, inf)
                                   : stats::truncated_normal(rng_, cond_mean, sd, -inf, 0.0);
        } else {
          s.base(j) = draw_tobit_latent(rng_, s.y0, cond_mean, sd);
        }
      }
    }
  }

  HyperParams hyper_;
  FitOptions opt_;
  Rng& rng_;
  Eigen::Index p_ = 0, d_ = 0;
  std::vector<SubjectData> subjects_;
  GibbsState state_;
};

// Runs n_iter sweeps, discards the first n_burnin and keeps every thin-th
// state thereafter.
inline PosteriorChain fit(std::span<const Trajectory> data, const HyperParams& hyper,
                          const FitOptions& options, Rng& rng, std::uint64_t seed = 0) {
  if (!(options.n_iter > options.n_burnin))
    throw std::invalid_argument("fit: n_iter must exceed n_burnin");
  if (options.thin < 1) throw std::invalid_argument("fit: thin must be >= 1");
  GibbsSampler sampler(data, hyper, options, rng);
  PosteriorChain chain;
  chain.n_burnin = options.n_burnin;
  chain.thin = options.thin;
  chain.seed = seed;
  chain.hyper = hyper;
  chain.options = options;
  if (options.mode == ModelMode::basic) chain.options.binary_mask.clear();
  for (std::size_t it = 0; it < options.n_iter; ++it) {
    sampler.sweep();
    if (it >= options.n_burnin && (it - options.n_burnin) % options.thin == 0) {
      chain.draws.push_back(sampler.export_draw());
      chain.log_likelihood.push_back(sampler.log_likelihood());
    }
  }
  chain.n_kept = chain.draws.size();
  return chain;
}

}  // namespace bnpdtr::dpm

#endif
