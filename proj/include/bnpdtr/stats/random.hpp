#ifndef BNPDTR_STATS_RANDOM_HPP
#define BNPDTR_STATS_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace bnpdtr {

using Rng = std::mt19937_64;

// Splittable seeding: a child stream is a pure function of (parent seed,
// stream index), so work can be partitioned without changing results.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

namespace rnd {

// A fresh distribution per call: a cached spare deviate would leak state
// between otherwise independent streams.
inline double std_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

// sd == 0 is allowed and returns the mean exactly.
inline double normal(Rng& rng, double mean, double sd) {
  return mean + sd * std_normal(rng);
}

inline double uniform(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double gamma(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

// Inverse gamma with density proportional to x^{-shape-1} exp(-scale / x).
inline double inv_gamma(Rng& rng, double shape, double scale) {
  return 1.0 / gamma(rng, shape, scale);
}

inline double beta(Rng& rng, double a, double b) {
  const double x = gamma(rng, a, 1.0);
  const double y = gamma(rng, b, 1.0);
  return x / (x + y);
}

inline bool bernoulli(Rng& rng, double p) { return uniform(rng) < p; }

inline std::size_t categorical_from_log(Rng& rng,
                                        const std::vector<double>& log_w) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : log_w) mx = std::max(mx, v);
  if (!std::isfinite(mx)) throw std::domain_error("categorical: no finite weight");
  double total = 0.0;
  std::vector<double> w(log_w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = std::exp(log_w[k] - mx);
    total += w[k];
  }
  double u = uniform(rng) * total;
  for (std::size_t k = 0; k < w.size(); ++k) {
    u -= w[k];
    if (u <= 0.0) return k;
  }
  return w.size() - 1;
}

inline std::size_t categorical(Rng& rng, const std::vector<double>& w) {
  double total = 0.0;
  for (double v : w) total += v;
  double u = uniform(rng) * total;
  for (std::size_t k = 0; k < w.size(); ++k) {
    u -= w[k];
    if (u <= 0.0 && w[k] > 0.0) return k;
  }
  for (std::size_t k = w.size(); k-- > 0;)
    if (w[k] > 0.0) return k;
  throw std::domain_error("categorical: all weights zero");
}

inline Eigen::VectorXd std_normal_vector(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = std_normal(rng);
  return z;
}

// Draw from N(mean, L L^T) given the lower Cholesky factor.
inline Eigen::VectorXd mvn_chol(Rng& rng, const Eigen::VectorXd& mean,
                                const Eigen::MatrixXd& chol_lower) {
  return mean + chol_lower.triangularView<Eigen::Lower>() *
                    std_normal_vector(rng, mean.size());
}

// Draw from N(P^{-1} b, P^{-1}) given a precision matrix P and linear term b,
// the canonical form of every conjugate Gaussian update here.
inline Eigen::VectorXd mvn_canonical(Rng& rng, const Eigen::MatrixXd& precision,
                                     const Eigen::VectorXd& linear) {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("mvn_canonical: precision not positive definite");
  Eigen::VectorXd mean = llt.solve(linear);
  Eigen::VectorXd z = std_normal_vector(rng, mean.size());
  // L^T x = z gives Cov(x) = (L L^T)^{-1}.
  return mean + llt.matrixU().solve(z);
}

// Wishart(df, scale) via the Bartlett decomposition.
inline Eigen::MatrixXd wishart(Rng& rng, double df, const Eigen::MatrixXd& scale) {
  const Eigen::Index d = scale.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("wishart: scale not positive definite");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(2.0 * gamma(rng, 0.5 * (df - static_cast<double>(i)), 1.0));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = std_normal(rng);
  }
  Eigen::MatrixXd la = llt.matrixL() * a;
  return la * la.transpose();
}

// InvWishart(df, scale): the inverse of Wishart(df, scale^{-1}).
inline Eigen::MatrixXd inv_wishart(Rng& rng, double df, const Eigen::MatrixXd& scale) {
  Eigen::MatrixXd scale_inv = scale.llt().solve(
      Eigen::MatrixXd::Identity(scale.rows(), scale.cols()));
  Eigen::MatrixXd w = wishart(rng, df, 0.5 * (scale_inv + scale_inv.transpose()));
  Eigen::MatrixXd out =
      w.llt().solve(Eigen::MatrixXd::Identity(w.rows(), w.cols()));
  return 0.5 * (out + out.transpose());
}

}  // namespace rnd
}  // namespace bnpdtr

#endif
