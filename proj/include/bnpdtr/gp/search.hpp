#ifndef BNPDTR_GP_SEARCH_HPP
#define BNPDTR_GP_SEARCH_HPP

#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bnpdtr/gp/surrogate.hpp"
#include "bnpdtr/policy/calibrate.hpp"
#include "bnpdtr/value/estimate.hpp"

namespace bnpdtr::gp {

struct Evaluation {
  double kappa = 0.0;
  double value = 0.0;
  double se = 0.0;
  double cost = 0.0;
  bool flagged = false;
};

// alpha (unit) and a seed to the calibrated threshold and estimated value.
// Must be safe to call concurrently.
using Objective = std::function<Evaluation(const Eigen::VectorXd& alpha, std::uint64_t seed)>;

struct SearchConfig {
  std::size_t q = 4;
  std::size_t M2 = 200;
  std::size_t M3 = 20000;
  std::size_t n_acq_candidates = 1000;
  // Length scales are re-estimated every refit_interval acquisitions; the
  // first fit and every full_refit_interval-th refit use all configured
  // starts, the others start only from the current estimate.
  std::size_t refit_interval = 1;
  std::size_t full_refit_interval = 0;  // 0: only the first fit is multi-start
  SurrogateFitOptions fit{};
  std::size_t warm_max_iter = 60;
  unsigned threads = 1;

  std::size_t M1() const {
    std::size_t t = 1;
    for (std::size_t j = 0; j < q; ++j) t *= 5;
    return t - 1;
  }

  void validate() const {
    if (q < 1) throw std::invalid_argument("SearchConfig: q must be >= 1");
    if (M3 < 1 || n_acq_candidates < 1) throw std::invalid_argument("SearchConfig: candidate counts must be positive");
    if (refit_interval < 1) throw std::invalid_argument("SearchConfig: refit_interval must be >= 1");
  }
};

enum class Stage { ccd, acquisition, final };

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::ccd: return "ccd";
    case Stage::acquisition: return "acquisition";
    case Stage::final: return "final";
  }
  return "ccd";
}

struct TraceRow {
  std::size_t step = 0;
  Eigen::VectorXd alpha;
  Evaluation eval;
  Stage stage = Stage::ccd;
};

struct SearchResult {
  Eigen::VectorXd alpha;
  double kappa = 0.0;
  double predicted_value = 0.0;  // surrogate mean at alpha
  Evaluation final_eval;         // fresh evaluation of (alpha, kappa)
  Surrogate surrogate;
  std::vector<TraceRow> trace;
};

namespace detail {

inline std::size_t argmax_first(const Eigen::VectorXd& v) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
  return best;
}

inline void check_unit(const Eigen::VectorXd& a) {
  if (std::abs(a.norm() - 1.0) > 1e-10) throw std::logic_error("search: evaluated alpha is not unit norm");
}

}  // namespace detail

// Central-composite start, expected-gain acquisitions, then the predictive
// mean argmax over M3 random directions.
inline SearchResult search(const Objective& objective, const SearchConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t q = cfg.q;
  const auto ccd = ccd_design(q);
  std::vector<Eigen::VectorXd> alphas(ccd.begin(), ccd.end());
  std::vector<Evaluation> evals(alphas.size());
  std::vector<std::uint64_t> seeds(alphas.size());
  for (auto& s : seeds) s = rng();
  parallel_for_blocks(alphas.size(), cfg.threads, [&](std::size_t i) {
    detail::check_unit(alphas[i]);
    evals[i] = objective(alphas[i], seeds[i]);
  });

  SearchResult res;
  for (std::size_t i = 0; i < alphas.size(); ++i) res.trace.push_back({i, alphas[i], evals[i], Stage::ccd});

  auto design = [&] {
    Eigen::MatrixXd P(static_cast<Eigen::Index>(alphas.size()), static_cast<Eigen::Index>(q));
    Eigen::VectorXd v(static_cast<Eigen::Index>(alphas.size()));
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      P.row(static_cast<Eigen::Index>(i)) = alphas[i].transpose();
      v(static_cast<Eigen::Index>(i)) = evals[i].value;
    }
    return std::pair{P, v};
  };

  double best = -std::numeric_limits<double>::infinity();
  for (const auto& e : evals) best = std::max(best, e.value);

  Eigen::VectorXd phi;
  std::size_t refits = 0;
  auto refresh = [&](bool force_full) {
    auto [P, v] = design();
    const bool full = force_full || phi.size() == 0 ||
                      (cfg.full_refit_interval > 0 && refits % cfg.full_refit_interval == 0);
    if (full) {
      phi = fit_phi(P, v, cfg.fit).phi;
    } else {
      SurrogateFitOptions warm = cfg.fit;
      warm.starts.clear();
      warm.max_iter = cfg.warm_max_iter;
      phi = fit_phi(P, v, warm, {phi}).phi;
    }
    ++refits;
    return Surrogate(P, v, phi, cfg.fit.r);
  };

  Surrogate sur = refresh(true);
  for (std::size_t step = 0; step < cfg.M2; ++step) {
    if (step > 0) {
      if (step % cfg.refit_interval == 0) {
        sur = refresh(false);
      } else {
        auto [P, v] = design();
        sur = Surrogate(P, v, phi, cfg.fit.r);
      }
    }
    const Eigen::MatrixXd cand = random_unit_vectors(rng, cfg.n_acq_candidates, q);
    Eigen::VectorXd m, s;
    sur.predict_batch(cand, m, s);
    Eigen::VectorXd gain(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) gain(i) = expected_gain(m(i), s(i), best);
    const Eigen::VectorXd a = cand.row(static_cast<Eigen::Index>(detail::argmax_first(gain))).transpose();
    detail::check_unit(a);
    const Evaluation e = objective(a, rng());
    alphas.push_back(a);
    evals.push_back(e);
    best = std::max(best, e.value);
    res.trace.push_back({alphas.size() - 1, a, e, Stage::acquisition});
  }
  if (cfg.M2 > 0) sur = refresh(false);

  // Final choice: predictive-mean argmax, scanned in chunks.
  constexpr std::size_t kChunk = 2000;
  Eigen::VectorXd best_alpha;
  double best_mean = -std::numeric_limits<double>::infinity();
  for (std::size_t done = 0; done < cfg.M3; done += kChunk) {
    const std::size_t n = std::min(kChunk, cfg.M3 - done);
    const Eigen::MatrixXd cand = random_unit_vectors(rng, n, q);
    Eigen::VectorXd m, s;
    sur.predict_batch(cand, m, s);
    const std::size_t i = detail::argmax_first(m);
    if (m(static_cast<Eigen::Index>(i)) > best_mean) {
      best_mean = m(static_cast<Eigen::Index>(i));
      best_alpha = cand.row(static_cast<Eigen::Index>(i)).transpose();
    }
  }
  detail::check_unit(best_alpha);
  res.final_eval = objective(best_alpha, rng());
  res.alpha = best_alpha;
  res.kappa = res.final_eval.kappa;
  res.predicted_value = best_mean;
  res.trace.push_back({alphas.size(), best_alpha, res.final_eval, Stage::final});
  res.surrogate = std::move(sur);
  return res;
}

struct PolicyObjectiveConfig {
  CalibrationConfig calibration{};
  UtilitySpec utility{};
  std::size_t n2 = 20000;
  unsigned threads = 1;
};

// Calibrates kappa for alpha against the model source, then estimates the
// value of the calibrated policy with an independent seed.
inline Objective policy_objective(const ModelSource& source, const FeatureSpec& spec, const ScoreReference& reference,
                                  const PolicyObjectiveConfig& cfg) {
  return [&source, spec, &reference, cfg](const Eigen::VectorXd& alpha, std::uint64_t seed) {
    const CalibrationResult cal =
        calibrate_threshold(source, alpha, spec, reference, cfg.calibration, mix_seed(seed, 0));
    const Policy pol{alpha, cal.kappa, cfg.calibration.a1, cfg.calibration.a2, spec};
    const ValueEstimate v = estimate_value(source, pol, cfg.utility, cfg.n2, mix_seed(seed, 1), cfg.threads);
    return Evaluation{cal.kappa, v.value, v.std_error, v.cost, cal.flagged};
  };
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  if (trace.empty()) return;
  const Eigen::Index q = trace.front().alpha.size();
  os << "step";
  for (Eigen::Index j = 0; j < q; ++j) os << ",alpha_" << (j + 1);
  os << ",kappa,value,se,cost,stage\n";
  os.precision(17);
  for (const TraceRow& r : trace) {
    os << r.step;
    for (Eigen::Index j = 0; j < q; ++j) os << ',' << r.alpha(j);
    os << ',' << r.eval.kappa << ',' << r.eval.value << ',' << r.eval.se << ',' << r.eval.cost << ','
       << to_string(r.stage) << '\n';
  }
}

struct AlphaDraw {
  std::size_t draw_index = 0;
  Eigen::VectorXd alpha;
  double kappa = 0.0;
  Evaluation eval;
};

// Runs the search separately under n_draws posterior draws chosen without
// replacement, giving a posterior sample of the optimal direction.
inline std::vector<AlphaDraw> posterior_alpha_distribution(const ModelSource& posterior, std::size_t n_draws,
                                                           const FeatureSpec& spec, const ScoreReference& reference,
                                                           const PolicyObjectiveConfig& obj_cfg,
                                                           const SearchConfig& cfg, Rng& rng) {
  if (n_draws < 1 || n_draws > posterior.size())
    throw std::invalid_argument("posterior_alpha_distribution: n_draws must be in [1, chain length]");
  std::vector<std::size_t> idx(posterior.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < n_draws; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, idx.size() - 1)(rng);
    std::swap(idx[i], idx[j]);
  }
  std::vector<AlphaDraw> out;
  for (std::size_t i = 0; i < n_draws; ++i) {
    const ModelSource single = posterior.draw(idx[i]);
    Rng sub = make_rng(rng(), i);
    const SearchResult r = search(policy_objective(single, spec, reference, obj_cfg), cfg, sub);
    out.push_back({idx[i], r.alpha, r.kappa, r.final_eval});
  }
  return out;
}

}  // namespace bnpdtr::gp

#endif
