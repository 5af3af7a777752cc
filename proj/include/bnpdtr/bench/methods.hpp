#ifndef BNPDTR_BENCH_METHODS_HPP
#define BNPDTR_BENCH_METHODS_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bnpdtr/bench/dgp.hpp"
#include "bnpdtr/dpm/gibbs.hpp"
#include "bnpdtr/gp/search.hpp"
#include "bnpdtr/policy/calibrate.hpp"
#include "bnpdtr/value/estimate.hpp"

namespace bnpdtr::bench {

enum class Method { baseline, gaussian, dpm, oracle };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::baseline: return "baseline";
    case Method::gaussian: return "gaussian";
    case Method::dpm: return "dpm";
    case Method::oracle: return "oracle";
  }
  return "baseline";
}

inline Method parse_method(const std::string& s) {
  if (s == "baseline") return Method::baseline;
  if (s == "gaussian") return Method::gaussian;
  if (s == "dpm") return Method::dpm;
  if (s == "oracle") return Method::oracle;
  throw std::invalid_argument("unknown method '" + s + "'");
}

struct ScenarioSpec {
  Allocation allocation = Allocation::single;
  std::size_t n_subjects = 1000;
  std::size_t n_datasets = 10;
  UtilityKind utility = UtilityKind::average;
  std::uint64_t seed = 0;

  double prob_group1() const { return group1_probability(allocation); }
};

struct BenchConfig {
  std::size_t gibbs_iter = 2000;
  std::size_t gibbs_burnin = 1000;
  std::size_t gibbs_thin = 1;
  std::size_t gaussian_L = 1;
  std::size_t dpm_L = 5;
  gp::SearchConfig search{};
  gp::PolicyObjectiveConfig objective{};
  std::size_t n_truth = 1000000;
  std::size_t n_under_fit = 100000;
  std::size_t n_reference = 2000;  // simulated reference cohort for oracle calibration
  unsigned threads = 1;

  // Defaults from the study description, with reduced search sizes
  // selectable for desk-scale runs.
  static BenchConfig full_scale() {
    BenchConfig c;
    c.gibbs_iter = 5000;
    return c;
  }
};

struct MethodResult {
  Method method = Method::baseline;
  std::optional<Eigen::VectorXd> alpha;
  double kappa = 0.0;
  ValueEstimate under_truth;
  std::optional<ValueEstimate> under_fit;
  std::optional<gp::SearchResult> search;
  double seconds = 0.0;
};

inline dpm::FitOptions study_fit_options(const BenchConfig& cfg) {
  dpm::FitOptions o;
  o.mode = ModelMode::basic;
  o.delta_coding = DeltaCoding{DeltaTransform::centered, 6.0};
  o.n_iter = cfg.gibbs_iter;
  o.n_burnin = cfg.gibbs_burnin;
  o.thin = cfg.gibbs_thin;
  return o;
}

inline dpm::PosteriorChain fit_study_model(std::span<const Trajectory> data, std::size_t L, const BenchConfig& cfg,
                                          std::uint64_t seed) {
  dpm::HyperParams h = dpm::HyperParams::defaults_for(ModelMode::basic);
  h.L = L;
  Rng rng = make_rng(seed, 0);
  return dpm::fit(data, h, study_fit_options(cfg), rng, seed);
}

inline gp::PolicyObjectiveConfig objective_for(const ScenarioSpec& sc, const BenchConfig& cfg) {
  gp::PolicyObjectiveConfig o = cfg.objective;
  o.utility = UtilitySpec{sc.utility, kStudyHorizon};
  o.calibration.horizon = kStudyHorizon;
  o.threads = cfg.threads;
  o.calibration.threads = cfg.threads;
  return o;
}

// Same policy evaluated under the fitted posterior and under the truth.
struct Misspecification {
  ValueEstimate under_fit;
  ValueEstimate under_truth;
  double gap() const { return under_fit.value - under_truth.value; }
};

inline Misspecification misspecification_report(const ModelSource& fitted, const ModelSource& truth,
                                                const Policy& policy, const UtilitySpec& utility, std::size_t n,
                                                std::uint64_t seed, unsigned threads = 1) {
  return {estimate_value(fitted, policy, utility, n, mix_seed(seed, 1), threads),
          estimate_value(truth, policy, utility, n, mix_seed(seed, 2), threads)};
}

// One method on one dataset. Final value and mean recall are always
// re-estimated under the true model; the dataset is ignored by the baseline
// and oracle methods.
inline MethodResult run_method(Method method, std::span<const Trajectory> dataset, const ScenarioSpec& sc,
                               const BenchConfig& cfg, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelSource truth = ModelSource::fixed(study_dgp(sc.prob_group1()));
  const FeatureSpec spec = FeatureSpec::simulation_study();
  const gp::PolicyObjectiveConfig obj = objective_for(sc, cfg);
  MethodResult res;
  res.method = method;

  if (method == Method::baseline) {
    res.under_truth = estimate_value(truth, ConstantAction{6.0}, obj.utility, cfg.n_truth, mix_seed(seed, 9),
                                     cfg.threads);
  } else {
    ModelSource source;
    ScoreReference reference;
    if (method == Method::oracle) {
      source = truth;
      reference = simulated_reference(truth, spec, cfg.n_reference, kStudyHorizon, mix_seed(seed, 3), 6.0,
                                      cfg.threads);
    } else {
      if (dataset.empty()) throw std::invalid_argument("run_method: model-based methods need training data");
      const std::size_t L = method == Method::gaussian ? cfg.gaussian_L : cfg.dpm_L;
      source = ModelSource::posterior(fit_study_model(dataset, L, cfg, mix_seed(seed, 4)));
      reference = reference_from_trajectories(dataset, spec, true);
    }
    Rng rng = make_rng(seed, 5);
    gp::SearchResult sr = gp::search(gp::policy_objective(source, spec, reference, obj), cfg.search, rng);
    const Policy pol{sr.alpha, sr.kappa, obj.calibration.a1, obj.calibration.a2, spec};
    res.alpha = sr.alpha;
    res.kappa = sr.kappa;
    res.under_truth = estimate_value(truth, pol, obj.utility, cfg.n_truth, mix_seed(seed, 9), cfg.threads);
    if (method != Method::oracle)
      res.under_fit = estimate_value(source, pol, obj.utility, cfg.n_under_fit, mix_seed(seed, 10), cfg.threads);
    res.search = std::move(sr);
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

struct CellSummary {
  Allocation allocation = Allocation::single;
  UtilityKind utility = UtilityKind::average;
  Method method = Method::baseline;
  double value = 0.0;
  double mean_recall = 0.0;
  double se = 0.0;  // across datasets, or the MC standard error for one run
  std::size_t runs = 0;
};

inline CellSummary summarize(const ScenarioSpec& sc, Method m, const std::vector<MethodResult>& runs) {
  if (runs.empty()) throw std::invalid_argument("summarize: no runs");
  CellSummary c{sc.allocation, sc.utility, m, 0.0, 0.0, 0.0, runs.size()};
  for (const auto& r : runs) {
    c.value += r.under_truth.value;
    c.mean_recall += r.under_truth.cost;
  }
  const double n = static_cast<double>(runs.size());
  c.value /= n;
  c.mean_recall /= n;
  if (runs.size() == 1) {
    c.se = runs.front().under_truth.std_error;
  } else {
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.under_truth.value - c.value) * (r.under_truth.value - c.value);
    c.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return c;
}

inline void write_table1_header(std::ostream& os) { os << "scenario,utility,method,value,mean_recall,se,runs\n"; }

inline void write_table1_row(std::ostream& os, const CellSummary& c) {
  const auto old = os.precision(10);
  os << to_string(c.allocation) << ',' << to_string(c.utility) << ',' << to_string(c.method) << ',' << c.value << ','
     << c.mean_recall << ',' << c.se << ',' << c.runs << '\n';
  os.precision(old);
}

}  // namespace bnpdtr::bench

#endif
