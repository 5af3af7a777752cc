// bnpdtr command-line front end. Each subcommand reads its inputs from files,
// writes versioned artifacts under the output root and prints one JSON
// summary line on stdout. Log lines go to stderr.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bnpdtr/bench/clinical.hpp"
#include "bnpdtr/bench/methods.hpp"
#include "bnpdtr/io/model_json.hpp"
#include "bnpdtr/io/policy_json.hpp"
#include "bnpdtr/io/trajectory_csv.hpp"
#include "bnpdtr/stats/smooth.hpp"

using namespace bnpdtr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Collects every violation before failing.
struct Violations {
  std::vector<std::string> items;
  void check(bool ok, const std::string& msg) {
    if (!ok) items.push_back(msg);
  }
  void raise() const {
    if (items.empty()) return;
    std::string all = "invalid configuration:";
    for (const auto& s : items) all += "\n  - " + s;
    throw ConfigError(all);
  }
};

struct Log {
  std::string command;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void line(const std::string& level, const std::string& stage, const std::string& msg, const json& fields = {}) const {
    json j = {{"level", level},
              {"cmd", command},
              {"stage", stage},
              {"wall_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()},
              {"msg", msg}};
    if (fields.is_object())
      for (auto it = fields.begin(); it != fields.end(); ++it) j[it.key()] = it.value();
    std::cerr << j.dump() << std::endl;
  }
  void info(const std::string& stage, const std::string& msg, const json& f = {}) const { line("info", stage, msg, f); }
  void warn(const std::string& stage, const std::string& msg, const json& f = {}) const { line("warn", stage, msg, f); }
};

struct Global {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out_root;
  std::string config_hash;
  std::string command;
};

fs::path output_path(const Global& g, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute()) return path;
  return fs::path(g.out_root) / path;
}

json provenance(const Global& g, const json& extra = json::object()) {
  json j = {{"tool", "bnpdtr"},      {"version", kVersion}, {"command", g.command},
            {"seed", g.seed},         {"config_hash", g.config_hash}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// CSV artifacts carry their provenance in a sidecar document.
void write_sidecar(const fs::path& csv, const Global& g, const std::string& schema, const json& extra = {}) {
  json j = {{"schema", schema}, {"schema_version", 1}, {"artifact", csv.filename().string()},
            {"provenance", provenance(g, extra.is_object() ? extra : json::object())}};
  write_json(fs::path(csv.string() + ".meta.json"), j);
}

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return json::parse(is);
}

std::vector<Trajectory> read_data(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return io::read_trajectories_csv(is);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

// ---------------------------------------------------------------------------
// Model sources, feature specs and score references shared by commands.

struct SourceOpts {
  std::string model = "dgp";  // dgp | chain | file
  std::string dgp = "single";  // single | mixture | clinical
  std::string path;

  void add(CLI::App* sub) {
    sub->add_option("--model", model, "Dynamics used for simulation")
        ->check(CLI::IsMember({"dgp", "chain", "file"}))
        ->capture_default_str();
    sub->add_option("--dgp", dgp, "Built-in true model when --model dgp")
        ->check(CLI::IsMember({"single", "mixture", "clinical"}))
        ->capture_default_str();
    sub->add_option("--model-path", path, "Chain or model JSON when --model chain|file");
  }
  void validate(Violations& v) const {
    v.check(model == "dgp" || !path.empty(), "--model " + model + " requires --model-path");
    v.check(path.empty() || fs::exists(path), "model path does not exist: " + path);
  }
  ModelSource load() const {
    if (model == "chain") return ModelSource::posterior(io::chain_from_json(read_json(path)));
    if (model == "file") return ModelSource::fixed(io::model_from_json(read_json(path)));
    if (dgp == "clinical") return ModelSource::fixed(bench::synthetic_clinical_model());
    return ModelSource::fixed(bench::study_dgp(bench::parse_allocation(dgp)));
  }
  json describe() const { return {{"model", model}, {"dgp", dgp}, {"path", path}}; }
};

FeatureSpec feature_spec_named(const std::string& name) {
  return name == "clinical" ? FeatureSpec::clinical() : FeatureSpec::simulation_study();
}

ScoreReference make_reference(const std::string& data_path, const ModelSource& src, const FeatureSpec& spec,
                              double horizon, std::uint64_t seed, unsigned threads) {
  if (!data_path.empty()) return reference_from_trajectories(read_data(data_path), spec, true);
  return simulated_reference(src, spec, 2000, horizon, seed, 6.0, threads);
}

struct PolicyConfigOpts {
  double target = 6.0;
  std::size_t n1 = 2000;
  std::size_t n2 = 20000;
  double horizon = 60.0;
  std::string utility = "reduction";
  std::string features = "study";
  std::string data;

  void add(CLI::App* sub, bool with_value) {
    sub->add_option("--target-cost", target, "Target mean recommended interval T (months)")->capture_default_str();
    sub->add_option("--n1", n1, "Subjects per calibration grid point")->capture_default_str();
    if (with_value) {
      sub->add_option("--n2", n2, "Subjects per value estimate")->capture_default_str();
      sub->add_option("--utility", utility, "Utility function")
          ->check(CLI::IsMember({"average", "reduction"}))
          ->capture_default_str();
    }
    sub->add_option("--horizon", horizon, "Horizon in months")->capture_default_str();
    sub->add_option("--features", features, "Risk-score features")
        ->check(CLI::IsMember({"study", "clinical"}))
        ->capture_default_str();
    sub->add_option("--data", data, "Training data CSV giving the risk-score range");
  }
  void validate(Violations& v) const {
    v.check(target >= 3.0 && target <= 9.0, "--target-cost must lie in [3, 9]");
    v.check(n1 > 0, "--n1 must be positive");
    v.check(n2 > 0, "--n2 must be positive");
    v.check(horizon > 0.0, "--horizon must be positive");
    v.check(data.empty() || fs::exists(data), "data file does not exist: " + data);
  }
  gp::PolicyObjectiveConfig objective(unsigned threads) const {
    gp::PolicyObjectiveConfig o;
    o.calibration.target = target;
    o.calibration.n1 = n1;
    o.calibration.horizon = horizon;
    o.calibration.threads = threads;
    o.utility = UtilitySpec{parse_utility_kind(utility), horizon};
    o.n2 = n2;
    o.threads = threads;
    return o;
  }
};

json summary(const Global& g, const std::vector<std::string>& artifacts, const json& extra = {}) {
  json j = {{"status", "ok"}, {"command", g.command}, {"seed", g.seed}, {"config_hash", g.config_hash},
            {"artifacts", artifacts}};
  if (extra.is_object())
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOpts {
  std::string dgp = "single";
  std::size_t n = 1000;
  std::string behavior = "observational";
  double constant_action = 6.0;
  std::string out = "data.csv";
  std::string model_out;

  void add(CLI::App* sub) {
    sub->add_option("--dgp", dgp, "Generating model")
        ->check(CLI::IsMember({"single", "mixture", "clinical"}))
        ->capture_default_str();
    sub->add_option("--n", n, "Number of subjects")->capture_default_str();
    sub->add_option("--behavior", behavior, "Recommendation policy used in the data")
        ->check(CLI::IsMember({"observational", "constant"}))
        ->capture_default_str();
    sub->add_option("--constant-action", constant_action, "Months when --behavior constant")->capture_default_str();
    sub->add_option("--out", out, "Trajectory CSV")->capture_default_str();
    sub->add_option("--model-out", model_out, "Also write the generating model as JSON");
  }
  void validate(Violations& v) const {
    v.check(n > 0, "--n must be positive");
    v.check(constant_action > 0.0, "--constant-action must be positive");
  }
};

json run_simulate(const Global& g, const SimulateOpts& o, const Log& log) {
  const MixtureModel m = o.dgp == "clinical" ? bench::synthetic_clinical_model()
                                             : bench::study_dgp(bench::parse_allocation(o.dgp));
  const PreparedModel pm(m);
  Rng rng = make_rng(g.seed, 0);
  std::vector<Trajectory> data(o.n);
  if (o.behavior == "constant") {
    for (auto& tr : data) sample_subject_into(tr, pm, ConstantAction{o.constant_action}, bench::kStudyHorizon, rng);
  } else if (o.dgp == "clinical") {
    const LogisticBehavior beh{3.0, 9.0, -1.0, 8.0};
    for (auto& tr : data) sample_subject_into(tr, pm, beh, bench::kStudyHorizon, rng);
  } else {
    data = bench::generate_dataset(bench::parse_allocation(o.dgp), o.n, rng);
  }
  std::ostringstream os;
  io::write_trajectories_csv(os, data);
  const fs::path out = output_path(g, o.out);
  write_text(out, os.str());
  write_sidecar(out, g, "bnpdtr.trajectories", {{"dgp", o.dgp}, {"n", o.n}, {"behavior", o.behavior}});
  std::vector<std::string> arts{out.string()};
  if (!o.model_out.empty()) {
    json mj = io::model_to_json(m);
    mj["provenance"] = provenance(g);
    const fs::path mp = output_path(g, o.model_out);
    write_json(mp, mj);
    arts.push_back(mp.string());
  }
  std::size_t visits = 0;
  for (const auto& tr : data) visits += tr.visits.size();
  log.info("simulate", "wrote trajectories", {{"n_subjects", o.n}, {"n_visits", visits}});
  return summary(g, arts, {{"n_subjects", o.n}, {"n_visits", visits}});
}

// ---------------------------------------------------------------------------
// fit

struct FitOpts {
  std::string data;
  std::string mode = "basic";
  std::size_t L = 0;  // 0: mode default
  std::size_t iters = 2000;
  std::size_t burnin = 1000;
  std::size_t thin = 1;
  std::string delta;  // raw | centered | log, empty: mode default
  double delta_center = 6.0;
  std::string binary_mask;
  double alpha0 = 1.0;
  std::string out = "chain.json";

  void add(CLI::App* sub) {
    sub->add_option("--data", data, "Trajectory CSV")->required();
    sub->add_option("--mode", mode, "Dynamics model")
        ->check(CLI::IsMember({"basic", "extended"}))
        ->capture_default_str();
    sub->add_option("--L", L, "Truncation level (default 5 basic, 10 extended)");
    sub->add_option("--iters", iters, "Gibbs sweeps")->capture_default_str();
    sub->add_option("--burnin", burnin, "Discarded sweeps")->capture_default_str();
    sub->add_option("--thin", thin, "Keep every thin-th sweep")->capture_default_str();
    sub->add_option("--delta", delta, "Elapsed-time coding in the progression design")
        ->check(CLI::IsMember({"raw", "centered", "log"}));
    sub->add_option("--delta-center", delta_center, "Centre for --delta centered")->capture_default_str();
    sub->add_option("--binary-mask", binary_mask, "Comma list of 0/1 flags marking binary covariates");
    sub->add_option("--alpha0", alpha0, "DP concentration")->capture_default_str();
    sub->add_option("--out", out, "Posterior chain JSON")->capture_default_str();
  }
  void validate(Violations& v) const {
    v.check(fs::exists(data), "data file does not exist: " + data);
    v.check(iters > burnin, "--iters must exceed --burnin");
    v.check(thin >= 1, "--thin must be >= 1");
    v.check(alpha0 > 0.0, "--alpha0 must be positive");
    v.check(mode == "extended" || binary_mask.empty(), "--binary-mask only applies to --mode extended");
  }
};

json run_fit(const Global& g, const FitOpts& o, const Log& log) {
  const auto data = read_data(o.data);
  const ModelMode mode = parse_mode(o.mode);
  dpm::HyperParams h = dpm::HyperParams::defaults_for(mode);
  if (o.L > 0) h.L = o.L;
  h.alpha0 = o.alpha0;
  dpm::FitOptions fo;
  fo.mode = mode;
  fo.delta_coding = o.delta.empty() ? DeltaCoding::for_mode(mode)
                                    : DeltaCoding{parse_delta_transform(o.delta), o.delta_center};
  for (double x : parse_list(o.binary_mask)) fo.binary_mask.push_back(x != 0.0);
  fo.n_iter = o.iters;
  fo.n_burnin = o.burnin;
  fo.thin = o.thin;
  log.info("fit", "starting Gibbs sampler",
           {{"n_subjects", data.size()}, {"L", h.L}, {"n_iter", o.iters}, {"n_burnin", o.burnin}});
  Rng rng = make_rng(g.seed, 0);
  const dpm::PosteriorChain chain = dpm::fit(data, h, fo, rng, g.seed);
  const fs::path out = output_path(g, o.out);
  write_json(out, io::chain_to_json(chain, provenance(g, {{"data", o.data}})));
  const double mean_ll = std::accumulate(chain.log_likelihood.begin(), chain.log_likelihood.end(), 0.0) /
                         static_cast<double>(chain.size());
  log.info("fit", "wrote chain", {{"n_kept", chain.size()}, {"mean_log_likelihood", mean_ll}});
  return summary(g, {out.string()}, {{"n_kept", chain.size()}, {"mean_log_likelihood", mean_ll}});
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOpts {
  SourceOpts source;
  PolicyConfigOpts policy;
  std::string alpha;
  std::string out = "policy.json";

  void add(CLI::App* sub) {
    source.add(sub);
    policy.add(sub, false);
    sub->add_option("--alpha", alpha, "Comma-separated feature weights (normalized internally)")->required();
    sub->add_option("--out", out, "Policy JSON")->capture_default_str();
  }
  void validate(Violations& v) const {
    source.validate(v);
    policy.validate(v);
    const auto a = parse_list(alpha);
    v.check(a.size() == feature_spec_named(policy.features).q(), "--alpha length must equal the feature count");
  }
};

json run_calibrate(const Global& g, const CalibrateOpts& o, const Log& log) {
  const ModelSource src = o.source.load();
  const FeatureSpec spec = feature_spec_named(o.policy.features);
  const auto raw = parse_list(o.alpha);
  const Eigen::VectorXd alpha = normalize_weights(Eigen::Map<const Eigen::VectorXd>(raw.data(), raw.size()));
  const ScoreReference ref = make_reference(o.policy.data, src, spec, o.policy.horizon, mix_seed(g.seed, 1), g.threads);
  const auto obj = o.policy.objective(g.threads);
  const CalibrationResult cal = calibrate_threshold(src, alpha, spec, ref, obj.calibration, mix_seed(g.seed, 2));
  if (cal.flagged) log.warn("calibrate", cal.warning);
  const Policy pol{alpha, cal.kappa, obj.calibration.a1, obj.calibration.a2, spec};
  json j = io::policy_to_json(pol, io::CalibrationRecord{o.policy.target, o.policy.n1, g.seed},
                              provenance(g, {{"source", o.source.describe()}}));
  j["calibration_curve"] = {{"kappa", cal.grid}, {"raw_cost", cal.raw_cost}, {"smoothed_cost", cal.smoothed_cost},
                            {"flagged", cal.flagged}};
  const fs::path out = output_path(g, o.out);
  write_json(out, j);
  log.info("calibrate", "calibrated threshold", {{"kappa", cal.kappa}, {"n1", o.policy.n1}, {"flagged", cal.flagged}});
  return summary(g, {out.string()}, {{"kappa", cal.kappa}, {"flagged", cal.flagged}});
}

// ---------------------------------------------------------------------------
// search

struct SearchOpts {
  SourceOpts source;
  PolicyConfigOpts policy;
  gp::SearchConfig search;
  std::size_t posterior_draws = 0;
  std::string out = "policy.json";
  std::string trace = "trace.csv";
  std::string alpha_draws = "alpha_draws.csv";

  void add(CLI::App* sub) {
    source.add(sub);
    policy.add(sub, true);
    sub->add_option("--M2", search.M2, "Sequential acquisitions")->capture_default_str();
    sub->add_option("--M3", search.M3, "Final predictive-mean candidates")->capture_default_str();
    sub->add_option("--n-acq", search.n_acq_candidates, "Candidates per acquisition")->capture_default_str();
    sub->add_option("--refit-interval", search.refit_interval, "Acquisitions between length-scale refits")
        ->capture_default_str();
    sub->add_option("--full-refit-interval", search.full_refit_interval,
                    "Refits between multi-start fits (0: first only)")
        ->capture_default_str();
    sub->add_option("--posterior-draws", posterior_draws,
                    "Also search separately under this many posterior draws")
        ->capture_default_str();
    sub->add_option("--out", out, "Policy JSON")->capture_default_str();
    sub->add_option("--trace", trace, "Search trace CSV")->capture_default_str();
    sub->add_option("--alpha-draws", alpha_draws, "Per-draw optimal weights CSV")->capture_default_str();
  }
  void validate(Violations& v) const {
    source.validate(v);
    policy.validate(v);
    v.check(search.M3 > 0, "--M3 must be positive");
    v.check(search.n_acq_candidates > 0, "--n-acq must be positive");
    v.check(search.refit_interval > 0, "--refit-interval must be positive");
    v.check(posterior_draws == 0 || source.model == "chain", "--posterior-draws requires --model chain");
  }
};

json run_search(const Global& g, const SearchOpts& o, const Log& log) {
  const ModelSource src = o.source.load();
  const FeatureSpec spec = feature_spec_named(o.policy.features);
  const ScoreReference ref = make_reference(o.policy.data, src, spec, o.policy.horizon, mix_seed(g.seed, 1), g.threads);
  const auto obj = o.policy.objective(g.threads);
  gp::SearchConfig cfg = o.search;
  cfg.q = spec.q();
  cfg.threads = g.threads;
  log.info("search", "starting policy search",
           {{"M1", cfg.M1()}, {"M2", cfg.M2}, {"M3", cfg.M3}, {"n1", obj.calibration.n1}, {"n2", obj.n2}});
  Rng rng = make_rng(g.seed, 0);
  const gp::SearchResult r = gp::search(gp::policy_objective(src, spec, ref, obj), cfg, rng);
  log.info("search", "search finished",
           {{"value", r.final_eval.value}, {"predicted", r.predicted_value}, {"cost", r.final_eval.cost}});

  const Policy pol{r.alpha, r.kappa, obj.calibration.a1, obj.calibration.a2, spec};
  json j = io::policy_to_json(pol, io::CalibrationRecord{o.policy.target, o.policy.n1, g.seed},
                              provenance(g, {{"source", o.source.describe()}}));
  j["final_evaluation"] = {{"value", r.final_eval.value}, {"se", r.final_eval.se}, {"cost", r.final_eval.cost},
                           {"predicted_value", r.predicted_value}, {"flagged", r.final_eval.flagged}};
  j["surrogate"] = {{"phi", io::to_json_vec(r.surrogate.phi())}, {"mu", r.surrogate.mu()},
                    {"sigma_sq", r.surrogate.sigma_sq()}, {"r", r.surrogate.r()}};
  const fs::path out = output_path(g, o.out);
  write_json(out, j);
  std::ostringstream os;
  gp::write_trace_csv(os, r.trace);
  const fs::path trace = output_path(g, o.trace);
  write_text(trace, os.str());
  write_sidecar(trace, g, "bnpdtr.trace");
  std::vector<std::string> arts{out.string(), trace.string()};

  if (o.posterior_draws > 0) {
    Rng arng = make_rng(g.seed, 1);
    const auto draws = gp::posterior_alpha_distribution(src, o.posterior_draws, spec, ref, obj, cfg, arng);
    std::ostringstream as;
    as.precision(17);
    as << "draw_index";
    for (std::size_t k = 1; k <= spec.q(); ++k) as << ",alpha_" << k;
    as << ",kappa,value,se,cost\n";
    for (const auto& d : draws) {
      as << d.draw_index;
      for (Eigen::Index k = 0; k < d.alpha.size(); ++k) as << ',' << d.alpha(k);
      as << ',' << d.kappa << ',' << d.eval.value << ',' << d.eval.se << ',' << d.eval.cost << '\n';
    }
    const fs::path ap = output_path(g, o.alpha_draws);
    write_text(ap, as.str());
    write_sidecar(ap, g, "bnpdtr.alpha_draws");
    arts.push_back(ap.string());
    log.info("search", "posterior draws searched", {{"n_draws", draws.size()}});
  }
  return summary(g, arts,
                 {{"alpha", io::to_json_vec(r.alpha)}, {"kappa", r.kappa}, {"value", r.final_eval.value},
                  {"cost", r.final_eval.cost}});
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
  SourceOpts source;
  std::string policy;
  std::string utility = "reduction";
  double horizon = 60.0;
  std::size_t n = 100000;
  std::string out = "value.json";

  void add(CLI::App* sub) {
    source.add(sub);
    sub->add_option("--policy", policy, "Policy JSON, or 'published-clinical' for the built-in clinical rule")
        ->required();
    sub->add_option("--utility", utility, "Utility function")
        ->check(CLI::IsMember({"average", "reduction"}))
        ->capture_default_str();
    sub->add_option("--horizon", horizon, "Horizon in months")->capture_default_str();
    sub->add_option("--n", n, "Simulated subjects")->capture_default_str();
    sub->add_option("--out", out, "Value estimate JSON")->capture_default_str();
  }
  void validate(Violations& v) const {
    source.validate(v);
    v.check(policy == "published-clinical" || fs::exists(policy), "policy file does not exist: " + policy);
    v.check(n > 0, "--n must be positive");
    v.check(horizon > 0.0, "--horizon must be positive");
  }
};

json run_evaluate(const Global& g, const EvaluateOpts& o, const Log& log) {
  const Policy pol = o.policy == "published-clinical" ? bench::published_clinical_policy()
                                                      : io::policy_from_json(read_json(o.policy));
  const ModelSource src = o.source.load();
  const std::size_t need = pol.feature_spec.q() == 0 ? 0 : [&] {
    std::size_t m = 0;
    for (const auto& f : pol.feature_spec.features)
      if (f.kind == FeatureKind::covariate || f.kind == FeatureKind::covariate_scaled) m = std::max(m, f.index + 1);
    return m;
  }();
  if (need > src.p())
    throw ConfigError("policy uses covariate " + std::to_string(need) + " but the model has " +
                      std::to_string(src.p()));
  const ValueEstimate e =
      estimate_value(src, pol, UtilitySpec{parse_utility_kind(o.utility), o.horizon}, o.n, g.seed, g.threads);
  json j = {{"schema", "bnpdtr.value"},
            {"schema_version", 1},
            {"estimate", io::value_estimate_json(e)},
            {"utility", o.utility},
            {"horizon", o.horizon},
            {"policy", o.policy},
            {"provenance", provenance(g, {{"source", o.source.describe()}})}};
  const fs::path out = output_path(g, o.out);
  write_json(out, j);
  log.info("evaluate", "value estimated", {{"value", e.value}, {"se", e.std_error}, {"cost", e.cost}, {"n", o.n}});
  return summary(g, {out.string()}, {{"value", e.value}, {"se", e.std_error}, {"cost", e.cost}});
}

// ---------------------------------------------------------------------------
// bench

struct BenchOpts {
  std::string scenario = "single";
  std::string utility = "average";
  std::size_t datasets = 0;  // 0: 10 at desk scale, 100 at full scale
  std::size_t n_subjects = 1000;
  std::string scale = "desk";
  std::vector<std::string> methods{"baseline", "gaussian", "dpm", "oracle"};
  std::size_t M2 = 200;
  std::size_t n_truth = 1000000;
  std::string out_dir = "bench";
  bool traces = false;

  void add(CLI::App* sub) {
    sub->add_option("--scenario", scenario, "Group allocation")
        ->check(CLI::IsMember({"single", "mixture"}))
        ->capture_default_str();
    sub->add_option("--utility", utility, "Utility function")
        ->check(CLI::IsMember({"average", "reduction"}))
        ->capture_default_str();
    sub->add_option("--datasets", datasets, "Replicate datasets (default 10 desk, 100 full)");
    sub->add_option("--n-subjects", n_subjects, "Subjects per dataset")->capture_default_str();
    sub->add_option("--scale", scale, "desk: 2000 Gibbs sweeps; full: 5000")
        ->check(CLI::IsMember({"desk", "full"}))
        ->capture_default_str();
    sub->add_option("--methods", methods, "Methods to run")
        ->check(CLI::IsMember({"baseline", "gaussian", "dpm", "oracle"}))
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--M2", M2, "Sequential acquisitions per search")->capture_default_str();
    sub->add_option("--n-truth", n_truth, "Subjects for the final evaluation under the true model")
        ->capture_default_str();
    sub->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
    sub->add_flag("--traces", traces, "Write a search trace per run");
  }
  void validate(Violations& v) const {
    v.check(n_subjects > 0, "--n-subjects must be positive");
    v.check(n_truth > 0, "--n-truth must be positive");
    v.check(!methods.empty(), "--methods must not be empty");
  }
};

json method_result_json(const bench::MethodResult& r, std::size_t dataset) {
  json j = {{"dataset", dataset},
            {"method", bench::to_string(r.method)},
            {"under_truth", io::value_estimate_json(r.under_truth)},
            {"kappa", r.kappa},
            {"seconds", r.seconds}};
  j["alpha"] = r.alpha ? io::to_json_vec(*r.alpha) : json(nullptr);
  j["under_fit"] = r.under_fit ? io::value_estimate_json(*r.under_fit) : json(nullptr);
  return j;
}

json run_bench(const Global& g, const BenchOpts& o, const Log& log) {
  bench::ScenarioSpec sc;
  sc.allocation = bench::parse_allocation(o.scenario);
  sc.utility = parse_utility_kind(o.utility);
  sc.n_subjects = o.n_subjects;
  sc.n_datasets = o.datasets > 0 ? o.datasets : (o.scale == "full" ? 100 : 10);
  sc.seed = g.seed;
  bench::BenchConfig cfg = o.scale == "full" ? bench::BenchConfig::full_scale() : bench::BenchConfig{};
  cfg.search.M2 = o.M2;
  cfg.n_truth = o.n_truth;
  cfg.threads = g.threads;
  cfg.search.threads = g.threads;

  const fs::path dir = output_path(g, o.out_dir);
  fs::create_directories(dir / "runs");
  std::map<bench::Method, std::vector<bench::MethodResult>> results;
  json runs = json::array();
  std::vector<std::string> arts;
  for (std::size_t d = 0; d < sc.n_datasets; ++d) {
    Rng rng = make_rng(mix_seed(g.seed, 1), d);
    const auto data = bench::generate_dataset(sc.allocation, sc.n_subjects, rng);
    for (const std::string& name : o.methods) {
      const bench::Method m = bench::parse_method(name);
      const std::uint64_t seed = mix_seed(mix_seed(g.seed, 2 + static_cast<std::uint64_t>(m)), d);
      bench::MethodResult r = bench::run_method(m, data, sc, cfg, seed);
      json rj = method_result_json(r, d);
      rj["seed"] = seed;
      log.info("bench", "run finished",
               {{"dataset", d}, {"method", name}, {"value", r.under_truth.value}, {"cost", r.under_truth.cost},
                {"seconds", r.seconds}, {"n_truth", cfg.n_truth}});
      const fs::path rp = dir / "runs" / (name + "_" + std::to_string(d) + ".json");
      json doc = {{"schema", "bnpdtr.bench_run"}, {"schema_version", 1}, {"result", rj},
                  {"provenance", provenance(g)}};
      write_json(rp, doc);
      if (o.traces && r.search) {
        std::ostringstream ts;
        gp::write_trace_csv(ts, r.search->trace);
        write_text(dir / "runs" / (name + "_" + std::to_string(d) + "_trace.csv"), ts.str());
      }
      runs.push_back(rj);
      r.search.reset();
      results[m].push_back(std::move(r));
    }
  }
  json doc = {{"schema", "bnpdtr.bench"},
              {"schema_version", 1},
              {"scenario",
               {{"allocation", o.scenario},
                {"utility", o.utility},
                {"n_subjects", sc.n_subjects},
                {"n_datasets", sc.n_datasets},
                {"scale", o.scale}}},
              {"runs", runs},
              {"provenance", provenance(g)}};
  write_json(dir / "runs.json", doc);
  arts.push_back((dir / "runs.json").string());

  std::ostringstream table;
  bench::write_table1_header(table);
  json cells = json::array();
  for (const auto& [m, rs] : results) {
    const bench::CellSummary c = bench::summarize(sc, m, rs);
    bench::write_table1_row(table, c);
    cells.push_back({{"method", bench::to_string(m)}, {"value", c.value}, {"mean_recall", c.mean_recall}, {"se", c.se}});
  }
  write_text(dir / "table1.csv", table.str());
  write_sidecar(dir / "table1.csv", g, "bnpdtr.table1");
  arts.push_back((dir / "table1.csv").string());
  return summary(g, arts, {{"cells", cells}});
}

// ---------------------------------------------------------------------------
// report

struct ReportOpts {
  std::string kind = "table1";
  std::vector<std::string> inputs;
  std::string out;

  void add(CLI::App* sub) {
    sub->add_option("--kind", kind, "table1: rounded Table-1 rows from bench runs; alpha: quantiles of "
                                    "per-draw weights; scatter: value under fit vs truth")
        ->check(CLI::IsMember({"table1", "alpha", "scatter"}))
        ->capture_default_str();
    sub->add_option("--input", inputs, "bench runs.json (table1, scatter) or alpha draws CSV (alpha)")->required();
    sub->add_option("--out", out, "Output CSV (default <kind>.csv)");
  }
  void validate(Violations& v) const {
    for (const auto& p : inputs) v.check(fs::exists(p), "input does not exist: " + p);
  }
};

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    rows.push_back(io::detail::split_csv_line(line));
  }
  return rows;
}

json run_report(const Global& g, const ReportOpts& o, const Log& log) {
  std::ostringstream os;
  char buf[64];
  auto two = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  if (o.kind == "alpha") {
    os << "component,p5,p25,p50,p75,p95\n";
    for (const auto& path : o.inputs) {
      const auto rows = read_csv_rows(path);
      if (rows.size() < 2) throw std::runtime_error(path + ": no draws");
      const auto& head = rows.front();
      for (std::size_t c = 0; c < head.size(); ++c) {
        if (head[c].rfind("alpha_", 0) != 0) continue;
        std::vector<double> v;
        for (std::size_t r = 1; r < rows.size(); ++r) v.push_back(std::stod(rows[r].at(c)));
        os << head[c];
        for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) os << ',' << io::detail::format_double(stats::quantile(v, q));
        os << '\n';
      }
    }
  } else {
    if (o.kind == "table1") os << "scenario,utility,method,value,mean_recall,se,runs\n";
    else os << "scenario,utility,method,dataset,value_under_fit,value_under_truth\n";
    for (const auto& path : o.inputs) {
      const json doc = read_json(path);
      if (doc.value("schema", std::string{}) != "bnpdtr.bench") throw io::SchemaError(path + ": not a bench document");
      bench::ScenarioSpec sc;
      sc.allocation = bench::parse_allocation(doc.at("scenario").at("allocation").get<std::string>());
      sc.utility = parse_utility_kind(doc.at("scenario").at("utility").get<std::string>());
      std::map<bench::Method, std::vector<bench::MethodResult>> by_method;
      for (const json& r : doc.at("runs")) {
        bench::MethodResult m;
        m.method = bench::parse_method(r.at("method").get<std::string>());
        m.under_truth = io::value_estimate_from_json(r.at("under_truth"));
        if (o.kind == "scatter") {
          if (r.at("under_fit").is_null()) continue;
          const ValueEstimate fit = io::value_estimate_from_json(r.at("under_fit"));
          os << bench::to_string(sc.allocation) << ',' << to_string(sc.utility) << ',' << bench::to_string(m.method)
             << ',' << r.at("dataset").get<std::size_t>() << ',' << io::detail::format_double(fit.value) << ','
             << io::detail::format_double(m.under_truth.value) << '\n';
        }
        by_method[m.method].push_back(std::move(m));
      }
      if (o.kind == "table1")
        for (const auto& [m, rs] : by_method) {
          const auto c = bench::summarize(sc, m, rs);
          os << bench::to_string(c.allocation) << ',' << to_string(c.utility) << ',' << bench::to_string(c.method)
             << ',' << two(c.value) << ',' << two(c.mean_recall) << ',' << two(c.se) << ',' << c.runs << '\n';
        }
    }
  }
  const fs::path out = output_path(g, o.out.empty() ? o.kind + ".csv" : o.out);
  write_text(out, os.str());
  write_sidecar(out, g, "bnpdtr.report", {{"kind", o.kind}, {"inputs", o.inputs}});
  log.info("report", "wrote report", {{"kind", o.kind}});
  return summary(g, {out.string()});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian nonparametric policy search for recall intervals"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "INI-style configuration; command-line flags take precedence");
  app.require_subcommand(1);

  Global g;
  app.add_option("--seed", g.seed, "Master seed (required)")->required();
  app.add_option("--threads", g.threads, "Worker threads (0: hardware concurrency)")->capture_default_str();
  const char* root = std::getenv("BNPDTR_OUTPUT_ROOT");
  g.out_root = root ? root : ".";
  app.add_option("--output-root", g.out_root, "Directory for relative output paths (env BNPDTR_OUTPUT_ROOT)")
      ->capture_default_str();

  SimulateOpts sim;
  FitOpts fit;
  CalibrateOpts cal;
  SearchOpts srch;
  EvaluateOpts eval;
  BenchOpts bnch;
  ReportOpts rep;
  CLI::App* c_sim = app.add_subcommand("simulate", "Generate trajectories from a built-in model");
  CLI::App* c_fit = app.add_subcommand("fit", "Fit the DP mixture by Gibbs sampling");
  CLI::App* c_cal = app.add_subcommand("calibrate", "Calibrate the threshold of a given direction");
  CLI::App* c_srch = app.add_subcommand("search", "Search for the optimal cost-constrained policy");
  CLI::App* c_eval = app.add_subcommand("evaluate", "Estimate value and cost of a policy");
  CLI::App* c_bnch = app.add_subcommand("bench", "Run the simulation-study comparison");
  CLI::App* c_rep = app.add_subcommand("report", "Emit plot-ready CSV from artifacts");
  sim.add(c_sim);
  fit.add(c_fit);
  cal.add(c_cal);
  srch.add(c_srch);
  eval.add(c_eval);
  bnch.add(c_bnch);
  rep.add(c_rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  Log log;
  try {
    const CLI::App* sub = app.get_subcommands().front();
    g.command = sub->get_name();
    log.command = g.command;
    std::string cfg_text = app.config_to_str(true, false);
    // The output root and config path do not change results.
    std::stringstream ss(cfg_text);
    std::string line, canon;
    while (std::getline(ss, line))
      if (line.rfind("output-root", 0) != 0 && line.rfind("config", 0) != 0) canon += line + "\n";
    g.config_hash = io::hex64(io::fnv1a64(canon));

    Violations v;
    v.check(fs::is_directory(g.out_root) || !fs::exists(g.out_root), "output root is not a directory: " + g.out_root);
    if (sub == c_sim) sim.validate(v);
    if (sub == c_fit) fit.validate(v);
    if (sub == c_cal) cal.validate(v);
    if (sub == c_srch) srch.validate(v);
    if (sub == c_eval) eval.validate(v);
    if (sub == c_bnch) bnch.validate(v);
    if (sub == c_rep) rep.validate(v);
    v.raise();
    fs::create_directories(g.out_root);

    log.info("start", "configuration accepted", {{"seed", g.seed}, {"threads", g.threads}, {"config_hash", g.config_hash}});
    json result;
    if (sub == c_sim) result = run_simulate(g, sim, log);
    if (sub == c_fit) result = run_fit(g, fit, log);
    if (sub == c_cal) result = run_calibrate(g, cal, log);
    if (sub == c_srch) result = run_search(g, srch, log);
    if (sub == c_eval) result = run_evaluate(g, eval, log);
    if (sub == c_bnch) result = run_bench(g, bnch, log);
    if (sub == c_rep) result = run_report(g, rep, log);
    result["wall_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - log.t0).count();
    std::cout << result.dump() << std::endl;
    return 0;
  } catch (const std::exception& e) {
    log.line("error", "fatal", e.what());
    std::cout << json{{"status", "error"}, {"command", g.command}, {"error", e.what()}}.dump() << std::endl;
    return 1;
  }
}
