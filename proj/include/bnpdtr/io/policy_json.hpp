#ifndef BNPDTR_IO_POLICY_JSON_HPP
#define BNPDTR_IO_POLICY_JSON_HPP

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "bnpdtr/io/model_json.hpp"
#include "bnpdtr/policy/policy.hpp"
#include "bnpdtr/value/estimate.hpp"

namespace bnpdtr::io {

inline constexpr int kPolicySchemaVersion = 1;

inline json feature_spec_json(const FeatureSpec& s) {
  json feats = json::array();
  for (const FeatureDescriptor& f : s.features)
    feats.push_back({{"kind", to_string(f.kind)}, {"index", f.index}, {"scale", f.scale}});
  return {{"features", feats}, {"initial_action", s.initial_action}, {"initial_delta", s.initial_delta}};
}

inline FeatureSpec feature_spec_from_json(const json& j) {
  FeatureSpec s;
  for (const json& f : j.at("features"))
    s.features.push_back({parse_feature_kind(f.at("kind").get<std::string>()), f.value("index", std::size_t{0}),
                          f.value("scale", 1.0)});
  s.initial_action = j.value("initial_action", 6.0);
  s.initial_delta = j.value("initial_delta", 6.0);
  return s;
}

struct CalibrationRecord {
  double target = 6.0;
  std::size_t n1 = 0;
  std::uint64_t seed = 0;
};

inline json policy_to_json(const Policy& p, const std::optional<CalibrationRecord>& cal = std::nullopt,
                           const json& provenance = json::object()) {
  json j = {{"schema", "bnpdtr.policy"},
            {"schema_version", kPolicySchemaVersion},
            {"alpha", to_json_vec(p.alpha)},
            {"kappa", p.kappa},
            {"a1", p.a1},
            {"a2", p.a2},
            {"feature_spec", feature_spec_json(p.feature_spec)},
            {"provenance", provenance}};
  if (cal) j["calibration"] = {{"T", cal->target}, {"n1", cal->n1}, {"seed", cal->seed}};
  return j;
}

inline Policy policy_from_json(const json& j) {
  if (j.value("schema", std::string{}) != "bnpdtr.policy") throw SchemaError("policy document: wrong schema tag");
  if (j.at("schema_version").get<int>() != kPolicySchemaVersion)
    throw SchemaError("policy document: unsupported schema version");
  Policy p{vec_from_json(j.at("alpha")), j.at("kappa").get<double>(), j.at("a1").get<double>(),
           j.at("a2").get<double>(), feature_spec_from_json(j.at("feature_spec"))};
  p.validate();
  return p;
}

inline json value_estimate_json(const ValueEstimate& e) {
  return {{"value", e.value},   {"std_error", e.std_error}, {"n_subjects", e.n_subjects},
          {"cost", e.cost},     {"cost_se", e.cost_se},     {"seed", e.seed}};
}

inline ValueEstimate value_estimate_from_json(const json& j) {
  ValueEstimate e;
  e.value = j.at("value").get<double>();
  e.std_error = j.at("std_error").get<double>();
  e.n_subjects = j.at("n_subjects").get<std::size_t>();
  e.cost = j.at("cost").get<double>();
  e.cost_se = j.value("cost_se", 0.0);
  e.seed = j.at("seed").get<std::uint64_t>();
  return e;
}

// 64-bit FNV-1a, stable across platforms; used to tag artifacts with the
// configuration that produced them.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return out;
}

}  // namespace bnpdtr::io

#endif
