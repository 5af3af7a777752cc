#ifndef BNPDTR_IO_MODEL_JSON_HPP
#define BNPDTR_IO_MODEL_JSON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "bnpdtr/core/types.hpp"
#include "bnpdtr/dpm/chain.hpp"

namespace bnpdtr::io {

using nlohmann::json;

inline constexpr int kChainSchemaVersion = 1;
inline constexpr int kModelSchemaVersion = 1;

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json to_json_vec(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline json delta_coding_json(const DeltaCoding& c) {
  return {{"kind", to_string(c.kind)}, {"center", c.center}};
}

inline DeltaCoding delta_coding_from_json(const json& j) {
  return DeltaCoding{parse_delta_transform(j.at("kind").get<std::string>()),
                     j.value("center", 0.0)};
}

inline json hyper_json(const dpm::HyperParams& h) {
  return {{"L", h.L},           {"alpha0", h.alpha0},       {"sigma_a", h.sigma_a},
          {"sigma_b", h.sigma_b}, {"nu1", h.nu1},           {"nu2", h.nu2},
          {"sigma0_df_offset", h.sigma0_df_offset},           {"sigma0_scale", h.sigma0_scale}};
}

inline dpm::HyperParams hyper_from_json(const json& j) {
  dpm::HyperParams h;
  h.L = j.at("L").get<std::size_t>();
  h.alpha0 = j.at("alpha0").get<double>();
  h.sigma_a = j.at("sigma_a").get<double>();
  h.sigma_b = j.at("sigma_b").get<double>();
  h.nu1 = j.at("nu1").get<double>();
  h.nu2 = j.at("nu2").get<double>();
  h.sigma0_df_offset = j.value("sigma0_df_offset", 2.0);
  h.sigma0_scale = j.value("sigma0_scale", 1.0);
  return h;
}

// Flattened parameter vector of one draw:
//   weights[L], then per atom theta0[p+1] theta1[d] theta2[d] (theta3[d]),
//   Sigma0 row-major [(p+1)^2], sigma1_sq, sigma2_sq, nu1, nu2.
inline std::vector<double> flatten_draw(const MixtureModel& m) {
  std::vector<double> out(m.weights.begin(), m.weights.end());
  auto append = [&out](const Eigen::VectorXd& v) { out.insert(out.end(), v.data(), v.data() + v.size()); };
  for (const Atom& a : m.atoms) {
    append(a.theta0);
    append(a.theta1);
    append(a.theta2);
    if (a.theta3) append(*a.theta3);
  }
  for (Eigen::Index r = 0; r < m.Sigma0.rows(); ++r)
    for (Eigen::Index c = 0; c < m.Sigma0.cols(); ++c) out.push_back(m.Sigma0(r, c));
  out.push_back(m.sigma1_sq);
  out.push_back(m.sigma2_sq);
  out.push_back(m.nu1);
  out.push_back(m.nu2);
  return out;
}

struct DrawLayout {
  std::size_t p = 0;
  std::size_t L = 0;
  ModelMode mode = ModelMode::basic;
  DeltaCoding delta_coding{};
  std::vector<bool> binary_mask;

  std::size_t size() const {
    const std::size_t d = regression_dim(p);
    const std::size_t per_atom = (p + 1) + d * (mode == ModelMode::extended ? 3 : 2);
    return L + L * per_atom + (p + 1) * (p + 1) + 4;
  }
};

inline MixtureModel unflatten_draw(const std::vector<double>& v, const DrawLayout& layout) {
  if (v.size() != layout.size())
    throw SchemaError("chain draw: expected " + std::to_string(layout.size()) + " parameters, got " +
                      std::to_string(v.size()));
  const std::size_t p = layout.p, d = regression_dim(p);
  std::size_t pos = 0;
  auto take = [&](std::size_t n) {
    Eigen::VectorXd out = Eigen::Map<const Eigen::VectorXd>(v.data() + pos, static_cast<Eigen::Index>(n));
    pos += n;
    return out;
  };
  MixtureModel m;
  m.mode = layout.mode;
  m.delta_coding = layout.delta_coding;
  m.binary_mask = layout.binary_mask;
  m.weights.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(layout.L));
  pos = layout.L;
  for (std::size_t l = 0; l < layout.L; ++l) {
    Atom a;
    a.theta0 = take(p + 1);
    a.theta1 = take(d);
    a.theta2 = take(d);
    if (layout.mode == ModelMode::extended) a.theta3 = take(d);
    m.atoms.push_back(std::move(a));
  }
  m.Sigma0.resize(static_cast<Eigen::Index>(p + 1), static_cast<Eigen::Index>(p + 1));
  for (Eigen::Index r = 0; r < m.Sigma0.rows(); ++r)
    for (Eigen::Index c = 0; c < m.Sigma0.cols(); ++c) m.Sigma0(r, c) = v[pos++];
  m.sigma1_sq = v[pos++];
  m.sigma2_sq = v[pos++];
  m.nu1 = v[pos++];
  m.nu2 = v[pos++];
  return m;
}

inline DrawLayout layout_of(const MixtureModel& m) {
  return DrawLayout{m.p(), m.L(), m.mode, m.delta_coding, m.binary_mask};
}

inline json layout_json(const DrawLayout& l) {
  return {{"p", l.p},
          {"L", l.L},
          {"mode", to_string(l.mode)},
          {"delta_coding", delta_coding_json(l.delta_coding)},
          {"binary_mask", l.binary_mask}};
}

inline DrawLayout layout_from_json(const json& j) {
  DrawLayout l;
  l.p = j.at("p").get<std::size_t>();
  l.L = j.at("L").get<std::size_t>();
  l.mode = parse_mode(j.at("mode").get<std::string>());
  l.delta_coding = delta_coding_from_json(j.at("delta_coding"));
  l.binary_mask = j.value("binary_mask", std::vector<bool>{});
  return l;
}

// A single model as a standalone document, for true-model and hand-built
// inputs to `evaluate`.
inline json model_to_json(const MixtureModel& m) {
  return {{"schema", "bnpdtr.model"},
          {"schema_version", kModelSchemaVersion},
          {"layout", layout_json(layout_of(m))},
          {"params", flatten_draw(m)}};
}

inline MixtureModel model_from_json(const json& j) {
  if (j.value("schema", std::string{}) != "bnpdtr.model")
    throw SchemaError("model document: wrong schema tag");
  if (j.at("schema_version").get<int>() != kModelSchemaVersion)
    throw SchemaError("model document: unsupported schema version");
  MixtureModel m = unflatten_draw(j.at("params").get<std::vector<double>>(), layout_from_json(j.at("layout")));
  m.validate();
  return m;
}

inline json chain_to_json(const dpm::PosteriorChain& c, const json& provenance = json::object()) {
  if (c.empty()) throw SchemaError("chain document: no draws");
  json draws = json::array();
  for (std::size_t k = 0; k < c.draws.size(); ++k)
    draws.push_back({{"params", flatten_draw(c.draws[k])}, {"log_likelihood", c.log_likelihood.at(k)}});
  return {{"schema", "bnpdtr.chain"},
          {"schema_version", kChainSchemaVersion},
          {"header",
           {{"layout", layout_json(layout_of(c.draws.front()))},
            {"hyper", hyper_json(c.hyper)},
            {"seed", c.seed},
            {"n_iter", c.options.n_iter},
            {"n_burnin", c.n_burnin},
            {"thin", c.thin},
            {"n_kept", c.n_kept}}},
          {"provenance", provenance},
          {"draws", draws}};
}

inline dpm::PosteriorChain chain_from_json(const json& j) {
  if (j.value("schema", std::string{}) != "bnpdtr.chain") throw SchemaError("chain document: wrong schema tag");
  if (j.at("schema_version").get<int>() != kChainSchemaVersion)
    throw SchemaError("chain document: unsupported schema version");
  const json& h = j.at("header");
  const DrawLayout layout = layout_from_json(h.at("layout"));
  dpm::PosteriorChain c;
  c.hyper = hyper_from_json(h.at("hyper"));
  c.seed = h.at("seed").get<std::uint64_t>();
  c.n_burnin = h.at("n_burnin").get<std::size_t>();
  c.thin = h.at("thin").get<std::size_t>();
  c.options.mode = layout.mode;
  c.options.delta_coding = layout.delta_coding;
  c.options.binary_mask = layout.binary_mask;
  c.options.n_iter = h.value("n_iter", std::size_t{0});
  c.options.n_burnin = c.n_burnin;
  c.options.thin = c.thin;
  for (const json& d : j.at("draws")) {
    c.draws.push_back(unflatten_draw(d.at("params").get<std::vector<double>>(), layout));
    c.log_likelihood.push_back(d.at("log_likelihood").get<double>());
  }
  c.n_kept = c.draws.size();
  if (h.at("n_kept").get<std::size_t>() != c.n_kept) throw SchemaError("chain document: n_kept mismatch");
  return c;
}

}  // namespace bnpdtr::io

#endif
