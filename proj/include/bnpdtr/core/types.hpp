#ifndef BNPDTR_CORE_TYPES_HPP
#define BNPDTR_CORE_TYPES_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bnpdtr/stats/linalg.hpp"

namespace bnpdtr {

// basic: Gaussian dynamics. extended: latent-probit binary covariates,
// Tobit response on [0,1], scale-mixture errors and carry-forward point mass.
enum class ModelMode { basic, extended };

// How elapsed time enters the progression design.
enum class DeltaTransform { raw, centered, log };

struct DeltaCoding {
  DeltaTransform kind = DeltaTransform::raw;
  double center = 6.0;

  double apply(double delta) const {
    switch (kind) {
      case DeltaTransform::raw: return delta;
      case DeltaTransform::centered: return delta - center;
      case DeltaTransform::log: return std::log(delta);
    }
    return delta;
  }

  static DeltaCoding for_mode(ModelMode mode) {
    return mode == ModelMode::extended ? DeltaCoding{DeltaTransform::log, 0.0}
                                       : DeltaCoding{DeltaTransform::raw, 0.0};
  }
};

inline std::string to_string(ModelMode m) {
  return m == ModelMode::basic ? "basic" : "extended";
}

inline ModelMode parse_mode(const std::string& s) {
  if (s == "basic") return ModelMode::basic;
  if (s == "extended") return ModelMode::extended;
  throw std::invalid_argument("unknown model mode '" + s + "'");
}

inline std::string to_string(DeltaTransform t) {
  switch (t) {
    case DeltaTransform::raw: return "raw";
    case DeltaTransform::centered: return "centered";
    case DeltaTransform::log: return "log";
  }
  return "raw";
}

inline DeltaTransform parse_delta_transform(const std::string& s) {
  if (s == "raw") return DeltaTransform::raw;
  if (s == "centered") return DeltaTransform::centered;
  if (s == "log") return DeltaTransform::log;
  throw std::invalid_argument("unknown delta transform '" + s + "'");
}

struct VisitRecord {
  double A = 0.0;      // recommended months until this visit
  double delta = 0.0;  // elapsed months since the previous visit
  double Y = 0.0;
  std::optional<double> Y_latent;
  bool carried_forward = false;
};

struct Trajectory {
  Eigen::VectorXd X;
  double Y0 = 0.0;
  std::optional<double> Y0_latent;
  std::vector<VisitRecord> visits;
  std::optional<int> group_id;

  std::size_t p() const { return static_cast<std::size_t>(X.size()); }

  double calendar_time() const {
    double t = 0.0;
    for (const auto& v : visits) t += v.delta;
    return t;
  }

  double response_before(std::size_t visit) const {
    return visit == 0 ? Y0 : visits[visit - 1].Y;
  }
};

// One mixture component. Regression blocks use the design
// [1, X, Y_prev, s, X*s, Y_prev*s] of length 2p+4, where s is log(A) for the
// compliance block and the coded elapsed time for the progression and
// carry-forward blocks.
struct Atom {
  Eigen::VectorXd theta0;  // baseline mean of (X, Y0), length p+1
  Eigen::VectorXd theta1;  // compliance regression
  Eigen::VectorXd theta2;  // progression regression
  std::optional<Eigen::VectorXd> theta3;  // probit carry-forward (extended)
};

inline std::size_t regression_dim(std::size_t p) { return 2 * p + 4; }

struct MixtureModel {
  ModelMode mode = ModelMode::basic;
  DeltaCoding delta_coding{};
  std::vector<double> weights;
  std::vector<Atom> atoms;
  Eigen::MatrixXd Sigma0;
  double sigma1_sq = 1.0;
  double sigma2_sq = 1.0;
  double nu1 = 5.0;
  double nu2 = 5.0;
  // Which covariates are binary indicators of a latent probit (extended).
  std::vector<bool> binary_mask;

  std::size_t L() const { return atoms.size(); }
  std::size_t p() const { return static_cast<std::size_t>(Sigma0.rows()) - 1; }

  void validate() const {
    if (atoms.empty()) throw std::invalid_argument("MixtureModel: no atoms");
    if (weights.size() != atoms.size())
      throw std::invalid_argument("MixtureModel: weights/atoms size mismatch");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("MixtureModel: negative weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("MixtureModel: weights do not sum to 1");
    if (Sigma0.rows() < 1 || Sigma0.rows() != Sigma0.cols())
      throw std::invalid_argument("MixtureModel: Sigma0 not square");
    if (!is_spd(Sigma0))
      throw std::invalid_argument("MixtureModel: Sigma0 not symmetric positive definite");
    const std::size_t pp = p();
    const std::size_t d = regression_dim(pp);
    for (const auto& a : atoms) {
      if (static_cast<std::size_t>(a.theta0.size()) != pp + 1 ||
          static_cast<std::size_t>(a.theta1.size()) != d ||
          static_cast<std::size_t>(a.theta2.size()) != d)
        throw std::invalid_argument("MixtureModel: atom dimensions inconsistent with p");
      if ((mode == ModelMode::extended) != a.theta3.has_value())
        throw std::invalid_argument("MixtureModel: theta3 present iff extended mode");
      if (a.theta3 && static_cast<std::size_t>(a.theta3->size()) != d)
        throw std::invalid_argument("MixtureModel: theta3 dimension");
    }
    if (!(sigma1_sq >= 0.0) || !(sigma2_sq >= 0.0))
      throw std::invalid_argument("MixtureModel: negative variance");
    if (!binary_mask.empty() && binary_mask.size() != pp)
      throw std::invalid_argument("MixtureModel: binary mask length");
    if (mode == ModelMode::extended) {
      if (!(nu1 > 0.0) || !(nu2 > 0.0))
        throw std::invalid_argument("MixtureModel: nu must be positive");
      for (std::size_t j = 0; j < binary_mask.size(); ++j)
        if (binary_mask[j] && std::abs(Sigma0(j, j) - 1.0) > 1e-8)
          throw std::invalid_argument("MixtureModel: latent-probit variance must be 1");
    }
  }

  bool is_binary(std::size_t j) const {
    return mode == ModelMode::extended && j < binary_mask.size() && binary_mask[j];
  }
};

}  // namespace bnpdtr

#endif
