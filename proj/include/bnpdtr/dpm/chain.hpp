#ifndef BNPDTR_DPM_CHAIN_HPP
#define BNPDTR_DPM_CHAIN_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bnpdtr/core/types.hpp"

namespace bnpdtr::dpm {

struct HyperParams {
  std::size_t L = 5;
  double alpha0 = 1.0;
  // InvGamma(a, b) prior on sigma1^2 and sigma2^2.
  double sigma_a = 0.1;
  double sigma_b = 0.1;
  // Fixed scale-mixture degrees of freedom (extended mode).
  double nu1 = 5.0;
  double nu2 = 5.0;
  // Sigma0 ~ InvWishart(dim + sigma0_df_offset, sigma0_scale * I).
  double sigma0_df_offset = 2.0;
  double sigma0_scale = 1.0;

  static HyperParams defaults_for(ModelMode mode) {
    HyperParams h;
    h.L = mode == ModelMode::extended ? 10 : 5;
    return h;
  }

  void validate() const {
    if (L < 1) throw std::invalid_argument("HyperParams: L must be >= 1");
    if (!(alpha0 > 0.0)) throw std::invalid_argument("HyperParams: alpha0 must be positive");
    if (!(sigma_a > 0.0) || !(sigma_b > 0.0))
      throw std::invalid_argument("HyperParams: variance prior must be positive");
    if (!(nu1 > 0.0) || !(nu2 > 0.0)) throw std::invalid_argument("HyperParams: nu must be positive");
    if (!(sigma0_df_offset > 0.0) || !(sigma0_scale > 0.0))
      throw std::invalid_argument("HyperParams: Sigma0 prior must be proper");
  }
};

struct FitOptions {
  ModelMode mode = ModelMode::basic;
  DeltaCoding delta_coding{};
  std::vector<bool> binary_mask;  // extended mode only; empty = none binary
  std::size_t n_iter = 2000;
  std::size_t n_burnin = 1000;
  std::size_t thin = 1;
};

struct PosteriorChain {
  std::vector<MixtureModel> draws;
  std::vector<double> log_likelihood;  // one per kept draw
  std::size_t n_burnin = 0;
  std::size_t n_kept = 0;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  HyperParams hyper{};
  FitOptions options{};

  std::size_t size() const { return draws.size(); }
  bool empty() const { return draws.empty(); }
};

}  // namespace bnpdtr::dpm

#endif
