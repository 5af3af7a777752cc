#ifndef BNPDTR_CORE_DESIGN_HPP
#define BNPDTR_CORE_DESIGN_HPP

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "bnpdtr/core/types.hpp"

namespace bnpdtr {

namespace detail {

inline void fill_design(Eigen::Ref<Eigen::VectorXd> out, const Eigen::VectorXd& X,
                        double y_prev, double s) {
  const Eigen::Index p = X.size();
  out.head(p) = X;
  out(p) = y_prev;
  out(p + 1) = s;
  out.segment(p + 2, p) = X * s;
  out(2 * p + 2) = y_prev * s;
}

}  // namespace detail

// [X, Y_prev, log A, X log A, Y_prev log A], length 2p+3.
inline Eigen::VectorXd build_design_x(const Eigen::VectorXd& X, double y_prev, double A) {
  if (!(A > 0.0)) throw std::domain_error("build_design_x: recommendation must be positive");
  Eigen::VectorXd out(2 * X.size() + 3);
  detail::fill_design(out, X, y_prev, std::log(A));
  return out;
}

// [X, Y_prev, s, X s, Y_prev s] with s the coded elapsed time.
inline Eigen::VectorXd build_design_z(const Eigen::VectorXd& X, double y_prev, double delta,
                                      const DeltaCoding& coding) {
  if (!(delta > 0.0)) throw std::domain_error("build_design_z: elapsed time must be positive");
  Eigen::VectorXd out(2 * X.size() + 3);
  detail::fill_design(out, X, y_prev, coding.apply(delta));
  return out;
}

inline Eigen::VectorXd build_design_z(const Eigen::VectorXd& X, double y_prev, double delta,
                                      ModelMode mode) {
  return build_design_z(X, y_prev, delta, DeltaCoding::for_mode(mode));
}

// Model-level regression row: a leading intercept followed by the 2p+3 terms.
inline void regression_row(Eigen::Ref<Eigen::VectorXd> out, const Eigen::VectorXd& X,
                           double y_prev, double s) {
  out(0) = 1.0;
  detail::fill_design(out.tail(out.size() - 1), X, y_prev, s);
}

// theta . [1, X, y, s, X s, y s] without materialising the row.
inline double regression_dot(const Eigen::VectorXd& theta, const Eigen::VectorXd& X,
                             double y_prev, double s) {
  const Eigen::Index p = X.size();
  double acc = theta(0) + theta(p + 1) * y_prev + theta(p + 2) * s +
               theta(2 * p + 3) * y_prev * s;
  for (Eigen::Index j = 0; j < p; ++j)
    acc += X(j) * (theta(1 + j) + theta(p + 3 + j) * s);
  return acc;
}

}  // namespace bnpdtr

#endif
