#ifndef BNPDTR_STATS_LINALG_HPP
#define BNPDTR_STATS_LINALG_HPP

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bnpdtr {

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JitteredCholesky {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

// Cholesky with escalating diagonal jitter: start, start*10, ... for
// `escalations` extra attempts after the unjittered one.
inline JitteredCholesky cholesky_with_jitter(const Eigen::MatrixXd& a, double start,
                                             int escalations, const char* what) {
  JitteredCholesky out;
  out.llt.compute(a);
  if (out.llt.info() == Eigen::Success) return out;
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  double jitter = start;
  for (int k = 0; k <= escalations; ++k, jitter *= 10.0) {
    Eigen::MatrixXd b = a;
    b.diagonal().array() += jitter * scale;
    out.llt.compute(b);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter * scale;
      return out;
    }
  }
  std::ostringstream os;
  os << what << ": matrix of size " << a.rows()
     << " not positive definite after jitter up to " << jitter / 10.0 * scale;
  throw NumericalError(os.str());
}

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

inline bool is_spd(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) return false;
  if (!a.isApprox(a.transpose(), 1e-9)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  return llt.info() == Eigen::Success;
}

inline double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace bnpdtr

#endif
