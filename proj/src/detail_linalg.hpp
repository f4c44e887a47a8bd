// Internal extended-precision helpers for the local element algebra. The small
// per-cell systems are solved in long double so the projector and stability
// identities hold well below the verification tolerances even on stretched
// cells; results are stored as double.

#ifndef NCVEM_DETAIL_LINALG_HPP
#define NCVEM_DETAIL_LINALG_HPP

#include "ncvem/common.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>

#include <limits>

namespace ncvem::detail {

using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

inline MatrixL widen(const Matrix& m) { return m.cast<long double>(); }
inline Matrix narrow(const MatrixL& m) { return m.cast<double>(); }

/// Orthogonal projector onto range(D), i.e. D (D^T D)^{-1} D^T, computed as
/// Q1 Q1^T from a Householder factorization; identical in exact arithmetic
/// and keeps the projector identities at rounding level even when D^T D is
/// badly conditioned. Throws on rank deficiency, warns above condition 1e12.
inline MatrixL pi_perp_long(const MatrixL& D) {
  Eigen::HouseholderQR<MatrixL> qr(D);
  const MatrixL R = qr.matrixQR().template triangularView<Eigen::Upper>();
  long double rmin = std::numeric_limits<long double>::max(), rmax = 0.0L;
  for (int i = 0; i < D.cols(); ++i) {
    rmin = std::min(rmin, std::abs(R(i, i)));
    rmax = std::max(rmax, std::abs(R(i, i)));
  }
  if (!(rmin > 0.0L) || rmin < 1e-15L * rmax)
    throw NumericalError("D is numerically rank deficient in the orthogonal projector");
  if ((rmax / rmin) * (rmax / rmin) > 1e12L)
    log_message(LogLevel::Info, "cond(D^T D) above 1e12 in orthogonal projector");
  const MatrixL Q1 = qr.householderQ() * MatrixL::Identity(D.rows(), D.cols());
  return Q1 * Q1.transpose();
}

} // namespace ncvem::detail

#endif
