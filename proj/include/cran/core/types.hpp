#pragma once

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cran {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Bad argument values (out of range, wrong sign, inconsistent sizes).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A malformed optimization problem (undeclared variables, non-Hermitian data, ...).
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Problem size outside what an exhaustive routine supports.
class UnsupportedSize : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The target SINRs cannot be met by any beamformer within the power budget.
class ScenarioInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidInput(what);
}

/// Largest |A - A^H| entry.
inline double hermitian_defect(const CMatrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  if (a.size() == 0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

inline double min_eigenvalue(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

}  // namespace cran
