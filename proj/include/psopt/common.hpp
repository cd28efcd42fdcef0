// SPDX-License-Identifier: Apache-2.0

#ifndef PSOPT_COMMON_HPP
#define PSOPT_COMMON_HPP

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace psopt
{

inline constexpr const char* version = "0.3.0";

using cplx = std::complex<double>;
using Index = Eigen::Index;

using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using SparseReal = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using SparseComplex = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// Raised when a caller breaks a documented precondition (shapes, signs, ranges).
class ContractViolation : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by numerical kernels that could not complete (LAPACK error codes, QZ breakdown).
class SolverFailure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message)
{
  if (!condition)
  {
    throw ContractViolation(message);
  }
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m)
{
  return m.allFinite();
}

} // namespace psopt

#endif // PSOPT_COMMON_HPP
