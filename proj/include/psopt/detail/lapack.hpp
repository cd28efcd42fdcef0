// SPDX-License-Identifier: Apache-2.0

// Thin LAPACKE bindings for the dense kernels the level-set solvers need:
// eigenvalues (xGEEV), QZ eigenvalues (ZGGEV), SVD (ZGESDD) and Schur
// reordering (ZTRSEN).  All matrices are Eigen column-major.

#ifndef PSOPT_DETAIL_LAPACK_HPP
#define PSOPT_DETAIL_LAPACK_HPP

#include <complex>
#include <string>
#include <vector>

#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include "psopt/common.hpp"

namespace psopt::lapack
{

namespace detail
{
inline void check_info(lapack_int info, const char* routine)
{
  if (info != 0)
  {
    throw SolverFailure(std::string(routine) + " failed with info = " + std::to_string(info));
  }
}
} // namespace detail

/// Eigenvalues of a real square matrix.
inline CVector eigenvalues(RMatrix a)
{
  const lapack_int n = static_cast<lapack_int>(a.rows());
  require(a.cols() == n, "eigenvalues: matrix must be square");
  if (n == 0)
  {
    return {};
  }
  RVector wr(n), wi(n);
  double dummy = 0.0;
  lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, wr.data(),
                                  wi.data(), &dummy, 1, &dummy, 1);
  detail::check_info(info, "dgeev");
  CVector w(n);
  for (lapack_int i = 0; i < n; ++i)
  {
    w(i) = cplx(wr(i), wi(i));
  }
  return w;
}

/// Eigenvalues of a complex square matrix.
inline CVector eigenvalues(CMatrix a)
{
  const lapack_int n = static_cast<lapack_int>(a.rows());
  require(a.cols() == n, "eigenvalues: matrix must be square");
  if (n == 0)
  {
    return {};
  }
  CVector w(n);
  cplx dummy;
  lapack_int info =
      LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, w.data(), &dummy, 1, &dummy, 1);
  detail::check_info(info, "zgeev");
  return w;
}

/// Eigenvalues and right eigenvectors of a complex square matrix.
inline std::pair<CVector, CMatrix> eigensystem(CMatrix a)
{
  const lapack_int n = static_cast<lapack_int>(a.rows());
  require(a.cols() == n, "eigensystem: matrix must be square");
  CVector w(n);
  CMatrix vr(n, n);
  cplx dummy;
  lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', n, a.data(), n, w.data(), &dummy,
                                  1, vr.data(), n);
  detail::check_info(info, "zgeev");
  return {w, vr};
}

/// Homogeneous eigenvalue pairs (alpha, beta) of the pencil A - s B; s = alpha / beta.
struct PencilEigenvalues
{
  CVector alpha;
  CVector beta;
};

inline PencilEigenvalues generalized_eigenvalues(CMatrix a, CMatrix b)
{
  const lapack_int n = static_cast<lapack_int>(a.rows());
  require(a.cols() == n && b.rows() == n && b.cols() == n,
          "generalized_eigenvalues: pencil must be square and conforming");
  PencilEigenvalues out{CVector(n), CVector(n)};
  if (n == 0)
  {
    return out;
  }
  cplx dummy;
  lapack_int info = LAPACKE_zggev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, b.data(), n,
                                  out.alpha.data(), out.beta.data(), &dummy, 1, &dummy, 1);
  detail::check_info(info, "zggev");
  return out;
}

/// Thin SVD M = U diag(s) V^*, singular values in decreasing order.
struct ThinSvd
{
  RVector s;
  CMatrix u;
  CMatrix v;
};

inline ThinSvd svd(CMatrix m)
{
  const lapack_int rows = static_cast<lapack_int>(m.rows());
  const lapack_int cols = static_cast<lapack_int>(m.cols());
  const lapack_int k = std::min(rows, cols);
  ThinSvd out{RVector(k), CMatrix(rows, k), CMatrix(k, cols)};
  if (k == 0)
  {
    return out;
  }
  CMatrix vt(k, cols);
  lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'S', rows, cols, m.data(), rows,
                                   out.s.data(), out.u.data(), rows, vt.data(), k);
  detail::check_info(info, "zgesdd");
  out.v = vt.adjoint();
  return out;
}

inline RVector singular_values(CMatrix m)
{
  const lapack_int rows = static_cast<lapack_int>(m.rows());
  const lapack_int cols = static_cast<lapack_int>(m.cols());
  const lapack_int k = std::min(rows, cols);
  RVector s(k);
  if (k == 0)
  {
    return s;
  }
  cplx dummy;
  lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', rows, cols, m.data(), rows, s.data(),
                                   &dummy, 1, &dummy, 1);
  detail::check_info(info, "zgesdd");
  return s;
}

/// Reorders a complex Schur factorization so that the selected eigenvalues lead.
inline void reorder_schur(CMatrix& t, CMatrix& q, const std::vector<int>& select)
{
  const lapack_int n = static_cast<lapack_int>(t.rows());
  std::vector<lapack_logical> sel(select.begin(), select.end());
  CVector w(n);
  lapack_int m = 0;
  double s = 0.0, sep = 0.0;
  lapack_int info = LAPACKE_ztrsen(LAPACK_COL_MAJOR, 'N', 'V', sel.data(), n, t.data(), n,
                                   q.data(), n, w.data(), &m, &s, &sep);
  detail::check_info(info, "ztrsen");
}

} // namespace psopt::lapack

#endif // PSOPT_DETAIL_LAPACK_HPP
