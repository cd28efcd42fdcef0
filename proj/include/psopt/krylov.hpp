// SPDX-License-Identifier: Apache-2.0

// Krylov-Schur iteration for a few rightmost eigenvalues of a large operator.

#ifndef PSOPT_KRYLOV_HPP
#define PSOPT_KRYLOV_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "psopt/common.hpp"
#include "psopt/detail/lapack.hpp"

namespace psopt
{

struct KrylovOptions
{
  Index nev = 4;
  Index basis = 40;
  double tol = 1e-8;
  int max_restarts = 200;
  std::uint64_t seed = 7;
};

struct RightmostSchur
{
  CVector values;  // rightmost first
  CMatrix basis;   // orthonormal Schur vectors, n x nev
  bool converged = false;
  int restarts = 0;
};

/// Partial Schur form A Q = Q T for the nev eigenvalues of largest real part.
template <typename Apply>
RightmostSchur rightmost_schur(Apply&& apply, Index n, const KrylovOptions& opts = {})
{
  require(n > 0, "rightmost_schur: empty operator");
  const Index nev = std::clamp<Index>(opts.nev, 1, n);
  const Index m = std::clamp<Index>(std::max(opts.basis, 2 * nev + 2), 1, n);
  const Index keep = std::min<Index>(m - 1, std::max<Index>(nev + 2, m / 2));

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  auto random_vector = [&]() {
    CVector x(n);
    for (Index i = 0; i < n; ++i)
    {
      x(i) = cplx(normal(rng), normal(rng));
    }
    return x;
  };

  CMatrix q = CMatrix::Zero(n, m + 1);
  CMatrix h = CMatrix::Zero(m + 1, m);
  q.col(0) = random_vector().normalized();
  Index start = 0;

  auto rightmost_order = [](const CVector& w) {
    std::vector<Index> idx(static_cast<std::size_t>(w.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return w(a).real() > w(b).real(); });
    return idx;
  };

  RightmostSchur out;
  for (int restart = 0;; ++restart)
  {
    for (Index j = start; j < m; ++j)
    {
      CVector w = apply(CVector(q.col(j)));
      for (int pass = 0; pass < 2; ++pass)
      {
        CVector c = q.leftCols(j + 1).adjoint() * w;
        w -= q.leftCols(j + 1) * c;
        h.col(j).head(j + 1) += c;
      }
      double beta = w.norm();
      if (j + 1 == n)
      {
        q.col(j + 1).setZero();
        h(j + 1, j) = 0.0;
        continue;
      }
      if (beta <= 1e-14 * std::max(1.0, h.col(j).head(j + 1).norm()))
      {
        // Invariant subspace: continue with a fresh orthogonal direction.
        w = random_vector();
        for (int pass = 0; pass < 2; ++pass)
        {
          w -= q.leftCols(j + 1) * (q.leftCols(j + 1).adjoint() * w);
        }
        q.col(j + 1) = w.normalized();
        h(j + 1, j) = 0.0;
        continue;
      }
      h(j + 1, j) = beta;
      q.col(j + 1) = w / beta;
    }

    const CMatrix hm = h.topRows(m);
    Eigen::ComplexSchur<CMatrix> schur(hm);
    CMatrix t = schur.matrixT();
    CMatrix u = schur.matrixU();
    const CVector diag = t.diagonal();
    const auto order = rightmost_order(diag);

    // Ritz residuals of the nev rightmost pairs: |b^T y| with b^T the last row.
    const auto [ritz, vecs] = lapack::eigensystem(hm);
    const auto ritz_order = rightmost_order(ritz);
    const double scale = std::max(hm.norm(), 1e-300);
    bool converged = true;
    for (Index i = 0; i < nev; ++i)
    {
      const Index col = ritz_order[static_cast<std::size_t>(i)];
      const CVector y = vecs.col(col).normalized();
      const double res = std::abs((h.row(m) * y)(0));
      if (res > opts.tol * scale)
      {
        converged = false;
      }
    }

    const bool last = converged || restart >= opts.max_restarts || m == n;
    const Index p = last ? nev : keep;
    std::vector<int> select(static_cast<std::size_t>(m), 0);
    for (Index i = 0; i < p; ++i)
    {
      select[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
    }
    lapack::reorder_schur(t, u, select);

    if (last)
    {
      out.values = t.diagonal().head(nev);
      out.basis = q.leftCols(m) * u.leftCols(nev);
      out.converged = converged || m == n;
      out.restarts = restart;
      const auto final_order = rightmost_order(out.values);
      CVector sorted(nev);
      for (Index i = 0; i < nev; ++i)
      {
        sorted(i) = out.values(final_order[static_cast<std::size_t>(i)]);
      }
      out.values = sorted;
      return out;
    }

    const CVector b = (h.row(m) * u.leftCols(p)).transpose();
    CMatrix qp = q.leftCols(m) * u.leftCols(p);
    const CVector next = q.col(m);
    q.setZero();
    h.setZero();
    q.leftCols(p) = qp;
    q.col(p) = next;
    h.topLeftCorner(p, p) = t.topLeftCorner(p, p);
    h.row(p).head(p) = b.transpose();
    start = p;
  }
}

} // namespace psopt

#endif // PSOPT_KRYLOV_HPP
