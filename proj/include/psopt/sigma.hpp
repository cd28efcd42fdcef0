// SPDX-License-Identifier: Apache-2.0

#ifndef PSOPT_SIGMA_HPP
#define PSOPT_SIGMA_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <memory>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "psopt/common.hpp"
#include "psopt/detail/lapack.hpp"
#include "psopt/matfun.hpp"

namespace psopt
{

/// (sigma, u, v) with M v = sigma u and M^* u = sigma v.
struct SingularTriplet
{
  double sigma = 0.0;
  CVector u;
  CVector v;
  double residual = 0.0;
};

/// Rotates (u, v) by a common unimodular factor so the largest-magnitude entry of v
/// is real and nonnegative. Entries within 1e-14 of the maximum tie; lowest index wins.
inline void normalize_phase(SingularTriplet& t)
{
  if (t.v.size() == 0)
  {
    return;
  }
  const double vmax = t.v.cwiseAbs().maxCoeff();
  if (vmax == 0.0)
  {
    return;
  }
  Index pivot = 0;
  for (Index i = 0; i < t.v.size(); ++i)
  {
    if (std::abs(t.v(i)) >= vmax - 1e-14)
    {
      pivot = i;
      break;
    }
  }
  const cplx phase = std::conj(t.v(pivot)) / std::abs(t.v(pivot));
  t.v *= phase;
  t.u *= phase;
  t.v(pivot) = cplx(t.v(pivot).real(), 0.0);
}

namespace detail
{
template <typename Apply, typename ApplyAdjoint>
double triplet_residual(const SingularTriplet& t, Apply&& apply, ApplyAdjoint&& apply_adjoint)
{
  const double r1 = (apply(t.v) - t.sigma * t.u).norm();
  const double r2 = (apply_adjoint(t.u) - t.sigma * t.v).norm();
  return std::max(r1, r2);
}
} // namespace detail

/// Smallest singular triplet of a dense matrix with rows >= cols, via a full SVD.
inline SingularTriplet smallest_triplet_dense(const CMatrix& m)
{
  require(m.rows() >= m.cols() && m.cols() > 0, "smallest_triplet_dense: need rows >= cols > 0");
  require(m.allFinite(), "smallest_triplet_dense: matrix has non-finite entries");
  const auto svd = lapack::svd(m);
  const Index k = m.cols() - 1;
  SingularTriplet t;
  t.sigma = svd.s(k);
  t.u = svd.u.col(k);
  t.v = svd.v.col(k);
  normalize_phase(t);
  t.residual = detail::triplet_residual(
      t, [&](const CVector& x) -> CVector { return m * x; }, [&](const CVector& x) -> CVector { return m.adjoint() * x; });
  return t;
}

template <typename Op>
concept LinearOperator = requires(const Op& op, const CVector& x) {
  { op.rows() } -> std::convertible_to<Index>;
  { op.cols() } -> std::convertible_to<Index>;
  { op.apply(x) } -> std::convertible_to<CVector>;
  { op.apply_adjoint(x) } -> std::convertible_to<CVector>;
};

/// Square operators that can also solve M x = b and M^* x = b.
template <typename Op>
concept InvertibleOperator = LinearOperator<Op> && requires(const Op& op, const CVector& x) {
  { op.solve(x) } -> std::convertible_to<CVector>;
  { op.solve_adjoint(x) } -> std::convertible_to<CVector>;
};

/// Dense matrix viewed as an operator (any shape with rows >= cols).
class DenseOperator
{
public:
  explicit DenseOperator(const CMatrix& m) : m_(&m) {}
  Index rows() const { return m_->rows(); }
  Index cols() const { return m_->cols(); }
  CVector apply(const CVector& x) const { return *m_ * x; }
  CVector apply_adjoint(const CVector& x) const { return m_->adjoint() * x; }
  double norm_estimate() const { return m_->norm(); }

private:
  const CMatrix* m_;
};

/// M = A - z I for a structured A, with an LU factorization of the sparse or dense
/// part and a Woodbury correction for the low-rank factors.
class ShiftedMatrix
{
public:
  ShiftedMatrix(const StructuredMatrix& a, cplx z) : a_(&a), z_(z) { factorize(); }

  Index rows() const { return a_->rows(); }
  Index cols() const { return a_->cols(); }
  cplx shift() const { return z_; }

  CVector apply(const CVector& x) const { return a_->apply(x) - z_ * x; }
  CVector apply_adjoint(const CVector& x) const { return a_->apply_adjoint(x) - std::conj(z_) * x; }
  double norm_estimate() const { return a_->norm_estimate() + std::abs(z_); }

  CVector solve(const CVector& b) const
  {
    CVector y = base_solve(b);
    if (a_->low_rank() == 0)
    {
      return y;
    }
    CVector t = detail::real_times(RMatrix(a_->right().transpose()), y);
    return y - y_left_ * cap_.solve(t);
  }

  CVector solve_adjoint(const CVector& b) const
  {
    CVector y = base_solve_adjoint(b);
    if (a_->low_rank() == 0)
    {
      return y;
    }
    CVector t = detail::real_times(RMatrix(a_->left().transpose()), y);
    return y - y_right_ * cap_adjoint_.solve(t);
  }

private:
  void factorize()
  {
    const Index n = a_->rows();
    if (a_->has_dense())
    {
      CMatrix d = CMatrix::Zero(n, n);
      if (a_->has_sparse())
      {
        d.real() += RMatrix(a_->sparse());
      }
      if (a_->has_real_dense())
      {
        d.real() += a_->real_dense();
      }
      if (a_->has_complex_dense())
      {
        d += a_->complex_dense();
      }
      d.diagonal().array() -= z_;
      dense_lu_.emplace(d);
      mode_ = Base::dense;
    }
    else if (a_->has_sparse())
    {
      SparseComplex s = a_->sparse().cast<cplx>();
      SparseComplex id(n, n);
      id.setIdentity();
      s -= z_ * id;
      s.makeCompressed();
      sparse_lu_ = std::make_unique<Eigen::SparseLU<SparseComplex>>();
      sparse_lu_->analyzePattern(s);
      sparse_lu_->factorize(s);
      if (sparse_lu_->info() != Eigen::Success)
      {
        throw SolverFailure("ShiftedMatrix: sparse LU failed (shift is an eigenvalue of the sparse part?)");
      }
      mode_ = Base::sparse;
    }
    else
    {
      require(z_ != cplx(0.0), "ShiftedMatrix: purely low-rank matrix with zero shift is singular");
      mode_ = Base::scalar;
    }
    if (a_->low_rank() > 0)
    {
      const Index r = a_->low_rank();
      y_left_.resize(n, r);
      y_right_.resize(n, r);
      for (Index k = 0; k < r; ++k)
      {
        y_left_.col(k) = base_solve(a_->left().col(k).cast<cplx>());
        y_right_.col(k) = base_solve_adjoint(a_->right().col(k).cast<cplx>());
      }
      CMatrix cap = CMatrix::Identity(r, r) + detail::real_times(RMatrix(a_->right().transpose()), y_left_);
      CMatrix cap_adj = CMatrix::Identity(r, r) + detail::real_times(RMatrix(a_->left().transpose()), y_right_);
      cap_.compute(cap);
      cap_adjoint_.compute(cap_adj);
    }
  }

  CVector base_solve(const CVector& b) const
  {
    switch (mode_)
    {
    case Base::dense:
      return dense_lu_->solve(b);
    case Base::sparse:
      return sparse_lu_->solve(b);
    default:
      return b / (-z_);
    }
  }

  CVector base_solve_adjoint(const CVector& b) const
  {
    switch (mode_)
    {
    case Base::dense:
      return dense_lu_->adjoint().solve(b);
    case Base::sparse:
      return sparse_lu_->adjoint().solve(b);
    default:
      return b / (-std::conj(z_));
    }
  }

  enum class Base
  {
    dense,
    sparse,
    scalar
  };

  const StructuredMatrix* a_;
  cplx z_;
  Base mode_ = Base::scalar;
  std::optional<Eigen::PartialPivLU<CMatrix>> dense_lu_;
  std::unique_ptr<Eigen::SparseLU<SparseComplex>> sparse_lu_;
  CMatrix y_left_, y_right_;
  Eigen::PartialPivLU<CMatrix> cap_, cap_adjoint_;
};

enum class TripletMethod
{
  automatic,    // shift-invert when the operator can solve, matrix-free otherwise
  matrix_free,  // Krylov expansion with M^* M
  shift_invert, // Krylov expansion with (M^* M)^{-1}
};

struct TripletOptions
{
  double tol = 1e-10;
  int max_iter = 300; // restart cycles
  int basis_size = 24;
  int keep = 6;
  std::uint64_t seed = 20220813;
  TripletMethod method = TripletMethod::automatic;
  std::optional<CVector> start;
};

/// Iterative solve did not reach the tolerance; carries the best iterate.
class TripletNotConverged : public SolverFailure
{
public:
  TripletNotConverged(const std::string& what, SingularTriplet best)
      : SolverFailure(what), best_(std::move(best))
  {
  }
  const SingularTriplet& best() const { return best_; }

private:
  SingularTriplet best_;
};

namespace detail
{
inline CVector random_unit(Index n, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  CVector x(n);
  for (Index i = 0; i < n; ++i)
  {
    x(i) = cplx(dist(rng), dist(rng));
  }
  return x.normalized();
}
} // namespace detail

/// Smallest singular triplet of a large operator.
///
/// A restarted Krylov subspace is grown with M^* M (matrix-free) or (M^* M)^{-1}
/// (shift-invert); the triplet is extracted as the smallest singular value of M Q,
/// which is a refined Ritz approximation and never underestimates sigma_min.
template <LinearOperator Op>
SingularTriplet smallest_triplet_sparse(const Op& op, const TripletOptions& opts = {})
{
  require(opts.tol > 0.0, "smallest_triplet_sparse: tol must be positive");
  require(op.rows() >= op.cols() && op.cols() > 0, "smallest_triplet_sparse: need rows >= cols > 0");
  bool invert = false;
  if constexpr (InvertibleOperator<Op>)
  {
    invert = opts.method != TripletMethod::matrix_free;
  }
  else
  {
    require(opts.method != TripletMethod::shift_invert,
            "smallest_triplet_sparse: shift-invert requested for an operator without solve()");
  }

  const Index n = op.cols();
  const Index m_max = std::min<Index>(std::max(opts.basis_size, 4), n);
  const Index keep = std::clamp<Index>(opts.keep, 1, std::max<Index>(1, m_max - 2));
  std::mt19937_64 rng(opts.seed);

  auto expand = [&](const CVector& q) -> CVector {
    if constexpr (InvertibleOperator<Op>)
    {
      if (invert)
      {
        return op.solve(op.solve_adjoint(q));
      }
    }
    return op.apply_adjoint(op.apply(q));
  };

  double norm_est = 0.0;
  if constexpr (requires { op.norm_estimate(); })
  {
    norm_est = op.norm_estimate();
  }

  CMatrix q(n, 0), mq(op.rows(), 0);
  CVector next = opts.start && opts.start->size() == n ? CVector(*opts.start) : detail::random_unit(n, rng);
  SingularTriplet best;
  best.sigma = std::numeric_limits<double>::infinity();
  best.residual = std::numeric_limits<double>::infinity();

  for (int cycle = 0; cycle < opts.max_iter; ++cycle)
  {
    while (q.cols() < m_max)
    {
      CVector w = next;
      for (int pass = 0; pass < 2; ++pass)
      {
        w -= q * (q.adjoint() * w);
      }
      double nw = w.norm();
      if (!(nw > 1e-10 * std::max(1.0, next.norm())))
      {
        if (q.cols() >= n)
        {
          break;
        }
        w = detail::random_unit(n, rng);
        w -= q * (q.adjoint() * w);
        w -= q * (q.adjoint() * w);
        nw = w.norm();
        if (nw < 1e-12)
        {
          break;
        }
      }
      w /= nw;
      const Index c = q.cols();
      q.conservativeResize(n, c + 1);
      mq.conservativeResize(op.rows(), c + 1);
      q.col(c) = w;
      mq.col(c) = op.apply(w);
      norm_est = std::max(norm_est, mq.col(c).norm());
      next = expand(w);
    }

    const auto svd = lapack::svd(mq);
    const Index m = q.cols();
    norm_est = std::max(norm_est, svd.s(0));
    SingularTriplet t;
    t.sigma = svd.s(m - 1);
    t.v = q * svd.v.col(m - 1);
    t.u = svd.u.col(m - 1);
    normalize_phase(t);
    const CVector ru = op.apply_adjoint(t.u) - t.sigma * t.v;
    t.residual = std::max(ru.norm(), (op.apply(t.v) - t.sigma * t.u).norm());
    if (t.residual < best.residual)
    {
      best = t;
    }
    if (t.residual <= opts.tol * std::max(norm_est, 1e-300))
    {
      return t;
    }
    if (m >= n)
    {
      // Whole space spanned: the extraction is exact up to rounding.
      return t;
    }

    // Thick restart: keep the smallest right singular directions, continue from v.
    const Index k = std::min(keep, m);
    CMatrix coeffs = svd.v.rightCols(k);
    q = (q * coeffs).eval();
    mq = (mq * coeffs).eval();
    next = expand(t.v);
  }
  throw TripletNotConverged("smallest_triplet_sparse: no convergence in " + std::to_string(opts.max_iter) +
                                " restart cycles (residual " + std::to_string(best.residual) + ")",
                            best);
}

} // namespace psopt

#endif // PSOPT_SIGMA_HPP
