// SPDX-License-Identifier: Apache-2.0

// Pseudospectral abscissa: criss-cross for square matrices and for rectangular
// pencils A~ - z B~, and a subspace method for large matrices.

#ifndef PSOPT_PSA_HPP
#define PSOPT_PSA_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <type_traits>
#include <vector>

#include <Eigen/QR>

#include "psopt/common.hpp"
#include "psopt/detail/lapack.hpp"
#include "psopt/krylov.hpp"
#include "psopt/matfun.hpp"
#include "psopt/sigma.hpp"

namespace psopt
{

/// Extra starting lines and points for the rectangular criss-cross.
struct SafeguardConfig
{
  int points = 10;
  double imag_lower = -2.0;
  double imag_upper = 2.0;
  std::vector<double> hint_lines;
  std::vector<cplx> hint_points;
  // Minimize sigma from the Ritz values when none of them lies in the level set.
  bool descent = true;

  void validate() const
  {
    require(points >= 0, "SafeguardConfig: points must be nonnegative");
    require(std::isfinite(imag_lower) && std::isfinite(imag_upper) && imag_lower <= imag_upper,
            "SafeguardConfig: invalid imaginary interval");
  }

  std::vector<double> lines() const
  {
    std::vector<double> ys;
    if (points == 1)
    {
      ys.push_back(0.5 * (imag_lower + imag_upper));
    }
    for (int j = 0; points > 1 && j < points; ++j)
    {
      ys.push_back(imag_lower + j * (imag_upper - imag_lower) / (points - 1));
    }
    ys.insert(ys.end(), hint_lines.begin(), hint_lines.end());
    return ys;
  }
};

struct PsaOptions
{
  double level_tol = 1e-9;
  double large_level_tol = 1e-7;
  double imag_tol = 1e-7;
  // Crossings are kept when |sigma - eps| <= accept_tol * (1 + eps) after polishing.
  double accept_tol = 1e-6;
  int max_iter = 100;
  Index size_switch = 1000;
  int max_subspace = 80;
  std::optional<cplx> z0;
  SafeguardConfig safeguard;
  TripletOptions triplet;
  KrylovOptions krylov;

  void validate() const
  {
    require(level_tol > 0.0 && large_level_tol > 0.0, "PsaOptions: level tolerances must be positive");
    require(imag_tol > 0.0 && accept_tol > 0.0, "PsaOptions: filter tolerances must be positive");
    require(max_iter > 0 && max_subspace > 0, "PsaOptions: iteration limits must be positive");
    require(size_switch >= 0, "PsaOptions: size_switch must be nonnegative");
    safeguard.validate();
  }
};

struct PsaResult
{
  double alpha = neg_inf;
  cplx z{std::nan(""), std::nan("")};
  SingularTriplet triplet;
  int iterations = 0;
  bool converged = false;
  bool empty = false;
  std::vector<cplx> path;
  std::string method;
  // Large-scale path only: reduced abscissa after each expansion.
  std::vector<double> reduced_alphas;
};

/// Pencil A~ - z B~ with B~ = Q^* V, both rows x k with rows >= k.
struct ReducedPencil
{
  CMatrix a_tilde;
  CMatrix b_tilde;

  Index k() const { return a_tilde.cols(); }
  Index rows() const { return a_tilde.rows(); }
};

namespace detail
{

// Values Im(s) of the eigenvalues that lie on the imaginary axis.
inline std::vector<double> axis_values(const CVector& s, double imag_tol, double cap)
{
  std::vector<double> out;
  for (Index i = 0; i < s.size(); ++i)
  {
    const double mag = std::abs(s(i));
    if (!std::isfinite(mag) || mag > cap)
    {
      continue;
    }
    if (std::abs(s(i).real()) <= imag_tol * (1.0 + mag))
    {
      out.push_back(s(i).imag());
    }
  }
  return out;
}

inline std::vector<double> axis_values(const lapack::PencilEigenvalues& ev, double imag_tol, double cap)
{
  CVector s(ev.alpha.size());
  Index m = 0;
  for (Index i = 0; i < ev.alpha.size(); ++i)
  {
    const double b = std::abs(ev.beta(i));
    if (b == 0.0 || std::abs(ev.alpha(i)) > cap * b)
    {
      continue;
    }
    s(m++) = ev.alpha(i) / ev.beta(i);
  }
  return axis_values(CVector(s.head(m)), imag_tol, cap);
}

// sigma and w = u^* F v for M(z) = A - z F, so that
// d sigma / d Re z = -Re(w) and d sigma / d Im z = Im(w).
struct LevelValue
{
  double sigma;
  cplx w;
};

class SquareLevelSet
{
public:
  SquareLevelSet(const CMatrix& a, const std::optional<RMatrix>& real, double eps, double imag_tol, double cap)
      : a_(a), real_(real), eps_(eps), imag_tol_(imag_tol), cap_(cap)
  {
  }

  // Real A: the level set is symmetric about the real axis.
  bool conjugate_symmetric() const { return real_.has_value(); }

  double sigma(cplx z) const
  {
    CMatrix m = a_;
    m.diagonal().array() -= z;
    return lapack::singular_values(m)(m.cols() - 1);
  }

  LevelValue level(cplx z) const
  {
    CMatrix m = a_;
    m.diagonal().array() -= z;
    const auto t = smallest_triplet_dense(m);
    return {t.sigma, t.u.dot(t.v)};
  }

  // y with sigma(x + iy) = eps: imaginary eigenvalues of [[A - xI, -eps I], [eps I, -(A - xI)^*]].
  std::vector<double> vertical_raw(double x) const
  {
    const Index n = a_.rows();
    if (real_)
    {
      RMatrix h(2 * n, 2 * n);
      RMatrix shifted = *real_;
      shifted.diagonal().array() -= x;
      h.topLeftCorner(n, n) = shifted;
      h.topRightCorner(n, n) = -eps_ * RMatrix::Identity(n, n);
      h.bottomLeftCorner(n, n) = eps_ * RMatrix::Identity(n, n);
      h.bottomRightCorner(n, n) = -shifted.transpose();
      return axis_values(lapack::eigenvalues(std::move(h)), imag_tol_, cap_);
    }
    CMatrix shifted = a_;
    shifted.diagonal().array() -= x;
    return axis_values(lapack::eigenvalues(hamiltonian(shifted)), imag_tol_, cap_);
  }

  // Horizontal search: the vertical machinery applied to iA + yI at x = 0.
  std::vector<double> horizontal_raw(double y) const
  {
    CMatrix rotated = cplx(0.0, 1.0) * a_;
    rotated.diagonal().array() += y;
    return axis_values(lapack::eigenvalues(hamiltonian(rotated)), imag_tol_, cap_);
  }

private:
  CMatrix hamiltonian(const CMatrix& m) const
  {
    const Index n = m.rows();
    CMatrix h(2 * n, 2 * n);
    h.topLeftCorner(n, n) = m;
    h.topRightCorner(n, n) = -eps_ * CMatrix::Identity(n, n);
    h.bottomLeftCorner(n, n) = eps_ * CMatrix::Identity(n, n);
    h.bottomRightCorner(n, n) = -m.adjoint();
    return h;
  }

  const CMatrix& a_;
  const std::optional<RMatrix>& real_;
  double eps_;
  double imag_tol_;
  double cap_;
};

class PencilLevelSet
{
public:
  PencilLevelSet(const ReducedPencil& p, double eps, double imag_tol, double cap)
      : a_(p.a_tilde), b_(p.b_tilde), eps_(eps), imag_tol_(imag_tol), cap_(cap)
  {
  }

  bool conjugate_symmetric() const { return false; }

  double sigma(cplx z) const
  {
    const RVector s = lapack::singular_values(a_ - z * b_);
    return s(s.size() - 1);
  }

  LevelValue level(cplx z) const
  {
    const auto t = smallest_triplet_dense(a_ - z * b_);
    return {t.sigma, t.u.dot(b_ * t.v)};
  }

  // [[M, -eps I_r], [-eps I_k, M^*]] - s [[B, 0], [0, -B^*]], M = A - xB, unknown [v; u].
  std::vector<double> vertical_raw(double x) const
  {
    const Index r = a_.rows();
    const Index k = a_.cols();
    const CMatrix m = a_ - x * b_;
    CMatrix left = CMatrix::Zero(r + k, r + k);
    CMatrix right = CMatrix::Zero(r + k, r + k);
    left.topLeftCorner(r, k) = m;
    left.topRightCorner(r, r) = -eps_ * CMatrix::Identity(r, r);
    left.bottomLeftCorner(k, k) = -eps_ * CMatrix::Identity(k, k);
    left.bottomRightCorner(k, r) = m.adjoint();
    right.topLeftCorner(r, k) = b_;
    right.bottomRightCorner(k, r) = -b_.adjoint();
    return axis_values(lapack::generalized_eigenvalues(std::move(left), std::move(right)), imag_tol_, cap_);
  }

  // [[-yB^* + iA^*, eps I_k], [-eps I_r, yB + iA]] - s diag(B^*, B), unknown [u; v], x = Im s.
  std::vector<double> horizontal_raw(double y) const
  {
    const Index r = a_.rows();
    const Index k = a_.cols();
    const cplx i1(0.0, 1.0);
    CMatrix left = CMatrix::Zero(r + k, r + k);
    CMatrix right = CMatrix::Zero(r + k, r + k);
    left.topLeftCorner(k, r) = -y * b_.adjoint() + i1 * a_.adjoint();
    left.topRightCorner(k, k) = eps_ * CMatrix::Identity(k, k);
    left.bottomLeftCorner(r, r) = -eps_ * CMatrix::Identity(r, r);
    left.bottomRightCorner(r, k) = y * b_ + i1 * a_;
    right.topLeftCorner(k, r) = b_.adjoint();
    right.bottomRightCorner(r, k) = b_;
    return axis_values(lapack::generalized_eigenvalues(std::move(left), std::move(right)), imag_tol_, cap_);
  }

private:
  const CMatrix& a_;
  const CMatrix& b_;
  double eps_;
  double imag_tol_;
  double cap_;
};

enum class Direction
{
  vertical,   // fixed x, crossings are y values
  horizontal, // fixed y, crossings are x values
};

// Raw crossings, each polished by a few Newton steps along the search line and kept
// only when the level equation holds. With largest_only the scan runs downwards and
// stops at the first valid crossing: beyond the largest crossing every singular value
// exceeds eps, so the largest raw candidate is normally the answer.
template <typename Level>
std::vector<double> crossings(const Level& ls, Direction dir, double fixed, double eps, const PsaOptions& opts,
                              bool largest_only = false)
{
  auto raw = dir == Direction::vertical ? ls.vertical_raw(fixed) : ls.horizontal_raw(fixed);
  std::sort(raw.begin(), raw.end(), std::greater<>());
  // Mirror-image vertical crossings of a symmetric level set are validated once.
  const bool mirror = dir == Direction::vertical && ls.conjugate_symmetric() && !largest_only;
  if (mirror)
  {
    std::erase_if(raw, [](double c) { return c < 0.0; });
  }
  const double target = opts.level_tol * (1.0 + eps);
  const double accept = opts.accept_tol * (1.0 + eps);
  auto point = [&](double c) { return dir == Direction::vertical ? cplx(fixed, c) : cplx(c, fixed); };
  std::vector<double> out;
  for (double c : raw)
  {
    double s = ls.sigma(point(c));
    for (int step = 0; step < 4 && std::abs(s - eps) > target && std::abs(s - eps) <= 100.0 * accept; ++step)
    {
      const LevelValue lv = ls.level(point(c));
      const double deriv = dir == Direction::vertical ? lv.w.imag() : -lv.w.real();
      if (std::abs(deriv) < 1e-14)
      {
        break;
      }
      const double trial = c - (lv.sigma - eps) / deriv;
      const double st = ls.sigma(point(trial));
      if (!(std::abs(st - eps) < std::abs(s - eps)))
      {
        break;
      }
      c = trial;
      s = st;
    }
    if (std::abs(s - eps) <= accept)
    {
      out.push_back(c);
      if (largest_only)
      {
        break;
      }
    }
  }
  if (mirror)
  {
    const std::size_t m = out.size();
    for (std::size_t i = 0; i < m; ++i)
    {
      if (out[i] > 0.0)
      {
        out.push_back(-out[i]);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct CrissCross
{
  double x = neg_inf;
  double y = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<cplx> path;
};

// Criss-cross from a point (x0, y0) of the level set.
template <typename Level>
CrissCross criss_cross(const Level& ls, double eps, double x0, double y0, const PsaOptions& opts)
{
  CrissCross cc;
  cc.x = x0;
  cc.y = y0;
  const auto first = crossings(ls, Direction::horizontal, y0, eps, opts, true);
  if (!first.empty() && first.back() > cc.x)
  {
    cc.x = first.back();
  }
  cc.path.emplace_back(cc.x, cc.y);
  for (int it = 1; it <= opts.max_iter; ++it)
  {
    cc.iterations = it;
    const auto ys = crossings(ls, Direction::vertical, cc.x, eps, opts);
    std::vector<double> mids;
    for (std::size_t i = 0; i + 1 < ys.size(); ++i)
    {
      if (ys[i + 1] - ys[i] < 1e-12)
      {
        continue;
      }
      // A midpoint can sit on a tangency whose pair of crossings was lost, with sigma
      // equal to eps up to rounding. The quarter points are probed only then.
      const double mid = 0.5 * (ys[i] + ys[i + 1]);
      double deepest = ls.sigma(cplx(cc.x, mid));
      std::optional<double> pick;
      if (deepest <= eps)
      {
        pick = mid;
      }
      const double margin = opts.level_tol * (1.0 + eps);
      if (deepest > eps - margin)
      {
        for (double t : {0.25, 0.75})
        {
          const double q = ys[i] + t * (ys[i + 1] - ys[i]);
          const double s = ls.sigma(cplx(cc.x, q));
          if (pick ? s < deepest - margin : s <= eps)
          {
            deepest = s;
            pick = q;
          }
        }
      }
      if (pick)
      {
        mids.push_back(*pick);
      }
    }
    if (mids.empty())
    {
      cc.converged = true;
      break;
    }
    if (ls.conjugate_symmetric())
    {
      // A horizontal search at -y repeats the one at y.
      for (double& m : mids)
      {
        m = std::abs(m);
      }
      std::sort(mids.begin(), mids.end());
      mids.erase(std::unique(mids.begin(), mids.end(), [](double p, double q) { return q - p < 1e-12; }), mids.end());
    }
    double best_x = cc.x;
    double best_y = cc.y;
    for (double mid : mids)
    {
      const auto xs = crossings(ls, Direction::horizontal, mid, eps, opts, true);
      if (!xs.empty() && xs.back() > best_x)
      {
        best_x = xs.back();
        best_y = mid;
      }
    }
    const double gain = best_x - cc.x;
    cc.x = best_x;
    cc.y = best_y;
    cc.path.emplace_back(cc.x, cc.y);
    if (gain <= opts.level_tol * (1.0 + std::abs(cc.x)))
    {
      cc.converged = true;
      break;
    }
  }
  return cc;
}

inline Index rightmost_index(const CVector& w)
{
  Index best = 0;
  for (Index i = 1; i < w.size(); ++i)
  {
    const bool right = w(i).real() > w(best).real();
    const bool tie = w(i).real() == w(best).real() && w(i).imag() > w(best).imag();
    if (right || tie)
    {
      best = i;
    }
  }
  return best;
}

inline SingularTriplet triplet_at(const CMatrix& a, cplx z)
{
  CMatrix m = a;
  m.diagonal().array() -= z;
  return smallest_triplet_dense(m);
}

// The criss-cross y is the midpoint of the previous vertical interval, so it lags x.
// Newton on (sigma - eps, d sigma / dy) = 0, where sigma_x = -Re(u^*v) and
// sigma_y = Im(u^*v); the mixed derivatives come from one shifted triplet. Steps are
// kept only while they are small and reduce |sigma_y|.
inline SingularTriplet polish_rightmost(const CMatrix& a, double eps, cplx& z)
{
  SingularTriplet t = triplet_at(a, z);
  const double scale = 1.0 + std::abs(z);
  for (int it = 0; it < 3; ++it)
  {
    const cplx uv = t.u.dot(t.v);
    const double sx = -uv.real(), sy = uv.imag();
    if (std::abs(sy) <= 1e-13 * scale || sx <= 0.0)
    {
      break;
    }
    const double h = 1e-6 * scale;
    const SingularTriplet th = triplet_at(a, z + cplx(0.0, h));
    const cplx uvh = th.u.dot(th.v);
    const double sxy = (-uvh.real() - sx) / h, syy = (uvh.imag() - sy) / h;
    const double det = sx * syy - sy * sxy;
    if (!(std::abs(det) > 0.0))
    {
      break;
    }
    const double f1 = t.sigma - eps;
    const double dx = -(syy * f1 - sy * sy) / det;
    const double dy = -(sx * sy - sxy * f1) / det;
    if (!(std::hypot(dx, dy) <= 1e-4 * scale))
    {
      break;
    }
    const cplx zn = z + cplx(dx, dy);
    const SingularTriplet tn = triplet_at(a, zn);
    if (!(std::abs(tn.u.dot(tn.v).imag()) < std::abs(sy)) || !(tn.sigma <= eps * (1.0 + 1e-10) + 1e-14))
    {
      break;
    }
    z = zn;
    t = tn;
  }
  return t;
}

inline void check_eps(double eps)
{
  require(std::isfinite(eps) && eps > 0.0, "eps must be positive and finite");
}

inline PsaResult psa_square_impl(const CMatrix& a, const std::optional<RMatrix>& real, double eps,
                                 const PsaOptions& opts)
{
  check_eps(eps);
  opts.validate();
  require(a.rows() == a.cols() && a.rows() > 0, "psa_square: matrix must be square and nonempty");
  require(a.allFinite(), "psa_square: matrix has non-finite entries");
  const double cap = 1.0 / opts.level_tol;
  SquareLevelSet ls(a, real, eps, opts.imag_tol, cap);

  const CVector lambda = real ? lapack::eigenvalues(*real) : lapack::eigenvalues(a);
  const cplx start = lambda(rightmost_index(lambda));
  CrissCross best = criss_cross(ls, eps, start.real(), start.imag(), opts);
  if (opts.z0 && std::isfinite(opts.z0->real()) && std::isfinite(opts.z0->imag()) && ls.sigma(*opts.z0) <= eps)
  {
    CrissCross other = criss_cross(ls, eps, opts.z0->real(), opts.z0->imag(), opts);
    if (other.x > best.x)
    {
      best = std::move(other);
    }
  }

  PsaResult r;
  r.alpha = best.x;
  r.z = cplx(best.x, best.y);
  r.triplet = polish_rightmost(a, eps, r.z);
  r.alpha = r.z.real();
  r.iterations = best.iterations;
  r.converged = best.converged;
  r.path = std::move(best.path);
  r.method = "square";
  return r;
}

} // namespace detail

inline PsaResult psa_square(const CMatrix& a, double eps, const PsaOptions& opts = {})
{
  return detail::psa_square_impl(a, std::nullopt, eps, opts);
}

/// Real input: vertical searches use a real 2n x 2n eigenproblem.
inline PsaResult psa_square(const RMatrix& a, double eps, const PsaOptions& opts = {})
{
  return detail::psa_square_impl(a.cast<cplx>(), std::optional<RMatrix>(a), eps, opts);
}

inline PsaResult psa_square(const StructuredMatrix& a, double eps, const PsaOptions& opts = {})
{
  if (a.is_real())
  {
    return psa_square(a.to_dense_real(), eps, opts);
  }
  return psa_square(a.to_dense(), eps, opts);
}

/// All y with sigma_min(A - (x + iy) I) = eps, sorted.
inline std::vector<double> vertical_search_square(const CMatrix& a, double eps, double x,
                                                  const PsaOptions& opts = {})
{
  detail::check_eps(eps);
  require(a.rows() == a.cols() && a.rows() > 0 && a.allFinite(), "vertical_search_square: invalid matrix");
  const std::optional<RMatrix> none;
  detail::SquareLevelSet ls(a, none, eps, opts.imag_tol, 1.0 / opts.level_tol);
  return detail::crossings(ls, detail::Direction::vertical, x, eps, opts);
}

inline std::vector<double> vertical_search_square(const RMatrix& a, double eps, double x,
                                                  const PsaOptions& opts = {})
{
  detail::check_eps(eps);
  require(a.rows() == a.cols() && a.rows() > 0 && a.allFinite(), "vertical_search_square: invalid matrix");
  const CMatrix ac = a.cast<cplx>();
  const std::optional<RMatrix> real(a);
  detail::SquareLevelSet ls(ac, real, eps, opts.imag_tol, 1.0 / opts.level_tol);
  return detail::crossings(ls, detail::Direction::vertical, x, eps, opts);
}

/// Largest x with sigma_min(A - (x + iy) I) = eps on the line Im z = y, if any.
inline std::optional<double> horizontal_search_square(const CMatrix& a, double eps, double y,
                                                      const PsaOptions& opts = {})
{
  detail::check_eps(eps);
  const std::optional<RMatrix> none;
  detail::SquareLevelSet ls(a, none, eps, opts.imag_tol, 1.0 / opts.level_tol);
  const auto xs = detail::crossings(ls, detail::Direction::horizontal, y, eps, opts, true);
  if (xs.empty())
  {
    return std::nullopt;
  }
  return xs.back();
}

/// Triangular factor of the thin QR of [V, AV], split as [B~, A~].
inline ReducedPencil compress_reduced(const CMatrix& v, const CMatrix& av)
{
  require(v.rows() == av.rows() && v.cols() == av.cols() && v.cols() > 0,
          "compress_reduced: V and AV must have the same nonempty shape");
  require(v.allFinite() && av.allFinite(), "compress_reduced: non-finite input");
  const Index k = v.cols();
  const double orth = (v.adjoint() * v - CMatrix::Identity(k, k)).norm();
  require(orth <= 1e-10, "compress_reduced: V is not orthonormal (||V^*V - I|| = " + std::to_string(orth) + ")");
  CMatrix stacked(v.rows(), 2 * k);
  stacked << v, av;
  Eigen::HouseholderQR<CMatrix> qr(stacked);
  const Index r = std::min<Index>(v.rows(), 2 * k);
  CMatrix rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  return ReducedPencil{rr.rightCols(k), rr.leftCols(k)};
}

namespace detail
{
// Gauss-Newton-type descent on sigma(z) towards the level eps; stops once inside.
inline cplx descend_to_level(const PencilLevelSet& ls, cplx z, double eps)
{
  double s = ls.sigma(z);
  for (int it = 0; it < 60 && s > eps; ++it)
  {
    const LevelValue lv = ls.level(z);
    const cplx g(-lv.w.real(), lv.w.imag());
    const double g2 = std::norm(g);
    if (g2 < 1e-24)
    {
      break;
    }
    double t = (lv.sigma - eps) / g2;
    bool moved = false;
    for (int half = 0; half < 30; ++half, t *= 0.5)
    {
      const cplx trial = z - t * g;
      const double st = ls.sigma(trial);
      if (st < s)
      {
        z = trial;
        s = st;
        moved = true;
        break;
      }
    }
    if (!moved)
    {
      break;
    }
  }
  return z;
}
} // namespace detail

/// Rightmost point of {z : sigma_min(A~ - z B~) <= eps}; empty = true with alpha = -inf
/// when no point of the set is found.
inline PsaResult psa_rect(const ReducedPencil& pencil, double eps, const SafeguardConfig& safeguard,
                          const PsaOptions& opts = {})
{
  detail::check_eps(eps);
  opts.validate();
  safeguard.validate();
  const Index k = pencil.k();
  const Index r = pencil.rows();
  require(k > 0 && r >= k && pencil.b_tilde.rows() == r && pencil.b_tilde.cols() == k,
          "psa_rect: pencil must be rows x k with rows >= k and matching shapes");
  require(pencil.a_tilde.allFinite() && pencil.b_tilde.allFinite(), "psa_rect: non-finite pencil");

  detail::PencilLevelSet ls(pencil, eps, opts.imag_tol, 1.0 / opts.level_tol);
  std::vector<std::pair<double, double>> starts;

  const auto ritz = lapack::generalized_eigenvalues(pencil.a_tilde.topRows(k), pencil.b_tilde.topRows(k));
  std::vector<cplx> ritz_values;
  for (Index i = 0; i < ritz.alpha.size(); ++i)
  {
    if (std::abs(ritz.beta(i)) > 1e-14 * std::abs(ritz.alpha(i)) && std::abs(ritz.beta(i)) > 0.0)
    {
      ritz_values.push_back(ritz.alpha(i) / ritz.beta(i));
    }
  }
  bool ritz_inside = false;
  for (const cplx& lam : ritz_values)
  {
    if (ls.sigma(lam) <= eps)
    {
      starts.emplace_back(lam.real(), lam.imag());
      ritz_inside = true;
    }
  }
  for (double y : safeguard.lines())
  {
    const auto xs = detail::crossings(ls, detail::Direction::horizontal, y, eps, opts, true);
    if (!xs.empty())
    {
      starts.emplace_back(xs.back(), y);
    }
  }
  std::vector<cplx> descent_starts;
  for (const cplx& p : safeguard.hint_points)
  {
    if (ls.sigma(p) <= eps)
    {
      starts.emplace_back(p.real(), p.imag());
    }
    else
    {
      descent_starts.push_back(p);
    }
  }
  if (safeguard.descent && !ritz_inside)
  {
    descent_starts.insert(descent_starts.end(), ritz_values.begin(), ritz_values.end());
    for (const cplx& p : descent_starts)
    {
      const cplx z = detail::descend_to_level(ls, p, eps);
      if (ls.sigma(z) <= eps)
      {
        starts.emplace_back(z.real(), z.imag());
      }
    }
  }

  PsaResult out;
  out.method = "rect";
  if (starts.empty())
  {
    out.empty = true;
    out.converged = true;
    return out;
  }
  const auto best_start =
      *std::max_element(starts.begin(), starts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  detail::CrissCross cc = detail::criss_cross(ls, eps, best_start.first, best_start.second, opts);
  out.alpha = cc.x;
  out.z = cplx(cc.x, cc.y);
  out.triplet = smallest_triplet_dense(pencil.a_tilde - out.z * pencil.b_tilde);
  out.iterations = cc.iterations;
  out.converged = cc.converged;
  out.path = std::move(cc.path);
  return out;
}

inline PsaResult psa_rect(const ReducedPencil& pencil, double eps, const PsaOptions& opts = {})
{
  return psa_rect(pencil, eps, opts.safeguard, opts);
}

/// Subspace method for large A: the rightmost point of the one-sided projection
/// A V - z V, with V expanded by the right singular vector of A - zI at each
/// reduced rightmost point, until the reduced abscissa stagnates.
inline PsaResult psa_large(const StructuredMatrix& a, double eps, const PsaOptions& opts = {})
{
  detail::check_eps(eps);
  opts.validate();
  const Index n = a.rows();
  require(n > 0, "psa_large: empty matrix");

  const auto eigs = rightmost_schur([&](const CVector& x) { return a.apply(x); }, n, opts.krylov);
  CMatrix v = eigs.basis;
  Eigen::HouseholderQR<CMatrix> qr0(v);
  v = qr0.householderQ() * CMatrix::Identity(n, v.cols());

  PsaOptions rect_opts = opts;
  rect_opts.level_tol = std::min(opts.level_tol, 0.01 * opts.large_level_tol);
  SafeguardConfig sg = opts.safeguard;
  for (Index i = 0; i < eigs.values.size(); ++i)
  {
    sg.hint_points.push_back(eigs.values(i));
    sg.hint_lines.push_back(eigs.values(i).imag());
  }

  PsaResult out;
  out.method = "large";
  double previous = neg_inf;
  for (int it = 1; it <= opts.max_subspace; ++it)
  {
    const CMatrix av = a.multiply(v);
    const ReducedPencil pencil = compress_reduced(v, av);
    PsaResult red = psa_rect(pencil, eps, sg, rect_opts);
    if (red.empty)
    {
      throw SolverFailure("psa_large: reduced pseudospectrum empty at subspace iteration " + std::to_string(it) +
                          " (dimension " + std::to_string(v.cols()) + ")");
    }
    out.reduced_alphas.push_back(red.alpha);
    out.path.push_back(red.z);
    out.iterations = it;
    out.alpha = red.alpha;
    out.z = red.z;

    ShiftedMatrix shifted(a, red.z);
    TripletOptions topts = opts.triplet;
    topts.start = CVector(v * red.triplet.v);
    SingularTriplet t;
    try
    {
      t = smallest_triplet_sparse(shifted, topts);
    }
    catch (const TripletNotConverged& e)
    {
      throw SolverFailure(std::string("psa_large: iteration ") + std::to_string(it) + ": " + e.what());
    }
    out.triplet = t;

    const bool stagnated = it > 1 && red.alpha - previous < opts.large_level_tol;
    previous = red.alpha;
    if (stagnated)
    {
      out.converged = true;
      break;
    }
    CVector w = t.v;
    for (int pass = 0; pass < 2; ++pass)
    {
      w -= v * (v.adjoint() * w);
    }
    const double res = w.norm();
    if (res < 1e-12 || v.cols() >= n)
    {
      out.converged = true;
      break;
    }
    v.conservativeResize(n, v.cols() + 1);
    v.col(v.cols() - 1) = w / res;
    sg.hint_lines.push_back(red.z.imag());
  }
  return out;
}

/// Dense criss-cross up to size_switch, subspace method above.
inline PsaResult psa_auto(const StructuredMatrix& a, double eps, const PsaOptions& opts = {})
{
  if (a.rows() <= opts.size_switch)
  {
    return psa_square(a, eps, opts);
  }
  return psa_large(a, eps, opts);
}

struct Polyline
{
  std::vector<cplx> points;
  int component = 0;
  bool closed = false;
};

struct Window
{
  double re_lower;
  double re_upper;
  double im_lower;
  double im_upper;
};

/// Marching-squares contour of sigma(z) = eps on a resolution x resolution grid.
template <typename Sigma>
  requires std::is_invocable_r_v<double, Sigma, cplx>
std::vector<Polyline> boundary_polyline(Sigma&& sigma, double eps, const Window& w, int resolution)
{
  detail::check_eps(eps);
  require(resolution >= 16, "boundary_polyline: resolution must be at least 16");
  require(w.re_lower < w.re_upper && w.im_lower < w.im_upper, "boundary_polyline: empty window");
  const int m = resolution;
  const double hx = (w.re_upper - w.re_lower) / (m - 1);
  const double hy = (w.im_upper - w.im_lower) / (m - 1);
  auto xat = [&](int i) { return w.re_lower + i * hx; };
  auto yat = [&](int j) { return w.im_lower + j * hy; };
  RMatrix g(m, m);
  for (int i = 0; i < m; ++i)
  {
    for (int j = 0; j < m; ++j)
    {
      g(i, j) = sigma(cplx(xat(i), yat(j))) - eps;
    }
  }

  // Edge ids: horizontal edge (i,j)-(i+1,j) -> 2*(i*m+j), vertical (i,j)-(i,j+1) -> 2*(i*m+j)+1.
  auto edge_point = [&](long id) {
    const long cell = id / 2;
    const int i = static_cast<int>(cell / m);
    const int j = static_cast<int>(cell % m);
    const bool horizontal = id % 2 == 0;
    const double a = g(i, j);
    const double b = horizontal ? g(i + 1, j) : g(i, j + 1);
    const double t = a == b ? 0.5 : a / (a - b);
    return horizontal ? cplx(xat(i) + t * hx, yat(j)) : cplx(xat(i), yat(j) + t * hy);
  };
  std::multimap<long, long> links;
  std::vector<std::pair<long, long>> segments;
  for (int i = 0; i + 1 < m; ++i)
  {
    for (int j = 0; j + 1 < m; ++j)
    {
      const bool c0 = g(i, j) <= 0.0, c1 = g(i + 1, j) <= 0.0, c2 = g(i + 1, j + 1) <= 0.0, c3 = g(i, j + 1) <= 0.0;
      const long bottom = 2L * (static_cast<long>(i) * m + j);
      const long top = 2L * (static_cast<long>(i) * m + j + 1);
      const long left = 2L * (static_cast<long>(i) * m + j) + 1;
      const long right = 2L * (static_cast<long>(i + 1) * m + j) + 1;
      std::vector<long> cut;
      if (c0 != c1) cut.push_back(bottom);
      if (c1 != c2) cut.push_back(right);
      if (c2 != c3) cut.push_back(top);
      if (c3 != c0) cut.push_back(left);
      if (cut.size() == 2)
      {
        segments.emplace_back(cut[0], cut[1]);
      }
      else if (cut.size() == 4)
      {
        // Saddle: decide by the cell centre.
        const double centre = 0.25 * (g(i, j) + g(i + 1, j) + g(i + 1, j + 1) + g(i, j + 1));
        if ((centre <= 0.0) == c0)
        {
          segments.emplace_back(bottom, right);
          segments.emplace_back(top, left);
        }
        else
        {
          segments.emplace_back(bottom, left);
          segments.emplace_back(right, top);
        }
      }
    }
  }
  for (std::size_t s = 0; s < segments.size(); ++s)
  {
    links.emplace(segments[s].first, static_cast<long>(s));
    links.emplace(segments[s].second, static_cast<long>(s));
  }

  std::vector<bool> used(segments.size(), false);
  auto next_segment = [&](long edge) -> long {
    auto range = links.equal_range(edge);
    for (auto it = range.first; it != range.second; ++it)
    {
      if (!used[static_cast<std::size_t>(it->second)])
      {
        return it->second;
      }
    }
    return -1;
  };
  auto walk = [&](long edge, std::vector<long>& chain) {
    for (long s = next_segment(edge); s >= 0; s = next_segment(edge))
    {
      used[static_cast<std::size_t>(s)] = true;
      const auto& seg = segments[static_cast<std::size_t>(s)];
      edge = seg.first == edge ? seg.second : seg.first;
      chain.push_back(edge);
    }
  };

  std::vector<Polyline> out;
  for (std::size_t s0 = 0; s0 < segments.size(); ++s0)
  {
    if (used[s0])
    {
      continue;
    }
    used[s0] = true;
    std::vector<long> forward{segments[s0].first, segments[s0].second};
    walk(forward.back(), forward);
    std::vector<long> backward;
    walk(forward.front(), backward);
    std::vector<long> chain(backward.rbegin(), backward.rend());
    chain.insert(chain.end(), forward.begin(), forward.end());
    Polyline pl;
    pl.component = static_cast<int>(out.size());
    pl.closed = chain.size() > 2 && chain.front() == chain.back();
    for (long e : chain)
    {
      pl.points.push_back(edge_point(e));
    }
    out.push_back(std::move(pl));
  }
  return out;
}

inline std::vector<Polyline> boundary_polyline(const CMatrix& a, double eps, const Window& w, int resolution)
{
  require(a.rows() == a.cols() && a.rows() > 0, "boundary_polyline: matrix must be square");
  return boundary_polyline(
      [&](cplx z) {
        CMatrix m = a;
        m.diagonal().array() -= z;
        return lapack::singular_values(m)(m.cols() - 1);
      },
      eps, w, resolution);
}

} // namespace psopt

#endif // PSOPT_PSA_HPP
