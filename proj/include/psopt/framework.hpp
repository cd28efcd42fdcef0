// SPDX-License-Identifier: Apache-2.0

// Subspace framework for min_x alpha_eps(A(x)) over a box: the objective is
// replaced by the abscissa of the one-sided projection A(x)V, minimized, and V is
// expanded with the right singular vector at the full rightmost point.

#ifndef PSOPT_FRAMEWORK_HPP
#define PSOPT_FRAMEWORK_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/QR>

#include "psopt/common.hpp"
#include "psopt/matfun.hpp"
#include "psopt/optim.hpp"
#include "psopt/psa.hpp"
#include "psopt/sigma.hpp"

namespace psopt
{

/// Orthonormal V with the (x, z) pair that produced each column.
class ProjectionBasis
{
public:
  explicit ProjectionBasis(Index n) : v_(n, 0) { require(n > 0, "ProjectionBasis: n must be positive"); }

  Index n() const { return v_.rows(); }
  Index dim() const { return v_.cols(); }
  const CMatrix& matrix() const { return v_; }
  const std::vector<std::pair<RVector, cplx>>& provenance() const { return provenance_; }

  /// Appends the normalized component of w orthogonal to V; returns false (and leaves V
  /// unchanged) when that component has norm below drop_tol.
  bool expand(const CVector& w, const RVector& x, cplx z, double drop_tol = 1e-12)
  {
    require(w.size() == n(), "ProjectionBasis::expand: vector length must equal n");
    if (dim() >= n())
    {
      return false;
    }
    const double nw = w.norm();
    if (!(nw > 0.0) || !w.allFinite())
    {
      return false;
    }
    CVector r = w / nw;
    for (int pass = 0; pass < 2; ++pass)
    {
      r -= v_ * (v_.adjoint() * r);
    }
    const double res = r.norm();
    if (res < drop_tol)
    {
      return false;
    }
    v_.conservativeResize(Eigen::NoChange, dim() + 1);
    v_.col(dim() - 1) = r / res;
    provenance_.emplace_back(x, z);
    return true;
  }

  double orthogonality_error() const
  {
    return (v_.adjoint() * v_ - CMatrix::Identity(dim(), dim())).norm();
  }

private:
  CMatrix v_;
  std::vector<std::pair<RVector, cplx>> provenance_;
};

inline ReducedPencil compress_reduced(const ProjectionBasis& basis, const CMatrix& av)
{
  return compress_reduced(basis.matrix(), av);
}

/// |u^* v| below the threshold: the gradient formula is not usable at this point.
class DegenerateGradient : public SolverFailure
{
public:
  DegenerateGradient(const std::string& what, double uv) : SolverFailure(what), uv_(uv) {}
  double uv() const { return uv_; }

private:
  double uv_;
};

struct GradientResult
{
  RVector gradient;
  cplx uv;  // u^* v (full) or u^* V v (reduced)
  cplx mu;  // -1 / uv
};

/// Gradient of alpha_eps(A(x)) from the triplet at a rightmost point:
/// component j is Re(u^* dA/dx_j v / (u^* v)).
inline GradientResult grad_alpha(const AffineMatrixFamily& family, const RVector& x, const SingularTriplet& t,
                                 double degeneracy = 1e-12)
{
  require(t.u.size() == family.n() && t.v.size() == family.n(), "grad_alpha: triplet vectors must have length n");
  GradientResult out;
  out.uv = t.u.dot(t.v);
  if (std::abs(out.uv) <= degeneracy)
  {
    throw DegenerateGradient("grad_alpha: |u^* v| = " + std::to_string(std::abs(out.uv)) + " at a rightmost point",
                             std::abs(out.uv));
  }
  out.mu = -1.0 / out.uv;
  out.gradient.resize(family.d());
  for (Index j = 0; j < family.d(); ++j)
  {
    const CVector dv = family.eval_partial(x, j).apply(t.v);
    out.gradient(j) = (t.u.dot(dv) / out.uv).real();
  }
  return out;
}

/// Gradient of the reduced abscissa of A(x)V, with u in C^n and v in C^k:
/// component j is Re(u^* (dA/dx_j V) v / (u^* V v)).
inline GradientResult grad_alpha_reduced(const AffineMatrixFamily& family, const CMatrix& v, const RVector& x,
                                         const SingularTriplet& t, double degeneracy = 1e-12)
{
  require(t.u.size() == family.n() && t.v.size() == v.cols() && v.rows() == family.n(),
          "grad_alpha_reduced: triplet must have u in C^n and v in C^k");
  GradientResult out;
  const CVector vv = v * t.v;
  out.uv = t.u.dot(vv);
  if (std::abs(out.uv) <= degeneracy)
  {
    throw DegenerateGradient("grad_alpha_reduced: |u^* V v| = " + std::to_string(std::abs(out.uv)), std::abs(out.uv));
  }
  out.mu = -1.0 / out.uv;
  out.gradient.resize(family.d());
  for (Index j = 0; j < family.d(); ++j)
  {
    const CVector dv = family.eval_partial(x, j).apply(vv);
    out.gradient(j) = (t.u.dot(dv) / out.uv).real();
  }
  return out;
}

struct FdHessian
{
  RMatrix hessian;    // symmetrized
  double asymmetry;   // ||H - H^T|| before symmetrization
};

/// Central differences of a gradient callback.
inline FdHessian hessian_fd(const std::function<RVector(const RVector&)>& gradient, const RVector& x,
                            double step = 1e-5)
{
  require(step > 0.0, "hessian_fd: step must be positive");
  const Index d = x.size();
  RMatrix h(d, d);
  for (Index j = 0; j < d; ++j)
  {
    RVector xp = x, xm = x;
    xp(j) += step;
    xm(j) -= step;
    h.col(j) = (gradient(xp) - gradient(xm)) / (2.0 * step);
  }
  FdHessian out;
  out.asymmetry = (h - h.transpose()).norm();
  out.hessian = 0.5 * (h + h.transpose());
  return out;
}

/// Value, gradient and rightmost point of the reduced abscissa at x.
struct ReducedEvaluation
{
  PsaResult psa;
  double value = neg_inf;
  RVector gradient;
  cplx uv{0.0, 0.0};
  bool empty = false;
};

/// Reduced objective x -> alpha_eps of A(x)V - zV for a fixed V.
///
/// [V, A_1 V, ..., A_kappa V] = Q R is factored once (rank-one terms contribute the
/// single column b); for each x only the small matrix [R_V, sum_i f_i(x) R_i] is
/// factored again, which yields the same pencil up to a unitary left factor.
class ReducedFamily
{
public:
  ReducedFamily(const AffineMatrixFamily& family, const CMatrix& v) : family_(&family)
  {
    require(v.rows() == family.n() && v.cols() > 0, "ReducedFamily: V must be n x k with k > 0");
    const Index n = family.n();
    const Index k = v.cols();
    const double orth = (v.adjoint() * v - CMatrix::Identity(k, k)).norm();
    require(orth <= 1e-10, "ReducedFamily: V is not orthonormal");

    std::vector<CMatrix> blocks{v};
    std::vector<std::optional<CMatrix>> row_factor; // rank-one terms: c^T V
    for (const Term& t : family.terms())
    {
      std::visit(
          [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, RankOne>)
            {
              blocks.push_back(m.b.template cast<cplx>());
              row_factor.emplace_back(CMatrix(m.c.template cast<cplx>().transpose() * v));
            }
            else if constexpr (std::is_same_v<T, CMatrix>)
            {
              blocks.push_back(m * v);
              row_factor.emplace_back(std::nullopt);
            }
            else
            {
              blocks.push_back(detail::real_times(m, v));
              row_factor.emplace_back(std::nullopt);
            }
          },
          t.matrix);
    }
    Index cols = 0;
    for (const auto& b : blocks)
    {
      cols += b.cols();
    }
    CMatrix w(n, cols);
    Index c0 = 0;
    for (const auto& b : blocks)
    {
      w.middleCols(c0, b.cols()) = b;
      c0 += b.cols();
    }
    Eigen::HouseholderQR<CMatrix> qr(w);
    const Index m = std::min(n, cols);
    q_ = qr.householderQ() * CMatrix::Identity(n, m);
    const CMatrix r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    r_v_ = r.leftCols(k);
    c0 = k;
    for (std::size_t i = 0; i < row_factor.size(); ++i)
    {
      if (row_factor[i])
      {
        r_terms_.push_back(r.col(c0) * (*row_factor[i]));
        c0 += 1;
      }
      else
      {
        r_terms_.push_back(r.middleCols(c0, k));
        c0 += k;
      }
    }
    k_ = k;
  }

  Index k() const { return k_; }

  struct Compressed
  {
    ReducedPencil pencil;
    CMatrix q_small; // m x rows: maps pencil coordinates into the coordinates of Q
  };

  Compressed pencil_at(const RVector& x) const
  {
    const RVector w = family_->values(x);
    CMatrix s(r_v_.rows(), 2 * k_);
    s.leftCols(k_) = r_v_;
    CMatrix av = CMatrix::Zero(r_v_.rows(), k_);
    for (std::size_t i = 0; i < r_terms_.size(); ++i)
    {
      av += w(static_cast<Index>(i)) * r_terms_[i];
    }
    s.rightCols(k_) = av;
    Eigen::HouseholderQR<CMatrix> qr(s);
    const Index rows = std::min<Index>(s.rows(), 2 * k_);
    const CMatrix r = qr.matrixQR().topRows(rows).triangularView<Eigen::Upper>();
    Compressed out;
    out.pencil = ReducedPencil{r.rightCols(k_), r.leftCols(k_)};
    out.q_small = qr.householderQ() * CMatrix::Identity(s.rows(), rows);
    return out;
  }

  ReducedEvaluation evaluate(const RVector& x, double eps, const PsaOptions& opts) const
  {
    const Compressed c = pencil_at(x);
    ReducedEvaluation out;
    out.psa = psa_rect(c.pencil, eps, opts.safeguard, opts);
    if (out.psa.empty)
    {
      out.empty = true;
      out.value = neg_inf;
      out.gradient = RVector::Zero(family_->d());
      return out;
    }
    out.value = out.psa.alpha;
    const SingularTriplet& t = out.psa.triplet;
    out.uv = t.u.dot(c.pencil.b_tilde * t.v);
    const CVector lu = c.q_small * t.u;
    const RMatrix g = family_->gradients(x);
    out.gradient.resize(family_->d());
    for (Index j = 0; j < family_->d(); ++j)
    {
      CMatrix dj = CMatrix::Zero(r_v_.rows(), k_);
      for (std::size_t i = 0; i < r_terms_.size(); ++i)
      {
        const double gij = g(static_cast<Index>(i), j);
        if (gij != 0.0)
        {
          dj += gij * r_terms_[i];
        }
      }
      out.gradient(j) = std::abs(out.uv) > 0.0 ? (lu.dot(dj * t.v) / out.uv).real() : 0.0;
    }
    return out;
  }

  /// Left singular vector of the pencil lifted to C^n (u^V = Q Q_small u).
  CVector lift(const Compressed& c, const CVector& u) const { return q_ * (c.q_small * u); }

private:
  const AffineMatrixFamily* family_;
  CMatrix q_;
  CMatrix r_v_;
  std::vector<CMatrix> r_terms_;
  Index k_ = 0;
};

struct FrameworkConfig
{
  double eps = 0.1;
  int eta = 10;
  double tol = 1e-7;
  int max_iters = 30;
  bool extended = false;
  std::vector<RVector> init_points; // empty: equispaced (d = 1) or seeded random (d > 1)
  std::uint64_t seed = 20220101;
  OptimizerConfig inner;
  Index size_switch = 1000;
  PsaOptions psa;
  // Im z of the interpolation points' rightmost points become extra safeguard lines.
  bool hint_lines = true;

  void validate(Index d) const
  {
    require(std::isfinite(eps) && eps > 0.0, "FrameworkConfig: eps must be positive");
    require(tol > 0.0, "FrameworkConfig: tol must be positive");
    require(eta >= 1, "FrameworkConfig: eta must be at least 1");
    require(max_iters >= 3, "FrameworkConfig: max_iters must be at least 3");
    for (const auto& x : init_points)
    {
      require(x.size() == d && x.allFinite(), "FrameworkConfig: init point has wrong length or is not finite");
    }
    inner.validate();
    psa.validate();
  }
};

struct IterationRecord
{
  int k = 0;
  RVector x;
  cplx z;
  double reduced_opt = neg_inf;
  double full_alpha = neg_inf;
  Index subspace_dim = 0;
  double time_reduced = 0.0;
  double time_psa = 0.0;
  double time_triplet = 0.0;
  cplx uv;
  bool interpolating = false;
  bool reduced_empty = false;
  bool basis_grew = false;
  int inner_evaluations = 0;
  int extra_points = 0;
  bool clipped = false;
  double triplet_residual = 0.0;

  double gap() const { return full_alpha - reduced_opt; }
};

struct InitRecord
{
  RVector x;
  cplx z;
  double alpha;
};

struct MinimizationTrace
{
  std::vector<InitRecord> init;
  std::vector<IterationRecord> iterations;
  RVector x_hat;
  cplx z_hat;
  double alpha_hat = neg_inf;
  bool converged = false;
  std::uint64_t seed = 0;
  bool extended = false;
  double time_total = 0.0;
  double time_reduced = 0.0;
  double time_psa = 0.0;
  std::vector<std::string> log;
};

/// Inner failure; the partial trace is preserved.
class FrameworkAborted : public SolverFailure
{
public:
  FrameworkAborted(const std::string& what, MinimizationTrace trace)
      : SolverFailure(what), trace_(std::move(trace))
  {
  }
  const MinimizationTrace& trace() const { return trace_; }

private:
  MinimizationTrace trace_;
};

namespace detail
{
using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline std::vector<RVector> initial_points(const ParameterBox& box, const FrameworkConfig& cfg)
{
  if (!cfg.init_points.empty())
  {
    std::vector<RVector> pts;
    for (const auto& x : cfg.init_points)
    {
      require(box.contains(x, 1e-12), "FrameworkConfig: init point outside the box");
      pts.push_back(box.project(x));
    }
    return pts;
  }
  const Index d = box.dim();
  std::vector<RVector> pts;
  if (d == 1)
  {
    const double lo = box.lower(0), up = box.upper(0);
    for (int j = 0; j < cfg.eta; ++j)
    {
      const double t = cfg.eta == 1 ? 0.5 * (lo + up) : lo + j * (up - lo) / (cfg.eta - 1);
      pts.push_back(RVector::Constant(1, t));
    }
    return pts;
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int j = 0; j < cfg.eta; ++j)
  {
    RVector x(d);
    for (Index i = 0; i < d; ++i)
    {
      x(i) = box.lower(i) + unit(rng) * (box.upper(i) - box.lower(i));
    }
    pts.push_back(x);
  }
  return pts;
}

struct FullPoint
{
  PsaResult psa;
  SingularTriplet triplet;
  double time_psa = 0.0;
  double time_triplet = 0.0;
};

inline FullPoint full_rightmost(const AffineMatrixFamily& family, const RVector& x, const FrameworkConfig& cfg)
{
  FullPoint out;
  PsaOptions opts = cfg.psa;
  opts.size_switch = cfg.size_switch;
  const StructuredMatrix a = family.eval(x);
  auto t0 = Clock::now();
  out.psa = psa_auto(a, cfg.eps, opts);
  out.time_psa = seconds_since(t0);
  t0 = Clock::now();
  if (a.rows() <= cfg.size_switch)
  {
    CMatrix m = a.to_dense();
    m.diagonal().array() -= out.psa.z;
    out.triplet = smallest_triplet_dense(m);
  }
  else
  {
    out.triplet = out.psa.triplet;
  }
  out.time_triplet = seconds_since(t0);
  return out;
}
} // namespace detail

/// Subspace framework; with cfg.extended the basis also receives the singular vectors
/// at x + h e_pq, h = ||x^(k) - x^(k-1)||, e_pp = e_p, e_pq = (e_p + e_q)/sqrt(2).
inline MinimizationTrace minimize(const AffineMatrixFamily& family, const ParameterBox& box,
                                  const FrameworkConfig& cfg)
{
  box.validate();
  const Index d = family.d();
  require(box.dim() == d, "minimize: box dimension must equal the number of parameters");
  cfg.validate(d);
  const auto t_start = detail::Clock::now();

  MinimizationTrace trace;
  trace.seed = cfg.seed;
  trace.extended = cfg.extended;
  ProjectionBasis basis(family.n());
  std::vector<double> lines;

  auto fail = [&](const std::string& stage, const std::exception& e) -> FrameworkAborted {
    trace.time_total = detail::seconds_since(t_start);
    return FrameworkAborted("minimize: " + stage + ": " + e.what(), trace);
  };

  auto add_point = [&](const RVector& x, const detail::FullPoint& fp) {
    lines.push_back(fp.psa.z.imag());
    return basis.expand(fp.triplet.v, x, fp.psa.z);
  };

  const auto init = detail::initial_points(box, cfg);
  RVector x_prev = init.front();
  double best_init = std::numeric_limits<double>::infinity();
  for (const auto& x : init)
  {
    detail::FullPoint fp;
    try
    {
      fp = detail::full_rightmost(family, x, cfg);
    }
    catch (const std::exception& e)
    {
      throw fail("initial point", e);
    }
    trace.time_psa += fp.time_psa + fp.time_triplet;
    trace.init.push_back({x, fp.psa.z, fp.psa.alpha});
    add_point(x, fp);
    if (fp.psa.alpha < best_init)
    {
      best_init = fp.psa.alpha;
      x_prev = x;
    }
  }

  double prev_reduced = std::numeric_limits<double>::quiet_NaN();
  bool have_prev_iterate = false;
  for (int k = 1; k <= cfg.max_iters; ++k)
  {
    IterationRecord rec;
    rec.k = k;
    rec.subspace_dim = basis.dim();

    PsaOptions ropts = cfg.psa;
    if (cfg.hint_lines)
    {
      ropts.safeguard.hint_lines.insert(ropts.safeguard.hint_lines.end(), lines.begin(), lines.end());
    }
    auto t0 = detail::Clock::now();
    OptimizeResult inner;
    try
    {
      const ReducedFamily reduced(family, basis.matrix());
      ObjectiveOracle oracle = [&](const RVector& x) {
        const ReducedEvaluation ev = reduced.evaluate(x, cfg.eps, ropts);
        return Evaluation{ev.value, ev.gradient};
      };
      if (d == 1)
      {
        inner = minimize_1d(oracle, box.lower(0), box.upper(0), cfg.inner);
      }
      else
      {
        inner = minimize_nd(oracle, box, cfg.inner, x_prev);
      }
    }
    catch (const std::exception& e)
    {
      throw fail("reduced minimization at iteration " + std::to_string(k), e);
    }
    rec.time_reduced = detail::seconds_since(t0);
    rec.x = inner.x;
    rec.reduced_opt = inner.value;
    rec.reduced_empty = inner.value == neg_inf;
    rec.inner_evaluations = inner.evaluations;
    if (!inner.message.empty())
    {
      trace.log.push_back("iteration " + std::to_string(k) + ": inner solver: " + inner.message);
    }

    detail::FullPoint fp;
    try
    {
      fp = detail::full_rightmost(family, rec.x, cfg);
    }
    catch (const std::exception& e)
    {
      throw fail("full rightmost point at iteration " + std::to_string(k), e);
    }
    rec.time_psa = fp.time_psa;
    rec.time_triplet = fp.time_triplet;
    rec.z = fp.psa.z;
    rec.full_alpha = fp.psa.alpha;
    rec.uv = fp.triplet.u.dot(fp.triplet.v);
    rec.interpolating = std::abs(rec.uv) > 1e-6;
    rec.triplet_residual = fp.triplet.residual;
    if (!rec.interpolating)
    {
      trace.log.push_back("iteration " + std::to_string(k) + ": |u^* v| = " + std::to_string(std::abs(rec.uv)) +
                          " (degenerate, not interpolating)");
    }

    if (cfg.extended && have_prev_iterate)
    {
      const double h = (rec.x - x_prev).norm();
      if (h > 0.0)
      {
        for (Index p = 0; p < d; ++p)
        {
          for (Index q = p; q < d; ++q)
          {
            RVector e = RVector::Zero(d);
            e(p) += 1.0;
            e(q) += 1.0;
            e.normalize();
            const RVector raw = rec.x + h * e;
            const RVector xp = box.project(raw);
            if ((xp - raw).norm() > 0.0)
            {
              rec.clipped = true;
            }
            if ((xp - rec.x).norm() == 0.0)
            {
              continue;
            }
            try
            {
              const auto extra = detail::full_rightmost(family, xp, cfg);
              rec.time_psa += extra.time_psa;
              rec.time_triplet += extra.time_triplet;
              add_point(xp, extra);
              ++rec.extra_points;
            }
            catch (const std::exception& ex)
            {
              throw fail("offset point at iteration " + std::to_string(k), ex);
            }
          }
        }
        if (rec.clipped)
        {
          trace.log.push_back("iteration " + std::to_string(k) + ": offset point clipped to the box");
        }
      }
      else
      {
        trace.log.push_back("iteration " + std::to_string(k) + ": coincident iterates, offset points skipped");
      }
    }

    rec.basis_grew = add_point(rec.x, fp);
    trace.time_reduced += rec.time_reduced;
    trace.time_psa += rec.time_psa + rec.time_triplet;
    trace.iterations.push_back(rec);
    trace.x_hat = rec.x;
    trace.z_hat = rec.z;
    trace.alpha_hat = rec.full_alpha;

    const bool finite = std::isfinite(rec.reduced_opt) && std::isfinite(prev_reduced);
    if (k >= 3 && finite && rec.reduced_opt - prev_reduced < cfg.tol)
    {
      trace.converged = true;
      break;
    }
    prev_reduced = rec.reduced_opt;
    x_prev = rec.x;
    have_prev_iterate = true;
  }
  trace.time_total = detail::seconds_since(t_start);
  return trace;
}

inline MinimizationTrace minimize_extended(const AffineMatrixFamily& family, const ParameterBox& box,
                                           FrameworkConfig cfg)
{
  cfg.extended = true;
  return minimize(family, box, cfg);
}

struct StagnationReport
{
  bool coincident = false;       // two iterates equal within 1e-12
  int first = -1;                // indices (into trace.iterations) of the coincident pair
  int second = -1;
  bool monotone = true;          // reduced optima nondecreasing
  std::vector<int> violations;   // k where reduced_opt(k) < reduced_opt(k-1)
  std::vector<double> errors;    // ||x^(k) - x_final||
  std::vector<double> ratios;    // e_{k+1} / e_k
  std::vector<double> rate;      // e_{k+1} / (e_k max(e_k, e_{k-1}))
};

inline StagnationReport stagnation_certificate(const MinimizationTrace& trace, double coincide_tol = 1e-12,
                                               double monotone_slack = 0.0)
{
  StagnationReport rep;
  const auto& it = trace.iterations;
  for (std::size_t a = 0; a < it.size() && !rep.coincident; ++a)
  {
    for (std::size_t b = a + 1; b < it.size(); ++b)
    {
      if ((it[a].x - it[b].x).norm() <= coincide_tol)
      {
        rep.coincident = true;
        rep.first = static_cast<int>(a);
        rep.second = static_cast<int>(b);
        break;
      }
    }
  }
  for (std::size_t k = 1; k < it.size(); ++k)
  {
    if (it[k].reduced_opt < it[k - 1].reduced_opt - monotone_slack)
    {
      rep.monotone = false;
      rep.violations.push_back(it[k].k);
    }
  }
  if (it.empty())
  {
    return rep;
  }
  const RVector& xs = it.back().x;
  for (const auto& r : it)
  {
    rep.errors.push_back((r.x - xs).norm());
  }
  for (std::size_t k = 0; k + 1 < rep.errors.size(); ++k)
  {
    const double ek = rep.errors[k];
    rep.ratios.push_back(ek > 0.0 ? rep.errors[k + 1] / ek : 0.0);
    const double prev = k > 0 ? rep.errors[k - 1] : ek;
    const double denom = ek * std::max(ek, prev);
    rep.rate.push_back(denom > 0.0 ? rep.errors[k + 1] / denom : 0.0);
  }
  return rep;
}

} // namespace psopt

#endif // PSOPT_FRAMEWORK_HPP
