// SPDX-License-Identifier: Apache-2.0

// Inner solvers for box-constrained minimization of the reduced abscissa:
// a global 1-D method based on piecewise-quadratic support functions and a
// projected BFGS method with a weak Wolfe line search for d > 1.

#ifndef PSOPT_OPTIM_HPP
#define PSOPT_OPTIM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "psopt/common.hpp"
#include "psopt/matfun.hpp"

namespace psopt
{

struct Evaluation
{
  double value = 0.0;
  RVector gradient;
};

/// f: R^d -> (value, gradient). A value of -inf is a legal sentinel and ends the search.
using ObjectiveOracle = std::function<Evaluation(const RVector&)>;

struct OptimizerConfig
{
  double gamma = -400.0;
  double inner_tol = 1e-8;
  int max_evals = 400;
  int restarts = 5;
  double c1 = 1e-4;
  double c2 = 0.5;
  int max_line_search = 40;
  bool polish = true;
  std::uint64_t seed = 12345;

  void validate() const
  {
    require(gamma < 0.0, "OptimizerConfig: gamma must be negative");
    require(inner_tol > 0.0, "OptimizerConfig: inner_tol must be positive");
    require(max_evals > 0 && restarts > 0 && max_line_search > 0, "OptimizerConfig: budgets must be positive");
    require(0.0 < c1 && c1 < c2 && c2 < 1.0, "OptimizerConfig: need 0 < c1 < c2 < 1");
  }
};

struct OptimizeResult
{
  RVector x;
  double value = std::numeric_limits<double>::infinity();
  bool converged = false;
  int evaluations = 0;
  // 1-D method: best value minus envelope minimum after each evaluation.
  std::vector<double> gaps;
  double lower_bound = neg_inf;
  // n-D method: final projected-step norm of the winning restart.
  double stationarity = std::numeric_limits<double>::infinity();
  int failed_restarts = 0;
  std::string message;
};

namespace detail
{
struct Line
{
  double slope;
  double intercept;
};

// Breakpoints of max_i (a_i t + c_i), lines sorted by slope.
inline std::vector<double> envelope_breakpoints(std::vector<Line> lines)
{
  std::sort(lines.begin(), lines.end(), [](const Line& p, const Line& q) {
    return p.slope < q.slope || (p.slope == q.slope && p.intercept < q.intercept);
  });
  std::vector<Line> hull;
  auto cross = [](const Line& p, const Line& q) { return (p.intercept - q.intercept) / (q.slope - p.slope); };
  for (const Line& l : lines)
  {
    if (!hull.empty() && hull.back().slope == l.slope)
    {
      hull.pop_back();
    }
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], l) <= cross(hull[hull.size() - 2], hull.back()))
    {
      hull.pop_back();
    }
    hull.push_back(l);
  }
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < hull.size(); ++i)
  {
    out.push_back(cross(hull[i], hull[i + 1]));
  }
  return out;
}

struct Sample
{
  double x;
  double f;
  double g;
};
} // namespace detail

/// Global minimization on [lower, upper] of a function whose second derivative is
/// at least gamma wherever it exists. Each sample (x_i, f_i, g_i) yields the support
/// quadratic f_i + g_i (t - x_i) + gamma/2 (t - x_i)^2; the next sample is the
/// minimizer of their upper envelope, until best f - envelope minimum < inner_tol.
inline OptimizeResult minimize_1d(const ObjectiveOracle& oracle, double lower, double upper,
                                  const OptimizerConfig& cfg = {})
{
  cfg.validate();
  require(std::isfinite(lower) && std::isfinite(upper) && lower < upper, "minimize_1d: need finite lower < upper");
  const double gamma = cfg.gamma;
  std::vector<detail::Sample> samples;
  OptimizeResult out;
  out.x = RVector::Constant(1, lower);

  auto evaluate = [&](double t) {
    RVector x = RVector::Constant(1, t);
    const Evaluation e = oracle(x);
    ++out.evaluations;
    const double g = e.gradient.size() == 1 ? e.gradient(0) : 0.0;
    samples.push_back({t, e.value, g});
    if (e.value < out.value)
    {
      out.value = e.value;
      out.x = x;
    }
    return e.value;
  };
  auto envelope = [&](double t) {
    double m = neg_inf;
    for (const auto& s : samples)
    {
      m = std::max(m, s.f + s.g * (t - s.x) + 0.5 * gamma * (t - s.x) * (t - s.x));
    }
    return m;
  };

  if (evaluate(lower) == neg_inf || evaluate(upper) == neg_inf)
  {
    out.converged = true;
    out.message = "empty sentinel";
    return out;
  }

  const double scale = upper - lower;
  while (true)
  {
    // q_i(t) = gamma/2 t^2 + a_i t + c_i: the envelope minimum is at a breakpoint of the
    // lines a_i t + c_i or at an end point, since gamma/2 t^2 is concave.
    std::vector<detail::Line> lines;
    lines.reserve(samples.size());
    for (const auto& s : samples)
    {
      lines.push_back({s.g - gamma * s.x, s.f - s.g * s.x + 0.5 * gamma * s.x * s.x});
    }
    std::vector<double> cand{lower, upper};
    for (double b : detail::envelope_breakpoints(std::move(lines)))
    {
      if (b > lower && b < upper)
      {
        cand.push_back(b);
      }
    }
    std::sort(cand.begin(), cand.end());
    double t_star = cand.front();
    double lb = std::numeric_limits<double>::infinity();
    for (double t : cand)
    {
      const double v = envelope(t);
      if (v < lb)
      {
        lb = v;
        t_star = t;
      }
    }
    out.lower_bound = lb;
    const double gap = out.value - lb;
    out.gaps.push_back(gap);
    if (gap < cfg.inner_tol)
    {
      out.converged = true;
      break;
    }
    if (out.evaluations >= cfg.max_evals)
    {
      out.message = "evaluation budget exhausted";
      break;
    }
    const bool repeated = std::any_of(samples.begin(), samples.end(), [&](const detail::Sample& s) {
      return std::abs(s.x - t_star) <= 1e-15 * scale;
    });
    if (repeated)
    {
      out.message = "envelope minimizer already sampled";
      out.converged = gap < 10.0 * cfg.inner_tol;
      break;
    }
    if (evaluate(t_star) == neg_inf)
    {
      out.converged = true;
      out.message = "empty sentinel";
      return out;
    }
  }

  // Local refinement: safeguarded secant on f' inside the bracket around the best sample.
  if (cfg.polish && out.converged)
  {
    std::vector<detail::Sample> sorted = samples;
    std::sort(sorted.begin(), sorted.end(), [](const auto& p, const auto& q) { return p.x < q.x; });
    std::size_t ib = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i)
    {
      if (sorted[i].f < sorted[ib].f)
      {
        ib = i;
      }
    }
    detail::Sample lo{}, hi{};
    bool bracket = false;
    if (sorted[ib].g > 0.0 && ib > 0 && sorted[ib - 1].g < 0.0)
    {
      lo = sorted[ib - 1];
      hi = sorted[ib];
      bracket = true;
    }
    else if (sorted[ib].g < 0.0 && ib + 1 < sorted.size() && sorted[ib + 1].g > 0.0)
    {
      lo = sorted[ib];
      hi = sorted[ib + 1];
      bracket = true;
    }
    int side = 0;
    for (int it = 0; bracket && it < 30 && out.evaluations < cfg.max_evals + 30; ++it)
    {
      if (hi.x - lo.x <= 1e-13 * (1.0 + std::abs(lo.x)))
      {
        break;
      }
      double t = lo.x - lo.g * (hi.x - lo.x) / (hi.g - lo.g);
      const double margin = 0.01 * (hi.x - lo.x);
      if (!(t > lo.x + margin && t < hi.x - margin))
      {
        t = 0.5 * (lo.x + hi.x);
      }
      if (evaluate(t) == neg_inf)
      {
        out.message = "empty sentinel";
        return out;
      }
      const detail::Sample s = samples.back();
      if (std::abs(s.g) <= 1e-12 * (1.0 + std::abs(s.f)))
      {
        break;
      }
      // Illinois modification keeps the bracket shrinking from both sides.
      if (s.g < 0.0)
      {
        lo = s;
        if (side == -1)
        {
          hi.g *= 0.5;
        }
        side = -1;
      }
      else
      {
        hi = s;
        if (side == 1)
        {
          lo.g *= 0.5;
        }
        side = 1;
      }
    }
  }
  return out;
}

namespace detail
{
struct BfgsRun
{
  RVector x;
  double f = std::numeric_limits<double>::infinity();
  double stationarity = std::numeric_limits<double>::infinity();
  bool converged = false;
  int evaluations = 0;
};

inline BfgsRun projected_bfgs(const ObjectiveOracle& oracle, const ParameterBox& box, RVector x,
                              const OptimizerConfig& cfg, int budget)
{
  const Index d = box.dim();
  BfgsRun run;
  x = box.project(x);
  Evaluation e = oracle(x);
  ++run.evaluations;
  run.x = x;
  run.f = e.value;
  if (e.value == neg_inf)
  {
    run.converged = true;
    return run;
  }
  require(e.gradient.size() == d, "minimize_nd: oracle returned a gradient of the wrong length");
  RVector g = e.gradient;
  RMatrix h = RMatrix::Identity(d, d);
  bool scaled = false;
  const RVector width = box.upper - box.lower;
  auto at_lower = [&](Index j) { return x(j) <= box.lower(j) + 1e-14 * (1.0 + width(j)); };
  auto at_upper = [&](Index j) { return x(j) >= box.upper(j) - 1e-14 * (1.0 + width(j)); };

  while (run.evaluations < budget)
  {
    std::vector<bool> active(static_cast<std::size_t>(d), false);
    for (Index j = 0; j < d; ++j)
    {
      active[static_cast<std::size_t>(j)] = (at_lower(j) && g(j) > 0.0) || (at_upper(j) && g(j) < 0.0);
    }
    auto direction = [&](const RMatrix& hm) {
      RVector gf = g;
      for (Index j = 0; j < d; ++j)
      {
        if (active[static_cast<std::size_t>(j)])
        {
          gf(j) = 0.0;
        }
      }
      RVector p = -hm * gf;
      for (Index j = 0; j < d; ++j)
      {
        if (active[static_cast<std::size_t>(j)] || (at_lower(j) && p(j) < 0.0) || (at_upper(j) && p(j) > 0.0))
        {
          p(j) = 0.0;
        }
      }
      return p;
    };
    RVector p = direction(h);
    if (!(g.dot(p) < 0.0))
    {
      h = RMatrix::Identity(d, d);
      scaled = false;
      p = direction(h);
    }
    run.stationarity = (box.project(x + p) - x).norm();
    if (run.stationarity <= cfg.inner_tol || !(g.dot(p) < 0.0))
    {
      run.converged = true;
      break;
    }

    double t_max = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < d; ++j)
    {
      if (p(j) > 0.0)
      {
        t_max = std::min(t_max, (box.upper(j) - x(j)) / p(j));
      }
      else if (p(j) < 0.0)
      {
        t_max = std::min(t_max, (box.lower(j) - x(j)) / p(j));
      }
    }
    const double gp = g.dot(p);
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double t = std::min(1.0, t_max);
    bool accepted = false;
    RVector x_new, g_new;
    double f_new = 0.0;
    RVector x_lo;
    RVector g_lo;
    double f_lo = run.f;
    for (int ls = 0; ls < cfg.max_line_search && run.evaluations < budget; ++ls)
    {
      const RVector xt = box.project(x + t * p);
      const Evaluation et = oracle(xt);
      ++run.evaluations;
      if (et.value == neg_inf)
      {
        run.x = xt;
        run.f = neg_inf;
        run.converged = true;
        return run;
      }
      if (et.value > run.f + cfg.c1 * t * gp || !std::isfinite(et.value))
      {
        hi = t;
      }
      else if (et.gradient.dot(p) < cfg.c2 * gp && t < t_max)
      {
        lo = t;
        x_lo = xt;
        g_lo = et.gradient;
        f_lo = et.value;
      }
      else
      {
        x_new = xt;
        g_new = et.gradient;
        f_new = et.value;
        accepted = true;
        break;
      }
      t = std::isinf(hi) ? std::min(2.0 * lo, t_max) : 0.5 * (lo + hi);
      if (hi - lo <= 1e-16 * (1.0 + lo))
      {
        break;
      }
    }
    if (!accepted)
    {
      if (lo > 0.0)
      {
        x_new = x_lo;
        g_new = g_lo;
        f_new = f_lo;
      }
      else
      {
        // No decrease along a descent direction: treat as (nonsmooth) stationarity.
        run.converged = run.stationarity <= std::sqrt(cfg.inner_tol);
        break;
      }
    }

    const RVector s = x_new - x;
    const RVector y = g_new - g;
    const double sy = s.dot(y);
    const double f_old = run.f;
    x = x_new;
    g = g_new;
    run.x = x;
    run.f = f_new;
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0)
    {
      if (!scaled)
      {
        h = RMatrix::Identity(d, d) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const RMatrix i_sy = RMatrix::Identity(d, d) - rho * s * y.transpose();
      h = i_sy * h * i_sy.transpose() + rho * s * s.transpose();
    }
    else
    {
      h = RMatrix::Identity(d, d);
      scaled = false;
    }
    if (s.norm() <= 1e-14 * (1.0 + x.norm()) && std::abs(f_old - run.f) <= 1e-15 * (1.0 + std::abs(run.f)))
    {
      run.converged = true;
      break;
    }
  }
  return run;
}
} // namespace detail

/// Box-constrained minimization with projected BFGS from x0 and seeded random restarts.
inline OptimizeResult minimize_nd(const ObjectiveOracle& oracle, const ParameterBox& box,
                                  const OptimizerConfig& cfg = {}, const std::optional<RVector>& x0 = std::nullopt)
{
  cfg.validate();
  box.validate();
  const Index d = box.dim();
  std::vector<RVector> starts;
  if (x0)
  {
    require(x0->size() == d && x0->allFinite(), "minimize_nd: x0 must be a finite d-vector");
    starts.push_back(box.project(*x0));
  }
  else
  {
    starts.push_back(0.5 * (box.lower + box.upper));
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(starts.size()) < cfg.restarts)
  {
    RVector x(d);
    for (Index j = 0; j < d; ++j)
    {
      x(j) = box.lower(j) + unit(rng) * (box.upper(j) - box.lower(j));
    }
    starts.push_back(x);
  }

  OptimizeResult out;
  out.x = starts.front();
  const int budget = std::max(1, cfg.max_evals / cfg.restarts);
  std::string last_error;
  for (const RVector& s : starts)
  {
    detail::BfgsRun run;
    try
    {
      run = detail::projected_bfgs(oracle, box, s, cfg, budget);
    }
    catch (const SolverFailure& e)
    {
      ++out.failed_restarts;
      last_error = e.what();
      continue;
    }
    out.evaluations += run.evaluations;
    if (run.f < out.value)
    {
      out.value = run.f;
      out.x = run.x;
      out.converged = run.converged;
      out.stationarity = run.stationarity;
    }
    if (run.f == neg_inf)
    {
      out.message = "empty sentinel";
      return out;
    }
  }
  if (out.failed_restarts == static_cast<int>(starts.size()))
  {
    throw SolverFailure("minimize_nd: every restart failed; last error: " + last_error);
  }
  if (out.failed_restarts > 0)
  {
    out.message = std::to_string(out.failed_restarts) + " restart(s) failed: " + last_error;
  }
  return out;
}

} // namespace psopt

#endif // PSOPT_OPTIM_HPP
