// SPDX-License-Identifier: Apache-2.0

// Trace and report serialization. Floating values carry 10 significant digits.

#ifndef PSOPT_IO_HPP
#define PSOPT_IO_HPP

#include <cstdio>
#include <ostream>
#include <string>

#include <json.hpp>

#include "psopt/framework.hpp"
#include "psopt/psa.hpp"

namespace psopt::io
{

using Json = nlohmann::ordered_json;

inline std::string fmt(double v)
{
  if (std::isnan(v))
  {
    return "nan";
  }
  if (std::isinf(v))
  {
    return v > 0 ? "inf" : "-inf";
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// JSON has no infinities; non-finite values become strings.
inline Json num(double v)
{
  if (!std::isfinite(v))
  {
    return fmt(v);
  }
  return std::stod(fmt(v));
}

inline Json vec(const RVector& x)
{
  Json a = Json::array();
  for (Index i = 0; i < x.size(); ++i)
  {
    a.push_back(num(x(i)));
  }
  return a;
}

inline Json complex(cplx z) { return Json{{"re", num(z.real())}, {"im", num(z.imag())}}; }

inline Json to_json(const FrameworkConfig& cfg)
{
  return Json{{"eps", num(cfg.eps)},
              {"eta", cfg.eta},
              {"tol", num(cfg.tol)},
              {"max_iters", cfg.max_iters},
              {"extended", cfg.extended},
              {"seed", cfg.seed},
              {"size_switch", cfg.size_switch},
              {"gamma", num(cfg.inner.gamma)},
              {"inner_tol", num(cfg.inner.inner_tol)},
              {"max_evals", cfg.inner.max_evals},
              {"restarts", cfg.inner.restarts}};
}

/// Columns: k, x_1..x_d, reduced_opt, full_alpha, re_z, im_z, subspace_dim,
/// time_reduced, time_psa, time_triplet, interpolating, reduced_empty.
inline void write_trace_csv(std::ostream& out, const MinimizationTrace& trace)
{
  const Index d = trace.iterations.empty() ? 0 : trace.iterations.front().x.size();
  out << "k";
  for (Index j = 0; j < d; ++j)
  {
    out << ",x" << j + 1;
  }
  out << ",reduced_opt,full_alpha,re_z,im_z,subspace_dim,time_reduced,time_psa,time_triplet,interpolating,"
         "reduced_empty\n";
  for (const auto& r : trace.iterations)
  {
    out << r.k;
    for (Index j = 0; j < d; ++j)
    {
      out << ',' << fmt(r.x(j));
    }
    out << ',' << fmt(r.reduced_opt) << ',' << fmt(r.full_alpha) << ',' << fmt(r.z.real()) << ','
        << fmt(r.z.imag()) << ',' << r.subspace_dim << ',' << fmt(r.time_reduced) << ',' << fmt(r.time_psa) << ','
        << fmt(r.time_triplet) << ',' << (r.interpolating ? 1 : 0) << ',' << (r.reduced_empty ? 1 : 0) << '\n';
  }
}

inline Json to_json(const MinimizationTrace& trace)
{
  Json its = Json::array();
  for (const auto& r : trace.iterations)
  {
    its.push_back(Json{{"k", r.k},
                       {"x", vec(r.x)},
                       {"z", complex(r.z)},
                       {"reduced_opt", num(r.reduced_opt)},
                       {"full_alpha", num(r.full_alpha)},
                       {"gap", num(r.gap())},
                       {"subspace_dim", r.subspace_dim},
                       {"uv", complex(r.uv)},
                       {"interpolating", r.interpolating},
                       {"reduced_empty", r.reduced_empty},
                       {"basis_grew", r.basis_grew},
                       {"inner_evaluations", r.inner_evaluations},
                       {"extra_points", r.extra_points},
                       {"time_reduced", num(r.time_reduced)},
                       {"time_psa", num(r.time_psa)},
                       {"time_triplet", num(r.time_triplet)}});
  }
  Json init = Json::array();
  for (const auto& p : trace.init)
  {
    init.push_back(Json{{"x", vec(p.x)}, {"z", complex(p.z)}, {"alpha", num(p.alpha)}});
  }
  Json j{{"x_hat", vec(trace.x_hat)},
         {"z_hat", complex(trace.z_hat)},
         {"alpha_hat", num(trace.alpha_hat)},
         {"converged", trace.converged},
         {"iterations", static_cast<int>(trace.iterations.size())},
         {"seed", trace.seed},
         {"extended", trace.extended},
         {"time", num(trace.time_total)},
         {"time_reduced", num(trace.time_reduced)},
         {"time_psa", num(trace.time_psa)},
         {"init", init},
         {"trace", its},
         {"log", trace.log}};
  return j;
}

inline Json to_json(const PsaResult& r, double eps)
{
  return Json{{"eps", num(eps)},
              {"alpha", num(r.alpha)},
              {"z", complex(r.z)},
              {"empty", r.empty},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"method", r.method},
              {"sigma", num(r.triplet.sigma)},
              {"level_residual", num(std::abs(r.triplet.sigma - eps))},
              {"triplet_residual", num(r.triplet.residual)}};
}

/// Columns: re, im, component_id (one row per vertex, polylines in order).
inline void write_polylines_csv(std::ostream& out, const std::vector<Polyline>& lines)
{
  out << "re,im,component_id\n";
  for (const auto& pl : lines)
  {
    for (const auto& p : pl.points)
    {
      out << fmt(p.real()) << ',' << fmt(p.imag()) << ',' << pl.component << '\n';
    }
  }
}

} // namespace psopt::io

#endif // PSOPT_IO_HPP
