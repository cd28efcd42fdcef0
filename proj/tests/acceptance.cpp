// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero when a
// hard criterion fails; the superlinear-decay diagnostic is a soft gate.
//
// Optional benchmark data: set PSOPT_BENCH_DATA to a directory holding nn18.json,
// hf1.json and hf2d2.json (SOF descriptors) to enable the table regression.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>

#include "frozen.hpp"
#include "oracles.hpp"
#include "psopt/descriptor.hpp"
#include "psopt/psopt.hpp"

using namespace psopt;

namespace
{

struct Verdict
{
  bool pass = true;
  bool soft = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

CVector eigenvalues(const CMatrix& a) { return Eigen::ComplexEigenSolver<CMatrix>(a, false).eigenvalues(); }

double rect_sigma(const ReducedPencil& p, cplx z) { return oracle::smin(p.a_tilde - z * p.b_tilde); }

SingularTriplet triplet_at(const CMatrix& a, cplx z)
{
  CMatrix m = a;
  m.diagonal().array() -= z;
  return smallest_triplet_dense(m);
}

AffineMatrixFamily random_family(oracle::Rng& rng, Index n, Index d, double shift, double scale, bool polynomial)
{
  AffineMatrixFamily f(n, d);
  RMatrix a0 = rng.real_matrix(n, n) / std::sqrt(static_cast<double>(n));
  a0.diagonal().array() += shift;
  f.add_term(a0, ScalarFunction::constant(1.0, d));
  for (Index j = 0; j < d; ++j)
  {
    const RMatrix aj = scale * rng.real_matrix(n, n) / std::sqrt(static_cast<double>(n));
    if (polynomial)
    {
      // x_j + 0.5 x_j^2
      std::vector<ScalarFunction::Monomial> m(2);
      m[0].coeff = 1.0;
      m[0].powers.assign(static_cast<std::size_t>(d), 0);
      m[0].powers[static_cast<std::size_t>(j)] = 1;
      m[1].coeff = 0.5;
      m[1].powers.assign(static_cast<std::size_t>(d), 0);
      m[1].powers[static_cast<std::size_t>(j)] = 2;
      f.add_term(aj, ScalarFunction::polynomial(m, d));
    }
    else
    {
      f.add_term(aj, ScalarFunction::coordinate(j, d));
    }
  }
  return f;
}

// ---- 1 ----------------------------------------------------------------------------

Verdict square_oracle()
{
  Verdict v;
  oracle::Rng rng(1001);
  const double eps_set[] = {1e-3, 1e-1, 1.0};
  double worst = 0.0;
  double t_lib = 0.0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 50; ++i)
  {
    const Index n = 4 + rng.below(37);
    const double eps = eps_set[i % 3];
    const CMatrix a = i % 2 == 0 ? CMatrix(rng.real_matrix(n, n).cast<cplx>()) : rng.complex_matrix(n, n);
    const auto t1 = Clock::now();
    const PsaResult r = i % 2 == 0 ? psa_square(RMatrix(a.real()), eps) : psa_square(a, eps);
    t_lib += since(t1);
    const CVector lambda = eigenvalues(a);
    std::vector<cplx> seeds(lambda.data(), lambda.data() + lambda.size());
    const double ref =
        oracle::grid_abscissa(oracle::square_level(a), eps, oracle::eigen_box(lambda, eps), 400, seeds);
    const double err = std::abs(r.alpha - ref);
    worst = std::max(worst, err);
    if (!(err <= 1e-5))
    {
      v.pass = false;
      v.detail += " [matrix " + std::to_string(i) + ": n=" + std::to_string(n) + " eps=" + fmt("%g", eps) +
                  " |dalpha|=" + fmt("%.3g", err) + "]";
    }
  }
  const double total = since(t0);
  v.detail = "50 matrices, max |dalpha| = " + fmt("%.2e", worst) + ", library time " + fmt("%.1f s", t_lib) +
             ", total " + fmt("%.1f s", total) + v.detail;
  if (t_lib > 120.0)
  {
    v.pass = false;
    v.detail += " [library time over 120 s]";
  }
  return v;
}

// ---- 2 ----------------------------------------------------------------------------

Verdict normal_closed_form()
{
  Verdict v;
  oracle::Rng rng(1002);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i)
  {
    const Index n = 2 + rng.below(39);
    CVector lambda(n);
    for (Index j = 0; j < n; ++j)
    {
      lambda(j) = cplx(rng.normal(), rng.normal());
    }
    const CMatrix q = rng.orthonormal(n, n);
    const CMatrix a = q * lambda.asDiagonal() * q.adjoint();
    const double eps = std::pow(10.0, rng.uniform(-3.0, 0.0));
    const double err = std::abs(psa_square(a, eps).alpha - (lambda.real().maxCoeff() + eps));
    worst = std::max(worst, err);
    v.pass = v.pass && err <= 1e-9;
  }
  v.detail = "20 normal matrices, max error " + fmt("%.2e", worst);
  return v;
}

// ---- 3 ----------------------------------------------------------------------------

Verdict monotonicity_interpolation()
{
  Verdict v;
  oracle::Rng rng(1003);
  const auto t0 = Clock::now();
  int chain_fail = 0, value_fail = 0, grad_fail = 0, grad_checked = 0;
  double worst_value = 0.0, worst_grad = 0.0;
  for (int i = 0; i < 30; ++i)
  {
    const Index n = 10 + rng.below(51);
    const Index d = 1 + rng.below(2);
    const auto fam = random_family(rng, n, d, 0.0, 0.5, i % 2 == 1);
    RVector x(d);
    for (Index j = 0; j < d; ++j)
    {
      x(j) = rng.uniform(-1.0, 1.0);
    }
    const double eps = std::pow(10.0, rng.uniform(-2.0, 0.0));
    const CMatrix a = fam.eval(x).to_dense();
    const PsaResult full = psa_square(a, eps);
    const SingularTriplet t = triplet_at(a, full.z);

    // Nested subspaces V1 in V2 with the last column of V2 the right singular vector.
    const Index k2 = 2 + rng.below(7);
    const Index k1 = 1 + rng.below(k2 - 1);
    ProjectionBasis basis(n);
    const CMatrix w = rng.orthonormal(n, k2 - 1);
    for (Index j = 0; j < k2 - 1; ++j)
    {
      basis.expand(w.col(j), x, cplx(0.0));
    }
    basis.expand(t.v, x, full.z);
    const CMatrix v2 = basis.matrix();
    const CMatrix v1 = v2.leftCols(k1);
    const ReducedFamily r1(fam, v1), r2(fam, v2);
    const auto p1 = r1.pencil_at(x), p2 = r2.pencil_at(x);
    for (int s = 0; s < 10; ++s)
    {
      const cplx z(full.z.real() + rng.normal(), full.z.imag() + rng.normal());
      const double sf = triplet_at(a, z).sigma, s2 = rect_sigma(p2.pencil, z), s1 = rect_sigma(p1.pencil, z);
      if (!(sf <= s2 + 1e-12 && s2 <= s1 + 1e-12))
      {
        ++chain_fail;
      }
    }
    const auto e1 = r1.evaluate(x, eps, {});
    const auto e2 = r2.evaluate(x, eps, {});
    if (!(e1.value <= e2.value + 1e-8 && e2.value <= full.alpha + 1e-8))
    {
      ++chain_fail;
    }
    const double dv = std::abs(e2.value - full.alpha);
    worst_value = std::max(worst_value, dv);
    if (!(dv <= 1e-8))
    {
      ++value_fail;
    }
    const cplx uv = t.u.dot(t.v);
    if (std::abs(uv) > 1e-6)
    {
      ++grad_checked;
      const RVector g = grad_alpha(fam, x, t).gradient;
      const double dg = (e2.gradient - g).norm();
      worst_grad = std::max(worst_grad, dg);
      if (!(dg <= 1e-6))
      {
        ++grad_fail;
      }
    }
  }
  const double secs = since(t0);
  v.pass = chain_fail == 0 && value_fail == 0 && grad_fail == 0 && secs <= 180.0;
  v.detail = "30 instances, chain violations " + std::to_string(chain_fail) + ", value interpolation max " +
             fmt("%.2e", worst_value) + ", gradient interpolation max " + fmt("%.2e", worst_grad) + " over " +
             std::to_string(grad_checked) + " nondegenerate, " + fmt("%.1f s", secs);
  return v;
}

// ---- 4 ----------------------------------------------------------------------------

Verdict gradients()
{
  Verdict v;
  oracle::Rng rng(1004);
  int fails = 0, sign_fails = 0;
  double worst = 0.0, worst_im = 0.0;
  auto check_uv = [&](cplx uv, cplx mu) {
    worst_im = std::max(worst_im, std::abs(uv.imag()));
    if (!(std::abs(uv.imag()) <= 1e-8 && uv.real() < 0.0 && std::abs(mu + 1.0 / uv) <= 1e-14 * std::abs(mu)))
    {
      ++sign_fails;
    }
  };
  for (int i = 0; i < 20; ++i)
  {
    const Index n = 5 + rng.below(26);
    const Index d = 1 + rng.below(3);
    const auto fam = random_family(rng, n, d, 0.0, 0.5, true);
    RVector x(d);
    for (Index j = 0; j < d; ++j)
    {
      x(j) = rng.uniform(-0.8, 0.8);
    }
    const double eps = std::pow(10.0, rng.uniform(-2.0, 0.0));
    auto alpha = [&](const RVector& y) { return psa_square(fam.eval(y), eps).alpha; };
    const CMatrix a = fam.eval(x).to_dense();
    const PsaResult full = psa_square(a, eps);
    const SingularTriplet t = triplet_at(a, full.z);
    const GradientResult g = grad_alpha(fam, x, t);
    check_uv(g.uv, g.mu);
    const RVector fd = oracle::fd_gradient(alpha, x, 1e-5);
    double err = (g.gradient - fd).norm() / (1.0 + g.gradient.norm());
    worst = std::max(worst, err);
    fails += err <= 1e-6 ? 0 : 1;

    // Reduced objective on a subspace containing the singular vectors of two nearby points.
    ProjectionBasis basis(n);
    for (int s = 0; s < 3; ++s)
    {
      RVector y = x;
      for (Index j = 0; j < d; ++j)
      {
        y(j) += 0.2 * rng.normal();
      }
      const CMatrix ay = fam.eval(y).to_dense();
      basis.expand(triplet_at(ay, psa_square(ay, eps).z).v, y, cplx(0.0));
    }
    const ReducedFamily red(fam, basis.matrix());
    const auto ev = red.evaluate(x, eps, {});
    if (ev.empty)
    {
      continue;
    }
    const auto comp = red.pencil_at(x);
    const CVector lifted = red.lift(comp, ev.psa.triplet.u);
    const GradientResult gr = grad_alpha_reduced(fam, basis.matrix(), x, SingularTriplet{ev.psa.triplet.sigma, lifted,
                                                                                            ev.psa.triplet.v, 0.0});
    check_uv(gr.uv, gr.mu);
    const RVector fdr = oracle::fd_gradient([&](const RVector& y) { return red.evaluate(y, eps, {}).value; }, x, 1e-5);
    err = (gr.gradient - fdr).norm() / (1.0 + gr.gradient.norm());
    err = std::max(err, (ev.gradient - fdr).norm() / (1.0 + ev.gradient.norm()));
    worst = std::max(worst, err);
    fails += err <= 1e-6 ? 0 : 1;
  }
  v.pass = fails == 0 && sign_fails == 0;
  v.detail = "20 instances (full and reduced), max relative FD error " + fmt("%.2e", worst) + ", max |Im u*v| " +
             fmt("%.1e", worst_im) + ", sign/mu violations " + std::to_string(sign_fails);
  return v;
}

// ---- 5 and 7 ----------------------------------------------------------------------

struct EndToEnd
{
  Verdict verdict;
  double subspace_time = 0.0; // first instance
};

EndToEnd synthetic_end_to_end()
{
  EndToEnd out;
  Verdict& v = out.verdict;
  const auto t0 = Clock::now();
  double worst = 0.0;
  int max_iters = 0;
  for (const auto& ref : frozen::synthetic_n200)
  {
    SyntheticSpec spec;
    spec.seed = static_cast<std::uint64_t>(ref.seed);
    const auto problem = make_synthetic(spec);
    FrameworkConfig cfg;
    cfg.eps = spec.eps;
    const auto t = minimize(problem.family(), problem.box(), cfg);
    if (ref.seed == frozen::synthetic_n200[0].seed)
    {
      out.subspace_time = t.time_total;
    }
    const double err = std::abs(t.alpha_hat - ref.alpha);
    worst = std::max(worst, err);
    max_iters = std::max(max_iters, static_cast<int>(t.iterations.size()));
    if (!(err <= 1e-4) || t.iterations.size() > 10 || !t.converged)
    {
      v.pass = false;
      v.detail += " [seed " + std::to_string(ref.seed) + ": alpha " + fmt("%.10g", t.alpha_hat) + " vs " +
                  fmt("%.10g", ref.alpha) + ", " + std::to_string(t.iterations.size()) + " iterations]";
    }
  }
  const double secs = since(t0);
  if (secs > 600.0)
  {
    v.pass = false;
  }
  v.detail = std::to_string(std::size(frozen::synthetic_n200)) + " synthetic n=200 families, max |dalpha| " +
             fmt("%.2e", worst) + ", max iterations " + std::to_string(max_iters) + ", " + fmt("%.1f s", secs) +
             v.detail;
  return out;
}

Verdict paper_tables(double subspace_time)
{
  Verdict v;
  std::ostringstream msg;

  // Direct minimization of the full objective on the first synthetic instance. It is
  // stopped once it has used three times the subspace time, which already settles the
  // comparison; `psopt bench --baseline` reports the complete direct run.
  SyntheticSpec spec;
  spec.seed = static_cast<std::uint64_t>(frozen::synthetic_n200[0].seed);
  const auto problem = make_synthetic(spec);
  const auto fam = problem.family();
  FrameworkConfig cfg;
  cfg.eps = spec.eps;
  struct Deadline
  {
  };
  const double budget = 3.0 * subspace_time;
  int evals = 0;
  const auto t0 = Clock::now();
  ObjectiveOracle direct = [&](const RVector& x) {
    if (since(t0) > budget)
    {
      throw Deadline{};
    }
    ++evals;
    const auto fp = psopt::detail::full_rightmost(fam, x, cfg);
    return Evaluation{fp.psa.alpha, grad_alpha(fam, x, fp.triplet).gradient};
  };
  try
  {
    const auto dr = minimize_1d(direct, spec.lower, spec.upper, cfg.inner);
    const double direct_time = since(t0);
    msg << "n=200 subspace " << fmt("%.1f s", subspace_time) << " vs direct " << fmt("%.1f s", direct_time)
        << " (direct alpha " << fmt("%.10g", dr.value) << ")";
    v.pass = subspace_time < direct_time;
  }
  catch (const Deadline&)
  {
    msg << "n=200 subspace " << fmt("%.1f s", subspace_time) << ", direct unfinished after " << fmt("%.1f s", since(t0))
        << " (" << evals << " evaluations)";
    v.pass = true;
  }

  const char* data = std::getenv("PSOPT_BENCH_DATA");
  if (data == nullptr)
  {
    msg << "; table regression skipped (PSOPT_BENCH_DATA not set)";
    v.detail = msg.str();
    return v;
  }
  struct Expect
  {
    const char* file;
    double alpha, alpha_tol;
    std::optional<double> alpha0;
    double alpha0_tol;
    std::vector<double> x;
    double x_tol;
  };
  const std::vector<Expect> table{{"nn18.json", -0.9149600, 1e-4, -0.8, 1e-4, {-1.0}, 1e-4},
                                  {"hf1.json", 0.1740919, 1e-3, std::nullopt, 0.0, {-0.36364, -0.26189}, 1e-2},
                                  {"hf2d2.json", -0.4124020, 1e-2, 0.4625511, 1e-3, {}, 0.0}};
  for (const auto& e : table)
  {
    const std::filesystem::path path = std::filesystem::path(data) / e.file;
    if (!std::filesystem::exists(path))
    {
      msg << "; " << e.file << " absent";
      continue;
    }
    const auto p = desc::load_problem_file(path);
    FrameworkConfig c;
    c.eps = p.eps.value_or(0.1);
    const auto t = minimize(*p.family, p.box, c);
    bool ok = std::abs(t.alpha_hat - e.alpha) <= e.alpha_tol;
    if (e.alpha0)
    {
      const double a0 = psa_auto(p.family->eval(RVector::Zero(p.family->d())), c.eps).alpha;
      ok = ok && std::abs(a0 - *e.alpha0) <= e.alpha0_tol;
    }
    for (std::size_t j = 0; j < e.x.size() && static_cast<Index>(j) < t.x_hat.size(); ++j)
    {
      ok = ok && std::abs(t.x_hat(static_cast<Index>(j)) - e.x[j]) <= e.x_tol;
    }
    msg << "; " << e.file << (ok ? " ok" : " MISMATCH") << " (alpha " << fmt("%.7f", t.alpha_hat) << ")";
    v.pass = v.pass && ok;
  }
  v.detail = msg.str();
  return v;
}

// ---- 6 ----------------------------------------------------------------------------

Verdict superlinear()
{
  Verdict v;
  v.soft = true;
  std::ostringstream msg;
  int accepted = 0, good = 0;
  // Errors are measured against the final iterate, which is itself only known to about
  // the inner tolerance; errors below the floor carry no rate information.
  const double floor = 1e-8;
  // Instances qualify before their ratios are looked at: interior minimizer, final
  // triplet far from degenerate, and at least three measurable ratios. Two initial
  // points keep the runs long enough to show a rate. Seeds are taken in order.
  for (int seed = 1; seed <= 40 && accepted < 5; ++seed)
  {
    SyntheticSpec spec;
    spec.n = 60;
    spec.seed = static_cast<std::uint64_t>(seed);
    const auto problem = make_synthetic(spec);
    FrameworkConfig cfg;
    cfg.eps = spec.eps;
    cfg.tol = 1e-12;
    cfg.eta = 2;
    const auto t = minimize(problem.family(), problem.box(), cfg);
    const double xs = t.x_hat(0);
    const bool interior = xs > spec.lower + 1e-3 && xs < spec.upper - 1e-3;
    std::vector<double> e;
    for (const auto& r : t.iterations)
    {
      const double err = std::abs(r.x(0) - xs);
      if (err > floor)
      {
        e.push_back(err);
      }
    }
    if (!interior || std::abs(t.iterations.back().uv) < 1e-2 || e.size() < 4)
    {
      continue;
    }
    ++accepted;
    const std::size_t m = e.size();
    const double r1 = e[m - 3] / e[m - 4], r2 = e[m - 2] / e[m - 3], r3 = e[m - 1] / e[m - 2];
    double rate = 0.0;
    for (std::size_t k = 1; k + 1 < m; ++k)
    {
      rate = std::max(rate, e[k + 1] / (e[k] * std::max(e[k], e[k - 1])));
    }
    const bool ok = r1 > r2 && r2 > r3 && r3 <= 0.1;
    good += ok ? 1 : 0;
    msg << " seed " << seed << ": " << fmt("%.1e", r1) << ", " << fmt("%.1e", r2) << ", " << fmt("%.1e", r3)
        << " (max e+/(e max(e,e-)) " << fmt("%.2g", rate) << ")" << (ok ? "" : " not decreasing") << ";";
  }
  v.pass = accepted == 5 && good == 5;
  v.detail = std::to_string(good) + " of " + std::to_string(accepted) + " instances decreasing; last three ratios:" +
             msg.str();
  return v;
}

// ---- 8 ----------------------------------------------------------------------------

Verdict extended_consistency()
{
  Verdict v;
  oracle::Rng rng(1008);
  std::ostringstream msg;
  double worst = 0.0;
  for (int i = 0; i < 5; ++i)
  {
    const Index n = 10 + rng.below(11);
    const auto fam = random_family(rng, n, 2, -0.5, 0.5, false);
    const auto box = ParameterBox::uniform(2, -1.0, 1.0);
    FrameworkConfig cfg;
    cfg.eps = 0.1;
    cfg.seed = 2000 + static_cast<std::uint64_t>(i);
    const auto plain = minimize(fam, box, cfg);
    const auto ext = minimize_extended(fam, box, cfg);
    const double dv = std::abs(plain.alpha_hat - ext.alpha_hat);
    worst = std::max(worst, dv);
    const bool ok = dv <= 1e-6 && ext.iterations.size() <= plain.iterations.size();
    v.pass = v.pass && ok;
    msg << " n=" << n << ": " << plain.iterations.size() << " vs " << ext.iterations.size() << " iterations"
        << (ok ? "" : " FAIL") << ";";
  }
  v.detail = "5 instances, max |dalpha| " + fmt("%.2e", worst) + ";" + msg.str();
  return v;
}

// ---- 9 ----------------------------------------------------------------------------

Verdict rect_oracle()
{
  Verdict v;
  oracle::Rng rng(1009);
  double worst = 0.0;
  int empty_cases = 0, fails = 0;
  for (int i = 0; i < 30; ++i)
  {
    const Index n = 10 + rng.below(31);
    const Index k = 2 + rng.below(7);
    const CMatrix a = i % 2 == 0 ? CMatrix(rng.real_matrix(n, n).cast<cplx>()) : rng.complex_matrix(n, n);
    const CMatrix basis = rng.orthonormal(n, k);
    const ReducedPencil p = compress_reduced(basis, CMatrix(a * basis));
    const oracle::Level f{p.a_tilde, p.b_tilde};
    if (i % 5 == 4)
    {
      // Empty case: eps at half the minimum of sigma over the box; outside the box
      // sigma >= |z| - ||A~|| > eps, and the grid spacing certifies the inside.
      const double reach = 2.0 * p.a_tilde.norm() + 1.0;
      const oracle::Box box{-reach, reach, -reach, reach};
      const int res = 400;
      const double h = 2.0 * reach / (res - 1);
      const double smin = oracle::grid_min(f, box, res);
      const double eps = 0.5 * smin;
      const bool certified = eps < smin - h && eps > 0.0;
      const auto r = psa_rect(p, eps);
      ++empty_cases;
      if (!certified || !r.empty || r.alpha != neg_inf)
      {
        ++fails;
        v.detail += " [empty case " + std::to_string(i) + " failed]";
      }
      continue;
    }
    const cplx z0(rng.normal(), rng.normal());
    const double eps = rng.uniform(1.05, 2.0) * rect_sigma(p, z0);
    // Outside this box sigma >= |z| - ||A~|| > eps.
    const double reach = p.a_tilde.norm() + eps + 1.0;
    const oracle::Box box{-reach, reach, -reach, reach};
    const auto r = psa_rect(p, eps);
    const double ref = oracle::grid_abscissa(f, eps, box, 400, {z0});
    const double err = r.empty ? std::numeric_limits<double>::infinity() : std::abs(r.alpha - ref);
    worst = std::max(worst, err);
    if (!(err <= 1e-4))
    {
      ++fails;
      v.detail += " [pencil " + std::to_string(i) + ": |dalpha| " + fmt("%.3g", err) + "]";
    }
  }
  v.pass = fails == 0 && empty_cases >= 5;
  v.detail = "30 pencils (" + std::to_string(empty_cases) + " empty), max |dalpha| " + fmt("%.2e", worst) + v.detail;
  return v;
}

} // namespace

int main(int argc, char** argv)
{
  // Optional list of criteria to run, e.g. "acceptance 1 2 9".
  std::vector<int> only;
  for (int i = 1; i < argc; ++i)
  {
    only.push_back(std::atoi(argv[i]));
  }
  auto wanted = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };

  bool failed = false;
  auto report = [&](int c, const Verdict& v, double secs) {
    const char* tag = v.pass ? "PASS" : (v.soft ? "SOFT-FAIL" : "FAIL");
    std::printf("criterion %d: %s%s (%.1f s) %s\n", c, tag, v.soft && v.pass ? " (soft)" : "", secs, v.detail.c_str());
    std::fflush(stdout);
    failed = failed || (!v.pass && !v.soft);
  };
  auto run = [&](int c, const std::function<Verdict()>& fn) {
    if (!wanted(c))
    {
      return;
    }
    const auto t0 = Clock::now();
    Verdict v;
    try
    {
      v = fn();
    }
    catch (const std::exception& e)
    {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    report(c, v, since(t0));
  };

  run(1, square_oracle);
  run(2, normal_closed_form);
  run(3, monotonicity_interpolation);
  run(4, gradients);
  double subspace_time = -1.0;
  run(5, [&] {
    auto r = synthetic_end_to_end();
    subspace_time = r.subspace_time;
    return r.verdict;
  });
  run(6, superlinear);
  run(7, [&] {
    if (subspace_time < 0.0)
    {
      SyntheticSpec spec;
      spec.seed = static_cast<std::uint64_t>(frozen::synthetic_n200[0].seed);
      const auto problem = make_synthetic(spec);
      FrameworkConfig cfg;
      cfg.eps = spec.eps;
      subspace_time = minimize(problem.family(), problem.box(), cfg).time_total;
    }
    return paper_tables(subspace_time);
  });
  run(8, extended_consistency);
  run(9, rect_oracle);
  return failed ? 1 : 0;
}
