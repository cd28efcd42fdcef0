// SPDX-License-Identifier: Apache-2.0
//
// psopt: command-line front end.
//
//   psopt psa MATRIX.mtx --eps E
//   psopt minimize PROBLEM.json [--extended]
//   psopt bench SUITE.json [--baseline] [--jobs N]
//   psopt boundary (MATRIX.mtx | PROBLEM.json --x ...) --eps E
//
// Exit codes: 0 converged, 1 input error, 2 not converged, 3 solver failure.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "psopt/descriptor.hpp"
#include "psopt/io.hpp"
#include "psopt/psopt.hpp"

namespace fs = std::filesystem;
using namespace psopt;
using io::Json;

namespace
{

enum Exit : int
{
  ok = 0,
  input_error = 1,
  not_converged = 2,
  solver_error = 3
};

struct RunConfig
{
  std::optional<double> eps;
  double tol = 1e-7;
  int eta = 10;
  int max_iters = 30;
  double gamma = -400.0;
  Index size_switch = 1000;
  std::uint64_t seed = 20220101;
  bool extended = false;
  bool reference = false; // record the direct grid minimum for synthetic problems
  std::string out_dir;
  std::string format = "csv";
  std::string config_file;

  void load(const Json& j)
  {
    desc::detail::check_keys(j, {"eps", "tol", "eta", "max_iters", "gamma", "size_switch", "seed", "extended",
                                 "reference", "out_dir", "format"},
                             "config");
    if (j.contains("eps"))
    {
      eps = j.at("eps").get<double>();
    }
    tol = j.value("tol", tol);
    eta = j.value("eta", eta);
    max_iters = j.value("max_iters", max_iters);
    gamma = j.value("gamma", gamma);
    size_switch = j.value("size_switch", size_switch);
    seed = j.value("seed", seed);
    extended = j.value("extended", extended);
    reference = j.value("reference", reference);
    out_dir = j.value("out_dir", out_dir);
    format = j.value("format", format);
  }

  void validate() const
  {
    if (eps)
    {
      require(std::isfinite(*eps) && *eps > 0.0, "--eps must be positive");
    }
    require(tol > 0.0, "--tol must be positive");
    require(eta >= 1, "--eta must be at least 1");
    require(max_iters >= 3, "--max-iters must be at least 3");
    require(gamma < 0.0, "--gamma must be negative");
    require(size_switch >= 0, "--size-switch must be nonnegative");
    require(format == "csv" || format == "json", "--format must be csv or json");
  }

  FrameworkConfig framework(double e) const
  {
    FrameworkConfig cfg;
    cfg.eps = e;
    cfg.tol = tol;
    cfg.eta = eta;
    cfg.max_iters = max_iters;
    cfg.inner.gamma = gamma;
    cfg.size_switch = size_switch;
    cfg.psa.size_switch = size_switch;
    cfg.seed = seed;
    cfg.inner.seed = seed;
    cfg.extended = extended;
    return cfg;
  }

  Json to_json() const
  {
    return Json{{"eps", eps ? io::num(*eps) : Json(nullptr)},
                {"tol", io::num(tol)},
                {"eta", eta},
                {"max_iters", max_iters},
                {"gamma", io::num(gamma)},
                {"size_switch", size_switch},
                {"seed", seed},
                {"extended", extended},
                {"reference", reference},
                {"format", format}};
  }
};

void add_shared(CLI::App* app, RunConfig& rc, bool framework_flags)
{
  app->add_option("--eps", rc.eps, "Perturbation level epsilon");
  app->add_option("--size-switch", rc.size_switch, "Use the large-scale path above this order")
      ->capture_default_str();
  app->add_option("--out-dir", rc.out_dir, "Directory for output files");
  app->add_option("--format", rc.format, "Report format: csv or json")->capture_default_str();
  app->add_option("--config", rc.config_file, "JSON file with defaults for the flags");
  if (framework_flags)
  {
    app->add_option("--tol", rc.tol, "Termination tolerance")->capture_default_str();
    app->add_option("--eta", rc.eta, "Number of initial interpolation points")->capture_default_str();
    app->add_option("--max-iters", rc.max_iters, "Iteration cap")->capture_default_str();
    app->add_option("--gamma", rc.gamma, "Curvature lower bound for the 1-D inner solver")->capture_default_str();
    app->add_option("--seed", rc.seed, "RNG seed")->capture_default_str();
    app->add_flag("--extended", rc.extended, "Add offset points each iteration");
    app->add_flag("--reference", rc.reference, "Synthetic problems (n <= 400): also record the grid minimum");
  }
}

// Explicit flags win over the config file.
void merge_config(CLI::App* app, RunConfig& rc)
{
  if (rc.config_file.empty())
  {
    return;
  }
  RunConfig from_file;
  from_file.load(desc::read_json(rc.config_file));
  auto given = [&](const char* name) { return app->get_option_no_throw(name) && app->count(name) > 0; };
  if (!given("--eps"))
  {
    rc.eps = from_file.eps;
  }
  if (!given("--tol"))
  {
    rc.tol = from_file.tol;
  }
  if (!given("--eta"))
  {
    rc.eta = from_file.eta;
  }
  if (!given("--max-iters"))
  {
    rc.max_iters = from_file.max_iters;
  }
  if (!given("--gamma"))
  {
    rc.gamma = from_file.gamma;
  }
  if (!given("--size-switch"))
  {
    rc.size_switch = from_file.size_switch;
  }
  if (!given("--seed"))
  {
    rc.seed = from_file.seed;
  }
  if (!given("--extended"))
  {
    rc.extended = from_file.extended;
  }
  if (!given("--reference"))
  {
    rc.reference = from_file.reference;
  }
  if (!given("--out-dir"))
  {
    rc.out_dir = from_file.out_dir;
  }
  if (!given("--format"))
  {
    rc.format = from_file.format;
  }
}

fs::path output_path(const RunConfig& rc, const std::string& file)
{
  const fs::path dir = rc.out_dir.empty() ? fs::path(".") : fs::path(rc.out_dir);
  fs::create_directories(dir);
  return dir / file;
}

void write_file(const fs::path& p, const std::string& content)
{
  std::ofstream out(p);
  if (!out)
  {
    throw ContractViolation("cannot write '" + p.string() + "'");
  }
  out << content;
}

Json provenance(const RunConfig& rc, const std::string& command)
{
  return Json{{"command", command}, {"version", version}, {"seed", rc.seed}, {"config", rc.to_json()}};
}

double resolve_eps(const RunConfig& rc, const std::optional<double>& from_problem)
{
  if (rc.eps)
  {
    return *rc.eps;
  }
  require(from_problem.has_value(), "--eps is required (the problem does not set eps)");
  return *from_problem;
}

// ---- psa ------------------------------------------------------------------------

int cmd_psa(const std::string& path, const RunConfig& rc)
{
  require(rc.eps.has_value(), "--eps is required");
  const MarketMatrix m = read_matrix_market(path);
  require(m.rows == m.cols, path + ": matrix must be square");
  StructuredMatrix a(m.rows);
  a.add_sparse(m.sparse, 1.0);
  PsaOptions opts;
  opts.size_switch = rc.size_switch;
  const auto t0 = std::chrono::steady_clock::now();
  const PsaResult r = psa_auto(a, *rc.eps, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  Json report = io::to_json(r, *rc.eps);
  report["n"] = m.rows;
  report["time"] = io::num(secs);
  report["run"] = provenance(rc, "psa");
  if (rc.format == "json")
  {
    std::cout << report.dump(2) << '\n';
  }
  else
  {
    std::cout << "alpha = " << io::fmt(r.alpha) << '\n'
              << "z = " << io::fmt(r.z.real()) << (r.z.imag() < 0 ? " - " : " + ") << io::fmt(std::abs(r.z.imag()))
              << "i\n"
              << "iterations = " << r.iterations << '\n'
              << "method = " << r.method << '\n'
              << "certificate residual = " << io::fmt(std::abs(r.triplet.sigma - *rc.eps)) << '\n';
  }
  if (!rc.out_dir.empty())
  {
    write_file(output_path(rc, "psa.json"), report.dump(2) + "\n");
  }
  return r.converged ? ok : not_converged;
}

// ---- minimize -------------------------------------------------------------------

constexpr double reference_tol = 1e-4;

std::optional<ReferenceMinimum> reference(const desc::Problem& p, const RunConfig& rc)
{
  if (!rc.reference || !p.synthetic || p.synthetic->spec.n > 400)
  {
    return std::nullopt;
  }
  return reference_minimum(*p.synthetic);
}

Json summary(const desc::Problem& p, const FrameworkConfig& cfg, const MinimizationTrace& t, const RunConfig& rc)
{
  Json s{{"problem", p.name},
         {"type", p.type},
         {"n", p.family->n()},
         {"d", p.family->d()},
         {"eps", io::num(cfg.eps)},
         {"x_hat", io::vec(t.x_hat)},
         {"alpha_hat", io::num(t.alpha_hat)},
         {"z_hat", io::complex(t.z_hat)},
         {"converged", t.converged},
         {"iterations", static_cast<int>(t.iterations.size())},
         {"time", io::num(t.time_total)},
         {"red", io::num(t.time_reduced)},
         {"psa", io::num(t.time_psa)}};
  if (p.type == "sof")
  {
    const RVector zero = RVector::Zero(p.family->d());
    PsaOptions opts = cfg.psa;
    opts.size_switch = cfg.size_switch;
    s["alpha_at_zero"] = io::num(psa_auto(p.family->eval(zero), cfg.eps, opts).alpha);
  }
  if (const auto ref = reference(p, rc))
  {
    s["reference"] = Json{{"x", io::num(ref->x)},
                          {"alpha", io::num(ref->alpha)},
                          {"gap", io::num(t.alpha_hat - ref->alpha)},
                          {"match", std::abs(t.alpha_hat - ref->alpha) <= reference_tol}};
  }
  s["framework"] = io::to_json(cfg);
  s["run"] = provenance(rc, "minimize");
  s["log"] = t.log;
  return s;
}

void write_trace(const MinimizationTrace& t, const Json& s, const RunConfig& rc)
{
  std::ostringstream csv;
  io::write_trace_csv(csv, t);
  write_file(output_path(rc, "trace.csv"), csv.str());
  Json full = s;
  full["trace"] = io::to_json(t);
  write_file(output_path(rc, "summary.json"), full.dump(2) + "\n");
}

int cmd_minimize(const std::string& path, const RunConfig& rc)
{
  const desc::Problem p = desc::load_problem_file(path);
  const FrameworkConfig cfg = rc.framework(resolve_eps(rc, p.eps));
  cfg.validate(p.family->d());
  MinimizationTrace t;
  int code = ok;
  try
  {
    t = minimize(*p.family, p.box, cfg);
    code = t.converged ? ok : not_converged;
  }
  catch (const FrameworkAborted& e)
  {
    std::cerr << "psopt: " << e.what() << '\n';
    t = e.trace();
    t.log.push_back(std::string("aborted: ") + e.what());
    code = solver_error;
  }
  Json s = summary(p, cfg, t, rc);
  write_trace(t, s, rc);
  if (rc.format == "json")
  {
    std::cout << s.dump(2) << '\n';
  }
  else
  {
    std::cout << "problem,n,d,eps,alpha_hat,iterations,converged,time,red,psa,x_hat\n"
              << p.name << ',' << p.family->n() << ',' << p.family->d() << ',' << io::fmt(cfg.eps) << ','
              << io::fmt(t.alpha_hat) << ',' << t.iterations.size() << ',' << (t.converged ? 1 : 0) << ','
              << io::fmt(t.time_total) << ',' << io::fmt(t.time_reduced) << ',' << io::fmt(t.time_psa) << ',';
    for (Index j = 0; j < t.x_hat.size(); ++j)
    {
      std::cout << (j ? " " : "") << io::fmt(t.x_hat(j));
    }
    std::cout << '\n';
  }
  return code;
}

// ---- bench ----------------------------------------------------------------------

struct BenchRow
{
  std::string name;
  Index n = 0;
  double eps = 0.0;
  RVector x;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;
  double time = 0.0, red = 0.0, psa = 0.0;
  bool has_baseline = false;
  double direct_alpha = std::numeric_limits<double>::quiet_NaN();
  double direct_time = 0.0;
  double reference_alpha = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
};

// Minimization of the full objective without subspaces.
std::pair<OptimizeResult, double> direct_baseline(const desc::Problem& p, const FrameworkConfig& cfg)
{
  const auto t0 = std::chrono::steady_clock::now();
  ObjectiveOracle oracle = [&](const RVector& x) {
    const auto fp = psopt::detail::full_rightmost(*p.family, x, cfg);
    return Evaluation{fp.psa.alpha, grad_alpha(*p.family, x, fp.triplet).gradient};
  };
  OptimizeResult r = p.family->d() == 1 ? minimize_1d(oracle, p.box.lower(0), p.box.upper(0), cfg.inner)
                                        : minimize_nd(oracle, p.box, cfg.inner);
  return {r, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
}

BenchRow run_bench_problem(const Json& entry, std::size_t index, const fs::path& base, const RunConfig& rc,
                           bool baseline)
{
  BenchRow row;
  row.name = "problem " + std::to_string(index);
  if (entry.is_object() && entry.contains("name") && entry.at("name").is_string())
  {
    row.name = entry.at("name").get<std::string>();
  }
  try
  {
    const desc::Problem p = entry.contains("file") && entry.size() == 1
                                ? desc::load_problem_file(base / entry.at("file").get<std::string>())
                                : desc::load_problem(entry, base);
    row.name = p.name;
    row.n = p.family->n();
    const FrameworkConfig cfg = rc.framework(resolve_eps(rc, p.eps));
    cfg.validate(p.family->d());
    row.eps = cfg.eps;
    const MinimizationTrace t = minimize(*p.family, p.box, cfg);
    row.x = t.x_hat;
    row.alpha = t.alpha_hat;
    row.iterations = static_cast<int>(t.iterations.size());
    row.converged = t.converged;
    row.time = t.time_total;
    row.red = t.time_reduced;
    row.psa = t.time_psa;
    if (!t.converged)
    {
      row.status = "not_converged";
    }
    if (const auto ref = reference(p, rc))
    {
      row.reference_alpha = ref->alpha;
      if (row.status == "ok" && std::abs(t.alpha_hat - ref->alpha) > reference_tol)
      {
        row.status = "reference_mismatch";
      }
    }
    if (baseline)
    {
      const auto [r, secs] = direct_baseline(p, cfg);
      row.has_baseline = true;
      row.direct_alpha = r.value;
      row.direct_time = secs;
    }
  }
  catch (const std::exception& e)
  {
    row.status = std::string("failed: ") + e.what();
  }
  return row;
}

std::string csv_field(std::string s)
{
  if (s.find_first_of(",\"\n") == std::string::npos)
  {
    return s;
  }
  std::string q = "\"";
  for (char c : s)
  {
    q += c == '"' ? std::string("\"\"") : std::string(1, c);
  }
  return q + "\"";
}

int cmd_bench(const std::string& path, const RunConfig& rc, bool baseline_flag, int jobs)
{
  const Json suite = desc::read_json(path);
  desc::detail::check_keys(suite, {"problems", "baseline"}, "suite");
  require(suite.contains("problems") && suite.at("problems").is_array(), "suite: 'problems' must be an array");
  const Json& problems = suite.at("problems");
  require(!problems.empty(), "suite: no problems listed");
  require(jobs >= 1, "--jobs must be at least 1");
  const bool baseline = baseline_flag || suite.value("baseline", false);
  const fs::path base = fs::path(path).parent_path();

  std::vector<BenchRow> rows(problems.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < problems.size(); i = next++)
    {
      rows[i] = run_bench_problem(problems[i], i, base, rc, baseline);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::min<int>(jobs, static_cast<int>(problems.size())); ++w)
  {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& th : pool)
  {
    th.join();
  }

  std::ostringstream csv;
  csv << "name,n,eps,x,alpha,iterations,converged,time,red,psa,direct_alpha,direct_time,speedup,reference_alpha,status\n";
  Json jrows = Json::array();
  bool failed = false;
  for (const auto& r : rows)
  {
    failed = failed || r.status != "ok";
    std::string xs;
    for (Index j = 0; j < r.x.size(); ++j)
    {
      xs += (j ? " " : "") + io::fmt(r.x(j));
    }
    const double speedup = r.has_baseline && r.time > 0.0 ? r.direct_time / r.time : std::nan("");
    csv << csv_field(r.name) << ',' << r.n << ',' << io::fmt(r.eps) << ',' << xs << ',' << io::fmt(r.alpha) << ','
        << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << io::fmt(r.time) << ',' << io::fmt(r.red) << ','
        << io::fmt(r.psa) << ',' << (r.has_baseline ? io::fmt(r.direct_alpha) : "") << ','
        << (r.has_baseline ? io::fmt(r.direct_time) : "") << ',' << (r.has_baseline ? io::fmt(speedup) : "") << ','
        << (std::isnan(r.reference_alpha) ? "" : io::fmt(r.reference_alpha)) << ',' << csv_field(r.status) << '\n';
    Json jr{{"name", r.name},         {"n", r.n},
            {"eps", io::num(r.eps)},  {"x", io::vec(r.x)},
            {"alpha", io::num(r.alpha)}, {"iterations", r.iterations},
            {"converged", r.converged}, {"time", io::num(r.time)},
            {"red", io::num(r.red)},  {"psa", io::num(r.psa)},
            {"status", r.status}};
    if (r.has_baseline)
    {
      jr["direct_alpha"] = io::num(r.direct_alpha);
      jr["direct_time"] = io::num(r.direct_time);
      jr["speedup"] = io::num(speedup);
    }
    if (!std::isnan(r.reference_alpha))
    {
      jr["reference_alpha"] = io::num(r.reference_alpha);
    }
    jrows.push_back(jr);
  }
  const Json report{{"rows", jrows}, {"baseline", baseline}, {"run", provenance(rc, "bench")}};
  write_file(output_path(rc, "bench.csv"), csv.str());
  write_file(output_path(rc, "bench.json"), report.dump(2) + "\n");
  std::cout << (rc.format == "json" ? report.dump(2) + "\n" : csv.str());
  return failed ? not_converged : ok;
}

// ---- boundary -------------------------------------------------------------------

int cmd_boundary(const std::string& path, const RunConfig& rc, const std::vector<double>& x,
                 const std::vector<double>& window, int resolution)
{
  CMatrix a;
  std::optional<double> problem_eps;
  if (fs::path(path).extension() == ".json")
  {
    const desc::Problem p = desc::load_problem_file(path);
    require(static_cast<Index>(x.size()) == p.family->d(),
            "--x needs " + std::to_string(p.family->d()) + " values for this problem");
    a = p.family->eval(Eigen::Map<const RVector>(x.data(), static_cast<Index>(x.size()))).to_dense();
    problem_eps = p.eps;
  }
  else
  {
    require(x.empty(), "--x only applies to problem descriptors");
    const MarketMatrix m = read_matrix_market(path);
    require(m.rows == m.cols, path + ": matrix must be square");
    a = m.dense().cast<cplx>();
  }
  const double eps = resolve_eps(rc, problem_eps);
  Window w{};
  if (window.empty())
  {
    const CVector lambda = Eigen::ComplexEigenSolver<CMatrix>(a, false).eigenvalues();
    w = {lambda.real().minCoeff() - 2 * eps, lambda.real().maxCoeff() + 2 * eps, lambda.imag().minCoeff() - 2 * eps,
         lambda.imag().maxCoeff() + 2 * eps};
  }
  else
  {
    require(window.size() == 4, "--window needs re_lo re_hi im_lo im_hi");
    w = {window[0], window[1], window[2], window[3]};
  }
  const auto lines = boundary_polyline(a, eps, w, resolution);
  std::ostringstream csv;
  io::write_polylines_csv(csv, lines);
  if (!rc.out_dir.empty())
  {
    write_file(output_path(rc, "boundary.csv"), csv.str());
  }
  std::cout << csv.str();
  return ok;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Minimize the pseudospectral abscissa of affine matrix families"};
  app.set_version_flag("--version", std::string(version));
  app.require_subcommand(1);

  RunConfig rc;
  std::string input;
  bool baseline = false;
  int jobs = 1;
  std::vector<double> x, window;
  int resolution = 200;

  auto* psa = app.add_subcommand("psa", "Pseudospectral abscissa of a Matrix Market matrix");
  psa->add_option("matrix", input, "Matrix Market file")->required();
  add_shared(psa, rc, false);

  auto* mini = app.add_subcommand("minimize", "Minimize over the parameter box of a JSON problem");
  mini->add_option("problem", input, "Problem descriptor (JSON)")->required();
  add_shared(mini, rc, true);

  auto* bench = app.add_subcommand("bench", "Run a suite of problems");
  bench->add_option("suite", input, "Suite file (JSON)")->required();
  bench->add_flag("--baseline", baseline, "Also minimize the full objective directly");
  bench->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
  add_shared(bench, rc, true);

  auto* bnd = app.add_subcommand("boundary", "Boundary polylines of the pseudospectrum");
  bnd->add_option("input", input, "Matrix Market file or problem descriptor")->required();
  bnd->add_option("--x", x, "Parameter value (descriptors only)");
  bnd->add_option("--window", window, "re_lo re_hi im_lo im_hi")->expected(4);
  bnd->add_option("--resolution", resolution, "Grid points per side")->capture_default_str();
  add_shared(bnd, rc, false);

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? ok : input_error;
  }

  CLI::App* sub = app.get_subcommands().front();
  try
  {
    merge_config(sub, rc);
    rc.validate();
    if (sub == psa)
    {
      return cmd_psa(input, rc);
    }
    if (sub == mini)
    {
      return cmd_minimize(input, rc);
    }
    if (sub == bench)
    {
      return cmd_bench(input, rc, baseline, jobs);
    }
    return cmd_boundary(input, rc, x, window, resolution);
  }
  catch (const ParseError& e)
  {
    std::cerr << "psopt: " << e.what() << '\n';
    return input_error;
  }
  catch (const ContractViolation& e)
  {
    std::cerr << "psopt: " << e.what() << '\n';
    return input_error;
  }
  catch (const nlohmann::json::exception& e)
  {
    std::cerr << "psopt: " << e.what() << '\n';
    return input_error;
  }
  catch (const std::exception& e)
  {
    std::cerr << "psopt: " << e.what() << '\n';
    return solver_error;
  }
}
