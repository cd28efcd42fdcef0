// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <gtest/gtest.h>

#include "psopt/descriptor.hpp"
#include "psopt/io.hpp"

using namespace psopt;

namespace
{

MinimizationTrace two_step_trace()
{
  MinimizationTrace t;
  t.seed = 7;
  for (int k = 1; k <= 2; ++k)
  {
    IterationRecord r;
    r.k = k;
    r.x = RVector::Constant(2, 0.5 / k);
    r.z = cplx(0.25 * k, -1.0);
    r.reduced_opt = k == 1 ? neg_inf : 0.125;
    r.full_alpha = 0.2;
    r.subspace_dim = 3 + k;
    r.time_reduced = 1.5;
    r.time_psa = 0.5;
    r.time_triplet = 0.25;
    r.interpolating = true;
    r.reduced_empty = k == 1;
    t.iterations.push_back(r);
  }
  t.x_hat = t.iterations.back().x;
  t.z_hat = t.iterations.back().z;
  t.alpha_hat = 0.2;
  t.converged = true;
  return t;
}

} // namespace

TEST(Format, TenSignificantDigitsAndNonFinite)
{
  EXPECT_EQ(io::fmt(-0.91496001234567), "-0.9149600123");
  EXPECT_EQ(io::fmt(1e-7), "1e-07");
  EXPECT_EQ(io::fmt(neg_inf), "-inf");
  EXPECT_EQ(io::fmt(std::nan("")), "nan");
  EXPECT_EQ(io::num(neg_inf), io::Json("-inf"));
  EXPECT_EQ(io::num(0.1740919).get<double>(), 0.1740919);
}

TEST(TraceCsv, Golden)
{
  std::ostringstream out;
  io::write_trace_csv(out, two_step_trace());
  EXPECT_EQ(out.str(),
            "k,x1,x2,reduced_opt,full_alpha,re_z,im_z,subspace_dim,time_reduced,time_psa,time_triplet,"
            "interpolating,reduced_empty\n"
            "1,0.5,0.5,-inf,0.2,0.25,-1,4,1.5,0.5,0.25,1,1\n"
            "2,0.25,0.25,0.125,0.2,0.5,-1,5,1.5,0.5,0.25,1,0\n");
}

TEST(TraceCsv, EmptyTraceHasHeaderOnly)
{
  std::ostringstream out;
  io::write_trace_csv(out, MinimizationTrace{});
  EXPECT_EQ(out.str(),
            "k,reduced_opt,full_alpha,re_z,im_z,subspace_dim,time_reduced,time_psa,time_triplet,interpolating,"
            "reduced_empty\n");
}

TEST(PolylineCsv, Golden)
{
  Polyline a;
  a.points = {cplx(0.0, 1.0), cplx(-1.0, 0.0)};
  a.component = 0;
  Polyline b;
  b.points = {cplx(2.5, -0.5)};
  b.component = 1;
  std::ostringstream out;
  io::write_polylines_csv(out, {a, b});
  EXPECT_EQ(out.str(), "re,im,component_id\n0,1,0\n-1,0,0\n2.5,-0.5,1\n");
}

TEST(TraceJson, StableKeys)
{
  const io::Json j = io::to_json(two_step_trace());
  std::vector<std::string> keys;
  for (const auto& [k, _] : j.items())
  {
    keys.push_back(k);
  }
  const std::vector<std::string> expect{"x_hat", "z_hat", "alpha_hat", "converged", "iterations", "seed", "extended",
                                        "time",  "time_reduced", "time_psa", "init", "trace", "log"};
  EXPECT_EQ(keys, expect);
  EXPECT_EQ(j["trace"][0]["reduced_opt"], "-inf");
  EXPECT_EQ(j["seed"], 7);
}

TEST(ConfigJson, RoundTripsValues)
{
  FrameworkConfig cfg;
  cfg.eps = 0.3;
  cfg.eta = 4;
  const io::Json j = io::to_json(cfg);
  EXPECT_EQ(j["eps"].get<double>(), 0.3);
  EXPECT_EQ(j["eta"], 4);
  EXPECT_EQ(j["gamma"].get<double>(), -400.0);
  EXPECT_EQ(j["size_switch"], 1000);
}

TEST(Descriptor, AffineInline)
{
  const auto j = io::Json::parse(R"({"type":"affine","name":"toy","n":2,"d":1,
    "terms":[{"matrix":[[1,0],[0,0]],"function":{"kind":"polynomial","monomials":[{"coeff":1,"powers":[2]}]}},
             {"matrix":[[0,0],[0,-2]],"function":{"kind":"constant"}},
             {"rank_one":{"b":[1,0],"c":[0,1]},"function":{"kind":"coordinate","index":0}}],
    "lower":-1,"upper":[1],"eps":0.1})");
  const auto p = desc::load_problem(j);
  EXPECT_EQ(p.name, "toy");
  EXPECT_EQ(p.family->kappa(), 3);
  EXPECT_EQ(*p.eps, 0.1);
  const CMatrix a = p.family->eval(RVector::Constant(1, 0.5)).to_dense();
  EXPECT_NEAR(a(0, 0).real(), 0.25, 1e-15);
  EXPECT_NEAR(a(0, 1).real(), 0.5, 1e-15);
  EXPECT_NEAR(a(1, 1).real(), -2.0, 1e-15);
}

TEST(Descriptor, SofInline)
{
  const auto j = io::Json::parse(R"({"type":"sof","a":[[0,1],[-1,0]],"b":[[1],[0]],"c":[[0,1]],
    "lower":-2,"upper":2})");
  const auto p = desc::load_problem(j);
  EXPECT_EQ(p.family->d(), 1);
  EXPECT_FALSE(p.eps.has_value());
  const CMatrix a = p.family->eval(RVector::Constant(1, 3.0)).to_dense();
  EXPECT_NEAR(a(0, 1).real(), 4.0, 1e-15);
}

TEST(Descriptor, RejectsUnknownKeysAndBadValues)
{
  EXPECT_THROW(desc::load_problem(io::Json::parse(R"({"type":"synthetic","n":10,"colour":1})")), ContractViolation);
  EXPECT_THROW(desc::load_problem(io::Json::parse(R"({"type":"blob"})")), ContractViolation);
  EXPECT_THROW(desc::load_problem(io::Json::parse(R"({"type":"affine","n":2,"d":1,"lower":0,"upper":1,
    "terms":[{"matrix":[[1,0],[0,1]],"function":{"kind":"coordinate","index":3}}]})")),
               ContractViolation);
  EXPECT_THROW(desc::load_problem(io::Json::parse(R"({"type":"affine","n":2,"d":1,"lower":0,"upper":1,"eps":-1,
    "terms":[{"matrix":[[1,0],[0,1]],"function":{"kind":"constant"}}]})")),
               ContractViolation);
  EXPECT_THROW(desc::load_problem(io::Json::parse(R"({"type":"affine","n":2,"d":1,"lower":0,"upper":1,
    "terms":[{"matrix":[[1,0]],"function":{"kind":"constant"}}]})")),
               ContractViolation);
}

TEST(Descriptor, SyntheticIsDeterministic)
{
  const auto j = io::Json::parse(R"({"type":"synthetic","n":30,"seed":4})");
  const auto p = desc::load_problem(j);
  const auto q = desc::load_problem(j);
  EXPECT_EQ((p.synthetic->b - q.synthetic->b).norm(), 0.0);
  EXPECT_EQ(p.box.lower(0), -0.3);
  EXPECT_EQ(*p.eps, 0.1);
}
