// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "psopt/detail/lapack.hpp"
#include "psopt/psa.hpp"
#include "psopt/synthetic.hpp"

using namespace psopt;

namespace
{

CMatrix diag(std::initializer_list<cplx> d)
{
  CMatrix m = CMatrix::Zero(static_cast<Index>(d.size()), static_cast<Index>(d.size()));
  Index i = 0;
  for (cplx v : d)
  {
    m(i, i) = v;
    ++i;
  }
  return m;
}

double level_residual(const CMatrix& a, cplx z)
{
  CMatrix m = a;
  m.diagonal().array() -= z;
  return oracle::smin(m);
}

double rect_sigma(const ReducedPencil& p, cplx z) { return oracle::smin(p.a_tilde - z * p.b_tilde); }

ReducedPencil reduce(const CMatrix& a, const CMatrix& v) { return compress_reduced(v, a * v); }

StructuredMatrix sparse_handle(const SparseReal& s)
{
  StructuredMatrix m(s.rows());
  m.add_sparse(s, 1.0);
  return m;
}

SparseReal random_sparse(oracle::Rng& rng, Index n)
{
  std::vector<Eigen::Triplet<double>> e;
  for (Index i = 0; i < n; ++i)
  {
    e.emplace_back(static_cast<int>(i), static_cast<int>(i), -1.0);
    for (int k = 0; k < 4; ++k)
    {
      e.emplace_back(static_cast<int>(i), static_cast<int>(rng.below(n)), 0.3 * rng.normal());
    }
  }
  SparseReal s(n, n);
  s.setFromTriplets(e.begin(), e.end());
  return s;
}

// Jordan block: sigma_min(J - t I)^2 = (1 + 2t^2 - sqrt(1 + 4t^2)) / 2 for real t.
double jordan_alpha(double eps)
{
  auto g = [](double t) { return 0.5 * (1.0 + 2.0 * t * t - std::sqrt(1.0 + 4.0 * t * t)); };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i)
  {
    const double mid = 0.5 * (lo + hi);
    (g(mid) <= eps * eps ? lo : hi) = mid;
  }
  return lo;
}

} // namespace

TEST(PsaSquare, ScalarDisk)
{
  const auto r = psa_square(CMatrix(CMatrix::Constant(1, 1, -1.0)), 0.5);
  EXPECT_NEAR(r.alpha, -0.5, 1e-12);
  EXPECT_NEAR(std::abs(r.z - cplx(-0.5, 0.0)), 0.0, 1e-12);
  EXPECT_FALSE(r.empty);
  EXPECT_TRUE(r.converged);
}

TEST(PsaSquare, NormalMatrixIsInflatedSpectrum)
{
  const auto r = psa_square(diag({-2.0, cplx(-1.0, 1.0)}), 0.25);
  EXPECT_NEAR(r.alpha, -0.75, 1e-12);
  EXPECT_NEAR(std::abs(r.z - cplx(-0.75, 1.0)), 0.0, 1e-9);
}

TEST(PsaSquare, JordanBlockMatchesClosedForm)
{
  CMatrix j = CMatrix::Zero(2, 2);
  j(0, 1) = 1.0;
  const auto r = psa_square(j, 0.1);
  EXPECT_NEAR(r.alpha, jordan_alpha(0.1), 1e-12);
  EXPECT_NEAR(r.z.imag(), 0.0, 1e-9);
}

TEST(PsaSquare, LevelCertificateAndRealPathAgree)
{
  oracle::Rng rng(41);
  for (int trial = 0; trial < 8; ++trial)
  {
    const RMatrix a = rng.real_matrix(12, 12);
    const double eps = trial % 2 ? 0.05 : 0.5;
    PsaOptions opts;
    const auto rr = psa_square(a, eps, opts);
    const auto rc = psa_square(CMatrix(a.cast<cplx>()), eps, opts);
    EXPECT_NEAR(rr.alpha, rc.alpha, 1e-9);
    EXPECT_LE(std::abs(level_residual(a.cast<cplx>(), rr.z) - eps), opts.level_tol * (1.0 + eps) * 10);
    EXPECT_EQ(rr.alpha, rr.z.real());
    EXPECT_NEAR(rr.triplet.sigma, eps, 1e-6);
  }
}

TEST(PsaSquare, NoGridPointFurtherRight)
{
  oracle::Rng rng(42);
  for (int trial = 0; trial < 3; ++trial)
  {
    const CMatrix a = rng.complex_matrix(8, 8);
    const double eps = 0.3;
    PsaOptions opts;
    const auto r = psa_square(a, eps, opts);
    const oracle::Level f = oracle::square_level(a);
    const double reach = a.norm() + eps;
    double grid_best = neg_inf;
    for (int i = 0; i < 200; ++i)
    {
      for (int j = 0; j < 200; ++j)
      {
        const cplx z(-reach + 2 * reach * i / 199.0, -reach + 2 * reach * j / 199.0);
        if (z.real() > grid_best && f(z) <= eps)
        {
          grid_best = z.real();
        }
      }
    }
    EXPECT_LE(grid_best, r.alpha + 10 * opts.level_tol);
  }
}

TEST(PsaSquare, WarmStartPointIsUsedOnlyWhenFeasible)
{
  PsaOptions opts;
  opts.z0 = cplx(100.0, 0.0);
  const auto r = psa_square(diag({-1.0, -3.0}), 0.2, opts);
  EXPECT_NEAR(r.alpha, -0.8, 1e-12);
}

// The vertical line through the real-axis crossing touches the level set at y = 0,
// so the midpoint of the outer interval has sigma == eps up to rounding.
TEST(PsaSquare, TangentMidpointDoesNotStopEarly)
{
  SyntheticSpec spec;
  spec.n = 60;
  spec.seed = 1;
  const auto fam = make_synthetic(spec).family();
  const CMatrix a = fam.eval(RVector::Constant(1, 0.01666673)).to_dense();
  const auto complex_path = psa_square(a, 0.1);
  const auto real_path = psa_square(RMatrix(a.real()), 0.1);
  EXPECT_GT(complex_path.alpha, 0.1725);
  EXPECT_NEAR(complex_path.alpha, real_path.alpha, 1e-9);
  EXPECT_NEAR(oracle::square_level(a)(complex_path.z), 0.1, 1e-9);
}

TEST(PsaSquare, InputChecks)
{
  EXPECT_THROW(psa_square(CMatrix(CMatrix::Zero(2, 2)), 0.0), ContractViolation);
  EXPECT_THROW(psa_square(CMatrix(CMatrix::Zero(2, 3)), 0.1), ContractViolation);
  CMatrix bad = CMatrix::Zero(2, 2);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(psa_square(bad, 0.1), ContractViolation);
}

TEST(VerticalSearch, UnitDisk)
{
  const CMatrix zero = CMatrix::Zero(1, 1);
  const auto ys = vertical_search_square(zero, 1.0, 0.0);
  ASSERT_EQ(ys.size(), 2u);
  EXPECT_NEAR(ys[0], -1.0, 1e-12);
  EXPECT_NEAR(ys[1], 1.0, 1e-12);
  EXPECT_TRUE(vertical_search_square(zero, 1.0, 2.0).empty());
}

TEST(VerticalSearch, MatchesGridSignChanges)
{
  oracle::Rng rng(43);
  for (int trial = 0; trial < 3; ++trial)
  {
    const CMatrix a = rng.complex_matrix(10, 10);
    const double eps = 0.5;
    const CVector lambda = lapack::eigenvalues(a);
    const double x = lambda(trial).real() + 0.1;
    const auto ys = vertical_search_square(a, eps, x);
    const oracle::Level f = oracle::square_level(a);
    const double reach = a.norm() + eps;
    std::vector<double> roots;
    double prev_y = -reach;
    double prev = f(cplx(x, prev_y)) - eps;
    for (double y = -reach + 1e-3; y <= reach; y += 1e-3)
    {
      const double cur = f(cplx(x, y)) - eps;
      if ((cur <= 0) != (prev <= 0))
      {
        double lo = prev_y, hi = y;
        for (int it = 0; it < 60; ++it)
        {
          const double mid = 0.5 * (lo + hi);
          ((f(cplx(x, mid)) - eps <= 0) == (prev <= 0) ? lo : hi) = mid;
        }
        roots.push_back(0.5 * (lo + hi));
      }
      prev = cur;
      prev_y = y;
    }
    ASSERT_EQ(ys.size(), roots.size());
    for (std::size_t i = 0; i < ys.size(); ++i)
    {
      EXPECT_NEAR(ys[i], roots[i], 1e-9);
    }
  }
}

TEST(HorizontalSearch, DiskEdge)
{
  const auto x = horizontal_search_square(CMatrix(CMatrix::Zero(1, 1)), 1.0, 0.6);
  ASSERT_TRUE(x.has_value());
  EXPECT_NEAR(*x, 0.8, 1e-12);
  EXPECT_FALSE(horizontal_search_square(CMatrix(CMatrix::Zero(1, 1)), 1.0, 1.5).has_value());
}

TEST(CompressReduced, OneDimensionalSubspace)
{
  const CMatrix a = diag({-1.0, -3.0});
  const CMatrix v = CMatrix::Identity(2, 1);
  const auto p = reduce(a, v);
  oracle::Rng rng(44);
  for (int i = 0; i < 10; ++i)
  {
    const cplx z(rng.normal(), rng.normal());
    EXPECT_NEAR(rect_sigma(p, z), std::abs(-1.0 - z), 1e-13);
  }
}

TEST(CompressReduced, PreservesSigmaAndOrthonormality)
{
  oracle::Rng rng(45);
  const CMatrix a = rng.complex_matrix(30, 30);
  const CMatrix v = rng.orthonormal(30, 4);
  const auto p = reduce(a, v);
  EXPECT_EQ(p.k(), 4);
  EXPECT_EQ(p.rows(), 8);
  for (int i = 0; i < 20; ++i)
  {
    const cplx z(rng.normal(), rng.normal());
    EXPECT_NEAR(rect_sigma(p, z), oracle::smin(a * v - z * v), 1e-10);
  }
  Eigen::JacobiSVD<CMatrix> svd(p.b_tilde);
  EXPECT_LE((svd.singularValues().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(CompressReduced, RejectsNonOrthonormalBasis)
{
  CMatrix v = CMatrix::Ones(3, 2);
  EXPECT_THROW(compress_reduced(v, v), ContractViolation);
}

TEST(PsaRect, OneDimensionalDisk)
{
  const auto p = reduce(diag({-1.0, -3.0}), CMatrix::Identity(2, 1));
  const auto r = psa_rect(p, 0.2);
  EXPECT_FALSE(r.empty);
  EXPECT_NEAR(r.alpha, -0.8, 1e-10);
}

TEST(PsaRect, EmptyLevelSet)
{
  // V spans (e1 + e2)/sqrt(2) for diag(0, 10): sigma_min(AV - zV) >= 5 for every z.
  CMatrix v = CMatrix::Zero(2, 1);
  v(0) = v(1) = 1.0 / std::sqrt(2.0);
  const auto p = reduce(diag({0.0, 10.0}), v);
  const auto r = psa_rect(p, 1.0);
  EXPECT_TRUE(r.empty);
  EXPECT_EQ(r.alpha, neg_inf);
}

TEST(PsaRect, MatchesGridOracle)
{
  oracle::Rng rng(46);
  for (int trial = 0; trial < 4; ++trial)
  {
    const CMatrix a = rng.complex_matrix(30, 30);
    const CMatrix v = rng.orthonormal(30, 3);
    const auto p = reduce(a, v);
    const cplx z0(rng.normal(), rng.normal());
    const double eps = 1.1 * rect_sigma(p, z0);
    const auto r = psa_rect(p, eps);
    ASSERT_FALSE(r.empty);
    const oracle::Level f{p.a_tilde, p.b_tilde};
    const double reach = a.norm() + eps;
    const double ref = oracle::grid_abscissa(f, eps, {-reach, reach, -reach, reach}, 400, {z0});
    EXPECT_NEAR(r.alpha, ref, 1e-4);
    EXPECT_LE(std::abs(rect_sigma(p, r.z) - eps), 1e-6 * (1.0 + eps));
  }
}

TEST(PsaRect, BasisInvariance)
{
  oracle::Rng rng(47);
  const CMatrix a = rng.complex_matrix(20, 20);
  const CMatrix v1 = rng.orthonormal(20, 4);
  const CMatrix u = rng.orthonormal(4, 4);
  const auto p1 = reduce(a, v1);
  const double eps = 1.2 * rect_sigma(p1, cplx(0.0, 0.0));
  const auto r1 = psa_rect(p1, eps);
  const auto r2 = psa_rect(reduce(a, v1 * u), eps);
  ASSERT_FALSE(r1.empty);
  EXPECT_NEAR(r1.alpha, r2.alpha, 1e-10);
}

TEST(Monotonicity, NestedSubspaces)
{
  oracle::Rng rng(48);
  for (int trial = 0; trial < 5; ++trial)
  {
    const CMatrix a = rng.complex_matrix(15, 15);
    const CMatrix w = rng.orthonormal(15, 5);
    const CMatrix v = w.leftCols(3);
    const auto pv = reduce(a, v);
    const auto pw = reduce(a, w);
    for (int i = 0; i < 10; ++i)
    {
      const cplx z(rng.normal(), rng.normal());
      const double s_full = level_residual(a, z);
      const double s_w = rect_sigma(pw, z);
      const double s_v = rect_sigma(pv, z);
      EXPECT_LE(s_full, s_w + 1e-12);
      EXPECT_LE(s_w, s_v + 1e-12);
    }
    const double eps = 1.5;
    const double av = psa_rect(pv, eps).alpha;
    const double aw = psa_rect(pw, eps).alpha;
    const double af = psa_square(a, eps).alpha;
    EXPECT_LE(av, aw + 1e-8);
    EXPECT_LE(aw, af + 1e-8);
  }
}

TEST(Interpolation, RightSingularVectorRecoversAbscissa)
{
  oracle::Rng rng(49);
  for (int trial = 0; trial < 5; ++trial)
  {
    const CMatrix a = rng.complex_matrix(12, 12);
    const double eps = 0.4;
    const auto full = psa_square(a, eps);
    CMatrix v = rng.orthonormal(12, 2);
    v.conservativeResize(Eigen::NoChange, 3);
    CVector w = full.triplet.v;
    for (int pass = 0; pass < 2; ++pass)
    {
      w -= v.leftCols(2) * (v.leftCols(2).adjoint() * w);
    }
    v.col(2) = w.normalized();
    EXPECT_NEAR(psa_rect(reduce(a, v), eps).alpha, full.alpha, 1e-8);
  }
}

TEST(PsaLarge, DiagonalSparse)
{
  SparseReal s(1000, 1000);
  for (int i = 0; i < 1000; ++i)
  {
    s.insert(i, i) = -(i + 1.0);
  }
  const auto a = sparse_handle(s);
  const auto r = psa_large(a, 0.3);
  EXPECT_NEAR(r.alpha, -0.7, 1e-7);
  EXPECT_EQ(r.method, "large");
}

TEST(PsaLarge, MatchesDenseAndIsMonotone)
{
  oracle::Rng rng(50);
  const auto a = sparse_handle(random_sparse(rng, 400));
  const double eps = 0.1;
  const auto dense = psa_square(a, eps);
  const auto large = psa_large(a, eps);
  EXPECT_NEAR(large.alpha, dense.alpha, 1e-6);
  ASSERT_FALSE(large.reduced_alphas.empty());
  for (std::size_t i = 1; i < large.reduced_alphas.size(); ++i)
  {
    EXPECT_GE(large.reduced_alphas[i], large.reduced_alphas[i - 1] - 1e-9);
  }
  EXPECT_LE(large.reduced_alphas.back(), large.alpha + 1e-9);
}

TEST(PsaAuto, SizeSwitch)
{
  EXPECT_EQ(PsaOptions{}.size_switch, 1000);
  oracle::Rng rng(51);
  const auto a = sparse_handle(random_sparse(rng, 40));
  PsaOptions opts;
  opts.size_switch = 40;
  EXPECT_EQ(psa_auto(a, 0.1, opts).method, "square");
  opts.size_switch = 39;
  EXPECT_EQ(psa_auto(a, 0.1, opts).method, "large");
}

TEST(PsaAuto, ForcedLargePathAgreesWithDense)
{
  oracle::Rng rng(52);
  const auto a = sparse_handle(random_sparse(rng, 400));
  PsaOptions opts;
  opts.size_switch = 100;
  const auto large = psa_auto(a, 0.2, opts);
  EXPECT_EQ(large.method, "large");
  EXPECT_NEAR(large.alpha, psa_square(a, 0.2).alpha, 1e-6);
}

TEST(Boundary, UnitCircle)
{
  const Window w{-2.0, 2.0, -2.0, 2.0};
  const int res = 101;
  const auto lines = boundary_polyline(CMatrix(CMatrix::Zero(1, 1)), 1.0, w, res);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_TRUE(lines[0].closed);
  const double step = 4.0 / (res - 1);
  for (cplx p : lines[0].points)
  {
    EXPECT_LE(std::abs(std::abs(p) - 1.0), 2 * step);
  }
}

TEST(Boundary, EmptyWhenEpsBelowWindowMinimum)
{
  const Window w{-2.0, 2.0, -2.0, 2.0};
  EXPECT_TRUE(boundary_polyline(diag({10.0}), 1.0, w, 32).empty());
}

TEST(Boundary, VerticesOnLevelForNormalMatrix)
{
  const CMatrix a = diag({-1.0, cplx(1.0, 0.5)});
  const Window w{-2.0, 2.0, -1.5, 2.0};
  const int res = 161;
  const auto lines = boundary_polyline(a, 0.3, w, res);
  ASSERT_EQ(lines.size(), 2u);
  const double step = 4.0 / (res - 1);
  for (const auto& pl : lines)
  {
    for (cplx p : pl.points)
    {
      EXPECT_NEAR(level_residual(a, p), 0.3, step);
    }
  }
  EXPECT_THROW(boundary_polyline(a, 0.3, w, 8), ContractViolation);
}
