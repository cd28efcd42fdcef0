// SPDX-License-Identifier: Apache-2.0

// Reproducible test problems A(x) = A + x b c^T with a sparse random A.

#ifndef PSOPT_SYNTHETIC_HPP
#define PSOPT_SYNTHETIC_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "psopt/common.hpp"
#include "psopt/detail/lapack.hpp"
#include "psopt/krylov.hpp"
#include "psopt/matfun.hpp"
#include "psopt/psa.hpp"

namespace psopt
{

/// Platform-independent stream: uniform and normal variates built from the raw
/// 64-bit output of mt19937_64 (the standard distributions are not portable).
class SeededStream
{
public:
  explicit SeededStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal()
  {
    if (spare_)
    {
      spare_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0)
    {
      u1 = uniform();
    }
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(2.0 * std::numbers::pi * u2);
    spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  Index index(Index n) { return static_cast<Index>(engine_() % static_cast<std::uint64_t>(n)); }

  RVector normal_vector(Index n)
  {
    RVector v(n);
    for (Index i = 0; i < n; ++i)
    {
      v(i) = normal();
    }
    return v;
  }

  RMatrix normal_matrix(Index r, Index c)
  {
    RMatrix m(r, c);
    for (Index j = 0; j < c; ++j)
    {
      for (Index i = 0; i < r; ++i)
      {
        m(i, j) = normal();
      }
    }
    return m;
  }

  CMatrix complex_normal_matrix(Index r, Index c)
  {
    CMatrix m(r, c);
    for (Index j = 0; j < c; ++j)
    {
      for (Index i = 0; i < r; ++i)
      {
        const double re = normal();
        m(i, j) = cplx(re, normal());
      }
    }
    return m;
  }

private:
  std::mt19937_64 engine_;
  bool spare_ = false;
  double cached_ = 0.0;
};

struct SyntheticSpec
{
  Index n = 200;
  Index nnz_per_row = 5;
  double target_abscissa = -0.1;
  double lower = -0.3;
  double upper = 0.2;
  double eps = 0.1;
  // Weight of the rank-one term: A(x) = A + coupling * x * b c^T with unit b, c.
  double coupling = 20.0;
  std::uint64_t seed = 1;

  void validate() const
  {
    require(n >= 2, "SyntheticSpec: n must be at least 2");
    require(nnz_per_row >= 1, "SyntheticSpec: nnz_per_row must be positive");
    require(std::isfinite(lower) && std::isfinite(upper) && lower < upper, "SyntheticSpec: need lower < upper");
    require(std::isfinite(eps) && eps > 0.0, "SyntheticSpec: eps must be positive");
    require(std::isfinite(target_abscissa), "SyntheticSpec: target abscissa must be finite");
    require(std::isfinite(coupling) && coupling != 0.0, "SyntheticSpec: coupling must be finite and nonzero");
  }
};

struct SyntheticProblem
{
  SyntheticSpec spec;
  SparseReal a;
  RVector b;
  RVector c;
  double abscissa = 0.0; // spectral abscissa of a after the shift

  AffineMatrixFamily family() const
  {
    AffineMatrixFamily f(spec.n, 1);
    f.add_term(a, ScalarFunction::constant(1.0, 1));
    f.add_term(RankOne{b, c}, ScalarFunction::polynomial({{spec.coupling, {1}}}, 1));
    return f;
  }

  ParameterBox box() const { return ParameterBox::uniform(1, spec.lower, spec.upper); }
};

inline double spectral_abscissa(const SparseReal& a)
{
  const Index n = a.rows();
  if (n <= 600)
  {
    const CVector w = lapack::eigenvalues(RMatrix(a));
    return w.real().maxCoeff();
  }
  KrylovOptions ko;
  ko.nev = 1;
  const auto rs = rightmost_schur([&](const CVector& x) { return CVector(a.cast<cplx>() * x); }, n, ko);
  return rs.values(0).real();
}

/// Off-diagonal entries N(0, 1/nnz_per_row) at random positions, unit diagonal scaled
/// the same way, then a diagonal shift placing the spectral abscissa at the target.
inline SyntheticProblem make_synthetic(const SyntheticSpec& spec)
{
  spec.validate();
  SeededStream rng(spec.seed);
  const Index n = spec.n;
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.nnz_per_row));
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(n * (spec.nnz_per_row + 1)));
  for (Index i = 0; i < n; ++i)
  {
    entries.emplace_back(static_cast<int>(i), static_cast<int>(i), scale * rng.normal());
    for (Index k = 0; k < spec.nnz_per_row; ++k)
    {
      entries.emplace_back(static_cast<int>(i), static_cast<int>(rng.index(n)), scale * rng.normal());
    }
  }
  SyntheticProblem p;
  p.spec = spec;
  p.a.resize(n, n);
  p.a.setFromTriplets(entries.begin(), entries.end());
  p.b = rng.normal_vector(n).normalized();
  p.c = rng.normal_vector(n).normalized();

  const double alpha0 = spectral_abscissa(p.a);
  SparseReal shift(n, n);
  shift.setIdentity();
  p.a = p.a - (alpha0 - spec.target_abscissa) * shift;
  p.a.makeCompressed();
  p.abscissa = spectral_abscissa(p.a);
  return p;
}

struct ReferenceMinimum
{
  double x = 0.0;
  double alpha = 0.0;
  int evaluations = 0;
};

/// Direct minimization of the full abscissa over the interval: the best of `points`
/// equispaced samples, then golden-section search on the two neighbouring cells.
/// Intended for n <= 400 (dense solves); used as a recorded regression value.
inline ReferenceMinimum reference_minimum(const SyntheticProblem& p, int points = 200)
{
  require(points >= 3, "reference_minimum: need at least 3 grid points");
  const AffineMatrixFamily fam = p.family();
  ReferenceMinimum out;
  auto alpha = [&](double x) {
    ++out.evaluations;
    return psa_square(fam.eval(RVector::Constant(1, x)), p.spec.eps).alpha;
  };
  const double lo = p.spec.lower, hi = p.spec.upper;
  const double h = (hi - lo) / (points - 1);
  int ib = 0;
  out.alpha = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i)
  {
    const double v = alpha(lo + i * h);
    if (v < out.alpha)
    {
      out.alpha = v;
      ib = i;
    }
  }
  out.x = lo + ib * h;
  double a = std::max(lo, out.x - h), b = std::min(hi, out.x + h);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = alpha(c), fd = alpha(d);
  for (int it = 0; it < 60 && b - a > 1e-9; ++it)
  {
    if (fc <= fd)
    {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = alpha(c);
    }
    else
    {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = alpha(d);
    }
    if (fc < out.alpha)
    {
      out.alpha = fc;
      out.x = c;
    }
    if (fd < out.alpha)
    {
      out.alpha = fd;
      out.x = d;
    }
  }
  return out;
}

} // namespace psopt

#endif // PSOPT_SYNTHETIC_HPP
