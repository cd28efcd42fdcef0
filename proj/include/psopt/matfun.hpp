// SPDX-License-Identifier: Apache-2.0

#ifndef PSOPT_MATFUN_HPP
#define PSOPT_MATFUN_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "psopt/common.hpp"

namespace psopt
{

namespace detail
{
// Real matrix times complex vector, split into real and imaginary halves so that
// real storage never gets promoted.
template <typename RealMat>
CVector real_times(const RealMat& a, const CVector& x)
{
  RVector re = a * x.real();
  RVector im = a * x.imag();
  CVector y(re.size());
  y.real() = re;
  y.imag() = im;
  return y;
}

template <typename RealMat>
CMatrix real_times(const RealMat& a, const CMatrix& x)
{
  RMatrix re = a * x.real();
  RMatrix im = a * x.imag();
  CMatrix y(re.rows(), re.cols());
  y.real() = re;
  y.imag() = im;
  return y;
}
} // namespace detail

/// Box [lower, upper] in R^d.
struct ParameterBox
{
  RVector lower;
  RVector upper;

  ParameterBox() = default;
  ParameterBox(RVector lo, RVector up) : lower(std::move(lo)), upper(std::move(up)) { validate(); }

  static ParameterBox uniform(Index d, double lo, double up)
  {
    return ParameterBox(RVector::Constant(d, lo), RVector::Constant(d, up));
  }

  Index dim() const { return lower.size(); }

  void validate() const
  {
    require(lower.size() == upper.size() && lower.size() > 0, "ParameterBox: empty or mismatched bounds");
    require(lower.allFinite() && upper.allFinite(), "ParameterBox: bounds must be finite");
    require((lower.array() <= upper.array()).all(), "ParameterBox: lower bound exceeds upper bound");
  }

  bool contains(const RVector& x, double slack = 0.0) const
  {
    return x.size() == dim() && (x.array() >= lower.array() - slack).all() &&
           (x.array() <= upper.array() + slack).all();
  }

  RVector project(const RVector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

/// A scalar coefficient function f: R^d -> R together with its gradient.
struct ScalarFunction
{
  std::function<double(const RVector&)> value;
  std::function<RVector(const RVector&)> gradient;
  // Optional; only consumed by diagnostics.
  std::function<RMatrix(const RVector&)> hessian;
  std::string description = "callback";

  static ScalarFunction constant(double c, Index d)
  {
    ScalarFunction f;
    f.value = [c](const RVector&) { return c; };
    f.gradient = [d](const RVector&) { return RVector::Zero(d); };
    f.hessian = [d](const RVector&) { return RMatrix::Zero(d, d); };
    f.description = "constant";
    return f;
  }

  static ScalarFunction coordinate(Index j, Index d)
  {
    require(j >= 0 && j < d, "ScalarFunction::coordinate: index out of range");
    ScalarFunction f;
    f.value = [j](const RVector& x) { return x(j); };
    f.gradient = [j, d](const RVector&) {
      RVector g = RVector::Zero(d);
      g(j) = 1.0;
      return g;
    };
    f.hessian = [d](const RVector&) { return RMatrix::Zero(d, d); };
    f.description = "coordinate";
    return f;
  }

  struct Monomial
  {
    double coeff = 0.0;
    std::vector<int> powers; // one nonnegative exponent per parameter
  };

  static ScalarFunction polynomial(std::vector<Monomial> terms, Index d)
  {
    for (const auto& m : terms)
    {
      require(static_cast<Index>(m.powers.size()) == d, "ScalarFunction::polynomial: exponent count must equal d");
      for (int p : m.powers)
      {
        require(p >= 0, "ScalarFunction::polynomial: negative exponent");
      }
    }
    auto eval_mono = [](const Monomial& m, const RVector& x, Index skip, int drop) {
      double v = m.coeff;
      for (Index k = 0; k < x.size(); ++k)
      {
        int p = m.powers[static_cast<std::size_t>(k)];
        if (k == skip)
        {
          if (p < drop)
          {
            return 0.0;
          }
          double factor = 1.0;
          for (int q = 0; q < drop; ++q)
          {
            factor *= p - q;
          }
          v *= factor;
          p -= drop;
        }
        v *= std::pow(x(k), p);
      }
      return v;
    };
    ScalarFunction f;
    f.value = [terms, eval_mono](const RVector& x) {
      double s = 0.0;
      for (const auto& m : terms)
      {
        s += eval_mono(m, x, -1, 0);
      }
      return s;
    };
    f.gradient = [terms, eval_mono, d](const RVector& x) {
      RVector g = RVector::Zero(d);
      for (Index j = 0; j < d; ++j)
      {
        for (const auto& m : terms)
        {
          g(j) += eval_mono(m, x, j, 1);
        }
      }
      return g;
    };
    f.hessian = [terms, d](const RVector& x) {
      RMatrix h = RMatrix::Zero(d, d);
      for (const auto& m : terms)
      {
        for (Index a = 0; a < d; ++a)
        {
          for (Index b = 0; b < d; ++b)
          {
            std::vector<int> p = m.powers;
            double v = m.coeff;
            v *= p[a]--;
            v *= p[b]--;
            if (v == 0.0 || p[a] < 0 || p[b] < 0)
            {
              continue;
            }
            for (Index k = 0; k < d; ++k)
            {
              v *= std::pow(x(k), p[k]);
            }
            h(a, b) += v;
          }
        }
      }
      return h;
    };
    f.description = "polynomial";
    return f;
  }
};

/// Factored rank-one coefficient b c^T.
struct RankOne
{
  RVector b;
  RVector c;
};

using Coefficient = std::variant<RMatrix, SparseReal, CMatrix, RankOne>;

struct Term
{
  Coefficient matrix;
  ScalarFunction f;
};

/// A value of the family at a fixed parameter: sparse + dense + real low-rank part.
///
/// The low-rank part is left * right^T with the scalar weights already folded
/// into the columns of left. Any of the three parts may be absent.
class StructuredMatrix
{
public:
  StructuredMatrix() = default;
  explicit StructuredMatrix(Index n) : n_(n), left_(n, 0), right_(n, 0) {}

  Index rows() const { return n_; }
  Index cols() const { return n_; }

  bool has_sparse() const { return sparse_.has_value(); }
  bool has_real_dense() const { return real_dense_.has_value(); }
  bool has_complex_dense() const { return complex_dense_.has_value(); }
  bool has_dense() const { return has_real_dense() || has_complex_dense(); }
  Index low_rank() const { return left_.cols(); }
  bool is_real() const { return !has_complex_dense(); }

  const SparseReal& sparse() const { return *sparse_; }
  const RMatrix& real_dense() const { return *real_dense_; }
  const CMatrix& complex_dense() const { return *complex_dense_; }
  const RMatrix& left() const { return left_; }
  const RMatrix& right() const { return right_; }

  void add_sparse(const SparseReal& s, double w)
  {
    if (sparse_)
    {
      *sparse_ += w * s;
    }
    else
    {
      sparse_ = SparseReal(w * s);
    }
  }

  void add_real_dense(const RMatrix& a, double w)
  {
    if (real_dense_)
    {
      *real_dense_ += w * a;
    }
    else
    {
      real_dense_ = RMatrix(w * a);
    }
  }

  void add_complex_dense(const CMatrix& a, double w)
  {
    if (complex_dense_)
    {
      *complex_dense_ += w * a;
    }
    else
    {
      complex_dense_ = CMatrix(w * a);
    }
  }

  void add_rank_one(const RVector& b, const RVector& c, double w)
  {
    const Index r = left_.cols();
    left_.conservativeResize(n_, r + 1);
    right_.conservativeResize(n_, r + 1);
    left_.col(r) = w * b;
    right_.col(r) = c;
  }

  /// Folds the low-rank factors into a dense real part.
  void densify_low_rank()
  {
    if (left_.cols() == 0)
    {
      return;
    }
    RMatrix lr = left_ * right_.transpose();
    add_real_dense(lr, 1.0);
    left_.resize(n_, 0);
    right_.resize(n_, 0);
  }

  CVector apply(const CVector& x) const
  {
    CVector y = CVector::Zero(n_);
    if (sparse_)
    {
      y += detail::real_times(*sparse_, x);
    }
    if (real_dense_)
    {
      y += detail::real_times(*real_dense_, x);
    }
    if (complex_dense_)
    {
      y += *complex_dense_ * x;
    }
    if (left_.cols() > 0)
    {
      CVector t = detail::real_times(RMatrix(right_.transpose()), x);
      y += detail::real_times(left_, t);
    }
    return y;
  }

  CVector apply_adjoint(const CVector& x) const
  {
    CVector y = CVector::Zero(n_);
    if (sparse_)
    {
      SparseReal st = sparse_->transpose();
      y += detail::real_times(st, x);
    }
    if (real_dense_)
    {
      y += detail::real_times(RMatrix(real_dense_->transpose()), x);
    }
    if (complex_dense_)
    {
      y += complex_dense_->adjoint() * x;
    }
    if (left_.cols() > 0)
    {
      CVector t = detail::real_times(RMatrix(left_.transpose()), x);
      y += detail::real_times(right_, t);
    }
    return y;
  }

  /// Product with a block of vectors (n x k).
  CMatrix multiply(const CMatrix& v) const
  {
    CMatrix y = CMatrix::Zero(n_, v.cols());
    if (sparse_)
    {
      y += detail::real_times(*sparse_, v);
    }
    if (real_dense_)
    {
      y += detail::real_times(*real_dense_, v);
    }
    if (complex_dense_)
    {
      y += *complex_dense_ * v;
    }
    if (left_.cols() > 0)
    {
      CMatrix t = detail::real_times(RMatrix(right_.transpose()), v);
      y += detail::real_times(left_, t);
    }
    return y;
  }

  RMatrix to_dense_real() const
  {
    require(is_real(), "StructuredMatrix::to_dense_real: matrix has a complex part");
    RMatrix a = RMatrix::Zero(n_, n_);
    if (sparse_)
    {
      a += RMatrix(*sparse_);
    }
    if (real_dense_)
    {
      a += *real_dense_;
    }
    if (left_.cols() > 0)
    {
      a += left_ * right_.transpose();
    }
    return a;
  }

  CMatrix to_dense() const
  {
    CMatrix a = CMatrix::Zero(n_, n_);
    if (sparse_)
    {
      a.real() += RMatrix(*sparse_);
    }
    if (real_dense_)
    {
      a.real() += *real_dense_;
    }
    if (complex_dense_)
    {
      a += *complex_dense_;
    }
    if (left_.cols() > 0)
    {
      a.real() += left_ * right_.transpose();
    }
    return a;
  }

  /// Cheap upper bound on the 2-norm (Frobenius norms of the parts).
  double norm_estimate() const
  {
    double s = 0.0;
    if (sparse_)
    {
      s += sparse_->norm();
    }
    if (real_dense_)
    {
      s += real_dense_->norm();
    }
    if (complex_dense_)
    {
      s += complex_dense_->norm();
    }
    for (Index r = 0; r < left_.cols(); ++r)
    {
      s += left_.col(r).norm() * right_.col(r).norm();
    }
    return s;
  }

private:
  Index n_ = 0;
  std::optional<SparseReal> sparse_;
  std::optional<RMatrix> real_dense_;
  std::optional<CMatrix> complex_dense_;
  RMatrix left_;
  RMatrix right_;
};

/// A(x) = sum_i f_i(x) A_i.
class AffineMatrixFamily
{
public:
  AffineMatrixFamily(Index n, Index d) : n_(n), d_(d)
  {
    require(n > 0 && d > 0, "AffineMatrixFamily: n and d must be positive");
  }

  Index n() const { return n_; }
  Index d() const { return d_; }
  Index kappa() const { return static_cast<Index>(terms_.size()); }
  const std::vector<Term>& terms() const { return terms_; }

  /// Rank-one terms are folded into a dense value only when n is at most this size
  /// and the value already carries a dense part.
  Index densify_limit = 400;

  AffineMatrixFamily& add_term(Coefficient a, ScalarFunction f)
  {
    std::visit(
        [this](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, RankOne>)
          {
            require(m.b.size() == n_ && m.c.size() == n_, "AffineMatrixFamily: rank-one factors must have length n");
            require(m.b.allFinite() && m.c.allFinite(), "AffineMatrixFamily: non-finite rank-one factor");
          }
          else
          {
            require(m.rows() == n_ && m.cols() == n_, "AffineMatrixFamily: coefficient matrix must be n x n");
          }
        },
        a);
    require(static_cast<bool>(f.value) && static_cast<bool>(f.gradient),
            "AffineMatrixFamily: scalar function needs value and gradient callbacks");
    terms_.push_back(Term{std::move(a), std::move(f)});
    return *this;
  }

  bool is_real() const
  {
    for (const auto& t : terms_)
    {
      if (std::holds_alternative<CMatrix>(t.matrix))
      {
        return false;
      }
    }
    return true;
  }

  /// Weighted combination sum_i w_i A_i.
  StructuredMatrix combine(const RVector& w) const
  {
    require(w.size() == kappa(), "AffineMatrixFamily::combine: weight count must equal kappa");
    StructuredMatrix out(n_);
    for (std::size_t i = 0; i < terms_.size(); ++i)
    {
      const double wi = w(static_cast<Index>(i));
      std::visit(
          [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, RMatrix>)
            {
              out.add_real_dense(m, wi);
            }
            else if constexpr (std::is_same_v<T, SparseReal>)
            {
              out.add_sparse(m, wi);
            }
            else if constexpr (std::is_same_v<T, CMatrix>)
            {
              out.add_complex_dense(m, wi);
            }
            else
            {
              if (wi != 0.0)
              {
                out.add_rank_one(m.b, m.c, wi);
              }
            }
          },
          terms_[i].matrix);
    }
    if (out.has_dense() && n_ <= densify_limit)
    {
      out.densify_low_rank();
    }
    return out;
  }

  RVector values(const RVector& x) const
  {
    check_point(x);
    RVector w(kappa());
    for (Index i = 0; i < kappa(); ++i)
    {
      w(i) = terms_[static_cast<std::size_t>(i)].f.value(x);
    }
    return w;
  }

  /// kappa x d matrix of scalar-function gradients.
  RMatrix gradients(const RVector& x) const
  {
    check_point(x);
    RMatrix g(kappa(), d_);
    for (Index i = 0; i < kappa(); ++i)
    {
      RVector gi = terms_[static_cast<std::size_t>(i)].f.gradient(x);
      require(gi.size() == d_, "AffineMatrixFamily: gradient callback returned wrong length");
      g.row(i) = gi.transpose();
    }
    return g;
  }

  StructuredMatrix eval(const RVector& x) const { return combine(values(x)); }

  /// dA/dx_j at x (j is zero-based).
  StructuredMatrix eval_partial(const RVector& x, Index j) const
  {
    require(j >= 0 && j < d_, "AffineMatrixFamily::eval_partial: parameter index out of range");
    return combine(gradients(x).col(j));
  }

private:
  void check_point(const RVector& x) const
  {
    require(x.size() == d_, "AffineMatrixFamily: parameter vector has length " + std::to_string(x.size()) +
                                ", expected " + std::to_string(d_));
    require(x.allFinite(), "AffineMatrixFamily: parameter vector is not finite");
  }

  Index n_;
  Index d_;
  std::vector<Term> terms_;
};

/// Static output feedback data: A + B K C with K in R^{m x p}.
struct SofProblem
{
  std::variant<RMatrix, SparseReal> a;
  RMatrix b; // n x m
  RMatrix c; // p x n
  ParameterBox bounds; // over the m*p entries of K, row-major

  Index n() const
  {
    return std::visit([](const auto& m) { return static_cast<Index>(m.rows()); }, a);
  }
};

/// Parameter index of K(r, q) in row-major order.
inline Index sof_parameter_index(Index r, Index q, Index p) { return r * p + q; }

inline AffineMatrixFamily sof_to_family(const SofProblem& problem)
{
  const Index n = problem.n();
  std::visit([&](const auto& m) { require(m.cols() == n, "sof_to_family: A must be square"); }, problem.a);
  require(problem.b.rows() == n, "sof_to_family: B must have n rows");
  require(problem.c.cols() == n, "sof_to_family: C must have n columns");
  const Index m = problem.b.cols();
  const Index p = problem.c.rows();
  require(m > 0 && p > 0, "sof_to_family: B and C must be nonempty");
  require(problem.bounds.dim() == m * p, "sof_to_family: bounds must cover all m*p entries of K");

  AffineMatrixFamily family(n, m * p);
  std::visit([&](const auto& a) { family.add_term(a, ScalarFunction::constant(1.0, m * p)); }, problem.a);
  for (Index r = 0; r < m; ++r)
  {
    for (Index q = 0; q < p; ++q)
    {
      const Index j = sof_parameter_index(r, q, p);
      family.add_term(RankOne{problem.b.col(r), problem.c.row(q).transpose()}, ScalarFunction::coordinate(j, m * p));
    }
  }
  return family;
}

} // namespace psopt

#endif // PSOPT_MATFUN_HPP
