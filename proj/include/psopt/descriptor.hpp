// SPDX-License-Identifier: Apache-2.0
//
// JSON problem descriptors: SOF triples, generic affine families and synthetic
// instances. Scalar functions come from a fixed vocabulary so descriptors stay data.

#ifndef PSOPT_DESCRIPTOR_HPP
#define PSOPT_DESCRIPTOR_HPP

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "psopt/common.hpp"
#include "psopt/matfun.hpp"
#include "psopt/mmio.hpp"
#include "psopt/synthetic.hpp"

namespace psopt::desc
{

using Json = nlohmann::ordered_json;

struct Problem
{
  std::string name;
  std::string type; // "sof", "affine" or "synthetic"
  std::shared_ptr<AffineMatrixFamily> family;
  ParameterBox box;
  std::optional<double> eps;
  std::optional<SyntheticProblem> synthetic;
};

namespace detail
{

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where)
{
  require(j.is_object(), where + ": expected a JSON object");
  for (const auto& [key, _] : j.items())
  {
    require(allowed.count(key) > 0, where + ": unknown key '" + key + "'");
  }
}

inline const Json& field(const Json& j, const std::string& key, const std::string& where)
{
  require(j.contains(key), where + ": missing key '" + key + "'");
  return j.at(key);
}

inline double number(const Json& j, const std::string& where)
{
  require(j.is_number(), where + ": expected a number");
  return j.get<double>();
}

inline Index integer(const Json& j, const std::string& where)
{
  require(j.is_number_integer(), where + ": expected an integer");
  return j.get<Index>();
}

inline RVector vector(const Json& j, const std::string& where)
{
  require(j.is_array(), where + ": expected an array of numbers");
  RVector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
  {
    v(static_cast<Index>(i)) = number(j[i], where);
  }
  return v;
}

/// A matrix is a Matrix Market path (relative to the descriptor) or an array of rows.
inline SparseReal matrix(const Json& j, const std::filesystem::path& base, const std::string& where)
{
  if (j.is_string())
  {
    std::filesystem::path p(j.get<std::string>());
    if (p.is_relative())
    {
      p = base / p;
    }
    return read_matrix_market(p.string()).sparse;
  }
  require(j.is_array() && !j.empty(), where + ": expected a file name or a nonempty array of rows");
  const auto rows = static_cast<Index>(j.size());
  require(j[0].is_array(), where + ": expected an array of rows");
  const auto cols = static_cast<Index>(j[0].size());
  RMatrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
  {
    const RVector row = vector(j[static_cast<std::size_t>(r)], where);
    require(row.size() == cols, where + ": ragged rows");
    m.row(r) = row.transpose();
  }
  return m.sparseView();
}

inline RVector bound(const Json& j, Index d, const std::string& where)
{
  if (j.is_number())
  {
    return RVector::Constant(d, j.get<double>());
  }
  const RVector v = vector(j, where);
  require(v.size() == d, where + ": expected " + std::to_string(d) + " entries");
  return v;
}

inline ScalarFunction function(const Json& j, Index d, const std::string& where)
{
  const std::string kind = field(j, "kind", where).get<std::string>();
  if (kind == "constant")
  {
    check_keys(j, {"kind", "value"}, where);
    return ScalarFunction::constant(j.contains("value") ? number(j.at("value"), where) : 1.0, d);
  }
  if (kind == "coordinate")
  {
    check_keys(j, {"kind", "index"}, where);
    const Index idx = integer(field(j, "index", where), where);
    require(idx >= 0 && idx < d, where + ": coordinate index out of range");
    return ScalarFunction::coordinate(idx, d);
  }
  if (kind == "polynomial")
  {
    check_keys(j, {"kind", "monomials"}, where);
    std::vector<ScalarFunction::Monomial> terms;
    for (const auto& m : field(j, "monomials", where))
    {
      check_keys(m, {"coeff", "powers"}, where + " monomial");
      ScalarFunction::Monomial t;
      t.coeff = number(field(m, "coeff", where), where);
      for (const auto& p : field(m, "powers", where))
      {
        require(p.is_number_integer() && p.get<int>() >= 0, where + ": powers must be nonnegative integers");
        t.powers.push_back(p.get<int>());
      }
      terms.push_back(std::move(t));
    }
    return ScalarFunction::polynomial(std::move(terms), d);
  }
  throw ContractViolation(where + ": unknown function kind '" + kind + "'");
}

inline std::optional<double> optional_eps(const Json& j, const std::string& where)
{
  if (!j.contains("eps"))
  {
    return std::nullopt;
  }
  const double e = number(j.at("eps"), where);
  require(std::isfinite(e) && e > 0.0, where + ": eps must be positive");
  return e;
}

inline Problem load_sof(const Json& j, const std::filesystem::path& base)
{
  const std::string w = "sof descriptor";
  check_keys(j, {"type", "name", "a", "b", "c", "lower", "upper", "eps"}, w);
  SofProblem p;
  p.a = matrix(field(j, "a", w), base, w + " a");
  p.b = RMatrix(matrix(field(j, "b", w), base, w + " b"));
  p.c = RMatrix(matrix(field(j, "c", w), base, w + " c"));
  const Index d = p.b.cols() * p.c.rows();
  require(d > 0, w + ": B and C must be nonempty");
  p.bounds = ParameterBox(bound(field(j, "lower", w), d, w + " lower"), bound(field(j, "upper", w), d, w + " upper"));
  Problem out;
  out.type = "sof";
  out.family = std::make_shared<AffineMatrixFamily>(sof_to_family(p));
  out.box = p.bounds;
  out.eps = optional_eps(j, w);
  return out;
}

inline Problem load_affine(const Json& j, const std::filesystem::path& base)
{
  const std::string w = "affine descriptor";
  check_keys(j, {"type", "name", "n", "d", "terms", "lower", "upper", "eps"}, w);
  const Index n = integer(field(j, "n", w), w + " n");
  const Index d = integer(field(j, "d", w), w + " d");
  require(n > 0 && d > 0, w + ": n and d must be positive");
  auto fam = std::make_shared<AffineMatrixFamily>(n, d);
  const Json& terms = field(j, "terms", w);
  require(terms.is_array() && !terms.empty(), w + ": terms must be a nonempty array");
  for (std::size_t i = 0; i < terms.size(); ++i)
  {
    const std::string tw = w + " term " + std::to_string(i);
    const Json& t = terms[i];
    check_keys(t, {"matrix", "rank_one", "function"}, tw);
    require(t.contains("matrix") != t.contains("rank_one"), tw + ": give exactly one of 'matrix' and 'rank_one'");
    const ScalarFunction f = function(field(t, "function", tw), d, tw + " function");
    if (t.contains("matrix"))
    {
      SparseReal m = matrix(t.at("matrix"), base, tw);
      require(m.rows() == n && m.cols() == n, tw + ": matrix must be n x n");
      fam->add_term(std::move(m), f);
    }
    else
    {
      const Json& r = t.at("rank_one");
      check_keys(r, {"b", "c"}, tw + " rank_one");
      fam->add_term(RankOne{vector(field(r, "b", tw), tw + " b"), vector(field(r, "c", tw), tw + " c")}, f);
    }
  }
  Problem out;
  out.type = "affine";
  out.family = fam;
  out.box = ParameterBox(bound(field(j, "lower", w), d, w + " lower"), bound(field(j, "upper", w), d, w + " upper"));
  out.eps = optional_eps(j, w);
  return out;
}

inline Problem load_synthetic(const Json& j)
{
  const std::string w = "synthetic descriptor";
  check_keys(j, {"type", "name", "n", "nnz_per_row", "target_abscissa", "lower", "upper", "eps", "coupling", "seed"}, w);
  SyntheticSpec s;
  if (j.contains("n"))
  {
    s.n = integer(j.at("n"), w + " n");
  }
  if (j.contains("nnz_per_row"))
  {
    s.nnz_per_row = integer(j.at("nnz_per_row"), w + " nnz_per_row");
  }
  if (j.contains("target_abscissa"))
  {
    s.target_abscissa = number(j.at("target_abscissa"), w);
  }
  if (j.contains("lower"))
  {
    s.lower = number(j.at("lower"), w);
  }
  if (j.contains("upper"))
  {
    s.upper = number(j.at("upper"), w);
  }
  if (j.contains("eps"))
  {
    s.eps = number(j.at("eps"), w);
  }
  if (j.contains("coupling"))
  {
    s.coupling = number(j.at("coupling"), w);
  }
  if (j.contains("seed"))
  {
    require(j.at("seed").is_number_unsigned(), w + ": seed must be a nonnegative integer");
    s.seed = j.at("seed").get<std::uint64_t>();
  }
  s.validate();
  Problem out;
  out.type = "synthetic";
  out.synthetic = make_synthetic(s);
  out.family = std::make_shared<AffineMatrixFamily>(out.synthetic->family());
  out.box = out.synthetic->box();
  out.eps = s.eps;
  return out;
}

} // namespace detail

inline Problem load_problem(const Json& j, const std::filesystem::path& base = ".")
{
  require(j.is_object(), "descriptor: expected a JSON object");
  const std::string type = detail::field(j, "type", "descriptor").get<std::string>();
  Problem p;
  if (type == "sof")
  {
    p = detail::load_sof(j, base);
  }
  else if (type == "affine")
  {
    p = detail::load_affine(j, base);
  }
  else if (type == "synthetic")
  {
    p = detail::load_synthetic(j);
  }
  else
  {
    throw ContractViolation("descriptor: unknown type '" + type + "'");
  }
  p.name = j.contains("name") ? j.at("name").get<std::string>() : type;
  return p;
}

inline Json read_json(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ContractViolation("cannot open '" + path.string() + "'");
  }
  try
  {
    return Json::parse(in);
  }
  catch (const nlohmann::json::parse_error& e)
  {
    throw ContractViolation(path.string() + ": " + e.what());
  }
}

inline Problem load_problem_file(const std::filesystem::path& path)
{
  return load_problem(read_json(path), path.parent_path());
}

} // namespace psopt::desc

#endif // PSOPT_DESCRIPTOR_HPP
