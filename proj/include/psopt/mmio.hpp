// SPDX-License-Identifier: Apache-2.0

// Matrix Market (.mtx) reader and writer for real matrices.
// Supported: coordinate and array formats; real, integer and pattern fields;
// general, symmetric and skew-symmetric storage.

#ifndef PSOPT_MMIO_HPP
#define PSOPT_MMIO_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "psopt/common.hpp"

namespace psopt
{

/// Malformed input file; the message carries "path:line: reason".
class ParseError : public std::runtime_error
{
public:
  ParseError(const std::string& where, std::size_t line, const std::string& what)
      : std::runtime_error(where + ":" + std::to_string(line) + ": " + what), line_(line)
  {
  }
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

struct MarketMatrix
{
  Index rows = 0;
  Index cols = 0;
  bool coordinate = false;
  SparseReal sparse;

  RMatrix dense() const { return RMatrix(sparse); }
};

namespace detail
{
inline std::string lower(std::string s)
{
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return s;
}
} // namespace detail

inline MarketMatrix read_matrix_market(std::istream& in, const std::string& name = "<stream>")
{
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line))
  {
    throw ParseError(name, 1, "empty file");
  }
  ++lineno;
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket")
  {
    throw ParseError(name, lineno, "missing %%MatrixMarket banner");
  }
  object = detail::lower(object);
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  if (object != "matrix")
  {
    throw ParseError(name, lineno, "unsupported object '" + object + "'");
  }
  if (format != "coordinate" && format != "array")
  {
    throw ParseError(name, lineno, "unsupported format '" + format + "'");
  }
  if (field != "real" && field != "integer" && field != "pattern" && field != "double")
  {
    throw ParseError(name, lineno, "unsupported field '" + field + "' (only real matrices)");
  }
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric")
  {
    throw ParseError(name, lineno, "unsupported symmetry '" + symmetry + "'");
  }
  if (format == "array" && field == "pattern")
  {
    throw ParseError(name, lineno, "pattern field requires coordinate format");
  }

  auto next_data_line = [&](std::string& out) {
    while (std::getline(in, out))
    {
      ++lineno;
      auto first = out.find_first_not_of(" \t\r");
      if (first == std::string::npos || out[first] == '%')
      {
        continue;
      }
      return true;
    }
    return false;
  };

  MarketMatrix result;
  result.coordinate = format == "coordinate";
  if (!next_data_line(line))
  {
    throw ParseError(name, lineno + 1, "missing size line");
  }
  std::istringstream size_line(line);
  long long rows = -1, cols = -1, entries = -1;
  size_line >> rows >> cols;
  if (result.coordinate)
  {
    size_line >> entries;
  }
  if (!size_line || rows <= 0 || cols <= 0 || (result.coordinate && entries < 0))
  {
    throw ParseError(name, lineno, "invalid size line '" + line + "'");
  }
  const bool symmetric = symmetry != "general";
  const double mirror = symmetry == "skew-symmetric" ? -1.0 : 1.0;
  if (symmetric && rows != cols)
  {
    throw ParseError(name, lineno, "symmetric storage requires a square matrix");
  }
  result.rows = rows;
  result.cols = cols;

  std::vector<Eigen::Triplet<double>> triplets;
  if (result.coordinate)
  {
    triplets.reserve(static_cast<std::size_t>(entries) * (symmetric ? 2 : 1));
    for (long long e = 0; e < entries; ++e)
    {
      if (!next_data_line(line))
      {
        throw ParseError(name, lineno + 1, "expected " + std::to_string(entries) + " entries, found " + std::to_string(e));
      }
      std::istringstream entry(line);
      long long i = 0, j = 0;
      double v = 1.0;
      entry >> i >> j;
      if (field != "pattern")
      {
        entry >> v;
      }
      if (!entry)
      {
        throw ParseError(name, lineno, "malformed entry '" + line + "'");
      }
      if (i < 1 || i > rows || j < 1 || j > cols)
      {
        throw ParseError(name, lineno, "index out of range");
      }
      if (!std::isfinite(v))
      {
        throw ParseError(name, lineno, "non-finite value");
      }
      triplets.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
      if (symmetric && i != j)
      {
        triplets.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1), mirror * v);
      }
    }
  }
  else
  {
    // Column-major; symmetric arrays list the lower triangle only.
    for (long long j = 0; j < cols; ++j)
    {
      for (long long i = symmetric ? j : 0; i < rows; ++i)
      {
        if (symmetry == "skew-symmetric" && i == j)
        {
          continue;
        }
        if (!next_data_line(line))
        {
          throw ParseError(name, lineno + 1, "array data ended early");
        }
        std::istringstream entry(line);
        double v = 0.0;
        entry >> v;
        if (!entry || !std::isfinite(v))
        {
          throw ParseError(name, lineno, "malformed value '" + line + "'");
        }
        if (v != 0.0)
        {
          triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
          if (symmetric && i != j)
          {
            triplets.emplace_back(static_cast<int>(j), static_cast<int>(i), mirror * v);
          }
        }
      }
    }
  }
  result.sparse.resize(rows, cols);
  result.sparse.setFromTriplets(triplets.begin(), triplets.end());
  result.sparse.makeCompressed();
  return result;
}

inline MarketMatrix read_matrix_market(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ParseError(path, 0, "cannot open file");
  }
  return read_matrix_market(in, path);
}

inline void write_matrix_market(std::ostream& out, const SparseReal& a)
{
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  out << std::setprecision(17);
  for (int k = 0; k < a.outerSize(); ++k)
  {
    for (SparseReal::InnerIterator it(a, k); it; ++it)
    {
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
    }
  }
}

inline void write_matrix_market(std::ostream& out, const RMatrix& a)
{
  out << "%%MatrixMarket matrix array real general\n";
  out << a.rows() << ' ' << a.cols() << '\n';
  out << std::setprecision(17);
  for (Index j = 0; j < a.cols(); ++j)
  {
    for (Index i = 0; i < a.rows(); ++i)
    {
      out << a(i, j) << '\n';
    }
  }
}

template <typename Matrix>
void write_matrix_market(const std::string& path, const Matrix& a)
{
  std::ofstream out(path);
  if (!out)
  {
    throw std::runtime_error("cannot write " + path);
  }
  write_matrix_market(out, a);
}

} // namespace psopt

#endif // PSOPT_MMIO_HPP
