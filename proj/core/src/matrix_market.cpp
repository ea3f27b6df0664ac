#include "sbp/matrix_market.hpp"

#include "sbp/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace sbp {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& msg) {
  throw Error(Errc::parse_error, source + ":" + std::to_string(line) + ": " + msg);
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

// Next line that is neither a comment nor blank.
bool next_data_line(std::istream& in, std::string& line, std::size_t& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '%' || blank(line)) continue;
    return true;
  }
  return false;
}

double parse_value(const std::string& tok, const std::string& source, std::size_t lineno) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || !std::isfinite(v)) fail(source, lineno, "bad value '" + tok + "'");
  return v;
}

long long parse_int(const std::string& tok, const std::string& source, std::size_t lineno) {
  char* end = nullptr;
  const long long v = std::strtoll(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') fail(source, lineno, "bad integer '" + tok + "'");
  return v;
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

}  // namespace

Matrix read_matrix_market(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) fail(source, 1, "empty file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto head = tokens(line);
  if (head.size() != 5 || lower(head[0]) != "%%matrixmarket") {
    fail(source, lineno, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'");
  }
  if (lower(head[1]) != "matrix") fail(source, lineno, "object '" + head[1] + "' is not 'matrix'");
  const std::string format = lower(head[2]);
  const std::string field = lower(head[3]);
  const std::string symmetry = lower(head[4]);
  if (format != "coordinate" && format != "array") fail(source, lineno, "unknown format '" + head[2] + "'");
  if (field == "complex" || field == "pattern") {
    throw Error(Errc::unsupported_field, source + ":" + std::to_string(lineno) + ": field '" + head[3] +
                                             "' is not supported (real or integer only)");
  }
  if (field != "real" && field != "integer" && field != "double") {
    fail(source, lineno, "unknown field '" + head[3] + "'");
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    throw Error(Errc::unsupported_field, source + ":" + std::to_string(lineno) + ": symmetry '" + head[4] +
                                             "' is not supported (general or symmetric only)");
  }
  const bool sym = symmetry == "symmetric";

  if (!next_data_line(in, line, lineno)) fail(source, lineno, "missing size line");
  const auto size = tokens(line);
  const std::size_t want = format == "coordinate" ? 3 : 2;
  if (size.size() != want) fail(source, lineno, "size line needs " + std::to_string(want) + " integers");
  const long long rows = parse_int(size[0], source, lineno);
  const long long cols = parse_int(size[1], source, lineno);
  if (rows < 0 || cols < 0) fail(source, lineno, "negative dimension");
  if (sym && rows != cols) fail(source, lineno, "symmetric matrix must be square");
  Matrix M = Matrix::Zero(rows, cols);

  if (format == "coordinate") {
    const long long nnz = parse_int(size[2], source, lineno);
    if (nnz < 0) fail(source, lineno, "negative entry count");
    for (long long e = 0; e < nnz; ++e) {
      if (!next_data_line(in, line, lineno)) {
        fail(source, lineno, "expected " + std::to_string(nnz) + " entries, found " + std::to_string(e));
      }
      const auto t = tokens(line);
      if (t.size() != 3) fail(source, lineno, "entry needs 'row col value'");
      const long long i = parse_int(t[0], source, lineno);
      const long long j = parse_int(t[1], source, lineno);
      if (i < 1 || i > rows || j < 1 || j > cols) fail(source, lineno, "entry index out of range");
      const double v = parse_value(t[2], source, lineno);
      M(i - 1, j - 1) += v;
      if (sym && i != j) M(j - 1, i - 1) += v;
    }
  } else {
    // Column-major; a symmetric array lists the lower triangle only.
    for (long long j = 0; j < cols; ++j) {
      for (long long i = sym ? j : 0; i < rows; ++i) {
        if (!next_data_line(in, line, lineno)) fail(source, lineno, "array ends early");
        const auto t = tokens(line);
        if (t.size() != 1) fail(source, lineno, "array entry needs exactly one value");
        const double v = parse_value(t[0], source, lineno);
        M(i, j) = v;
        if (sym) M(j, i) = v;
      }
    }
  }
  if (next_data_line(in, line, lineno)) fail(source, lineno, "trailing data after the last entry");
  return M;
}

Matrix load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "'");
  return read_matrix_market(in, path);
}

Vector load_vector_market(const std::string& path) {
  Matrix M = load_matrix_market(path);
  if (M.cols() == 1) return M.col(0);
  if (M.rows() == 1) return M.row(0).transpose();
  throw Error(Errc::dimension_mismatch, path + ": expected a vector, got a " + std::to_string(M.rows()) + "x" +
                                            std::to_string(M.cols()) + " matrix");
}

void write_matrix_market(std::ostream& out, const Matrix& M) {
  out << "%%MatrixMarket matrix array real general\n" << M.rows() << ' ' << M.cols() << '\n';
  char buf[64];
  for (Index j = 0; j < M.cols(); ++j) {
    for (Index i = 0; i < M.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g\n", M(i, j));
      out << buf;
    }
  }
}

void save_matrix_market(const std::string& path, const Matrix& M) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write '" + path + "'");
  write_matrix_market(out, M);
  if (!out) throw Error(Errc::io, "write to '" + path + "' failed");
}

}  // namespace sbp
