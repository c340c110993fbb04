#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "purecd/sparse_matrix.hpp"

namespace purecd {

namespace {

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MatrixError("cannot open matrix file '" + path + "'");
  return in;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

SparseMatrix read_matrix_market(const std::string& path) {
  auto in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw MatrixError(path + ": empty file");
  std::istringstream banner(lower(line));
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%matrixmarket" || object != "matrix" || format != "coordinate") {
    throw MatrixError(path + ": expected '%%MatrixMarket matrix coordinate' banner");
  }
  if (field != "real" && field != "integer") {
    throw MatrixError(path + ": unsupported field '" + field + "'");
  }
  if (symmetry != "general") {
    throw MatrixError(path + ": unsupported symmetry '" + symmetry + "'");
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::size_t n = 0, d = 0, nnz = 0;
  {
    std::istringstream hdr(line);
    if (!(hdr >> n >> d >> nnz)) throw MatrixError(path + ": bad size line");
  }
  std::vector<Triplet> t;
  t.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v)) {
      throw MatrixError(path + ": expected " + std::to_string(nnz) + " entries, got " +
                        std::to_string(k));
    }
    if (i == 0 || j == 0) throw MatrixError(path + ": Matrix Market indices are 1-based");
    t.push_back({i - 1, j - 1, v});
  }
  return SparseMatrix::build(t, n, d);
}

SparseMatrix read_triplet_file(const std::string& path) {
  auto in = open_or_throw(path);
  std::size_t n = 0, d = 0, nnz = 0;
  if (!(in >> n >> d >> nnz)) throw MatrixError(path + ": bad header, expected 'n d nnz'");
  std::vector<Triplet> t;
  t.reserve(nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t i = 0, j = 0;
    double v = 0.0;
    if (!(in >> i >> j >> v)) {
      throw MatrixError(path + ": expected " + std::to_string(nnz) + " entries, got " +
                        std::to_string(k));
    }
    t.push_back({i, j, v});
  }
  return SparseMatrix::build(t, n, d);
}

SparseMatrix read_matrix_file(const std::string& path) {
  auto ends_with = [&](const std::string& suffix) {
    return path.size() >= suffix.size() &&
           lower(path.substr(path.size() - suffix.size())) == suffix;
  };
  return ends_with(".mtx") ? read_matrix_market(path) : read_triplet_file(path);
}

void write_triplet_file(const SparseMatrix& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MatrixError("cannot write '" + path + "'");
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto cols = a.row_cols(i);
    auto vals = a.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      out << i << ' ' << cols[k] << ' ' << vals[k] << '\n';
    }
  }
}

}  // namespace purecd
