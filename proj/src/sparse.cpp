#include "crossed/sparse.hpp"

#include "crossed/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace crossed {

double SparseMat::at(int i, int j) const {
  auto begin = col_ind.begin() + row_ptr[i];
  auto end = col_ind.begin() + row_ptr[i + 1];
  auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return val[it - col_ind.begin()];
}

MatrixXd SparseMat::dense() const {
  MatrixXd a = MatrixXd::Zero(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) a(i, col_ind[k]) += val[k];
  return a;
}

SparseMat SparseMat::transposed() const {
  SparseMat t;
  t.rows = cols;
  t.cols = rows;
  t.symmetric = symmetric;
  t.row_ptr.assign(cols + 1, 0);
  for (int c : col_ind) ++t.row_ptr[c + 1];
  for (int i = 0; i < cols; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
  t.col_ind.resize(col_ind.size());
  t.val.resize(val.size());
  std::vector<int> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (int i = 0; i < rows; ++i)
    for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      int pos = next[col_ind[k]]++;
      t.col_ind[pos] = i;
      t.val[pos] = val[k];
    }
  return t;
}

SparseMat sparse_from_triplets(int rows, int cols, std::vector<Triplet> entries,
                               bool symmetric) {
  for (const Triplet& e : entries)
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
      throw std::invalid_argument("triplet index out of range");
  // stable: duplicates are summed in emission order, so mirrored entries built
  // from the same contribution sequence stay bitwise equal
  std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMat a;
  a.rows = rows;
  a.cols = cols;
  a.symmetric = symmetric;
  a.row_ptr.assign(rows + 1, 0);
  for (size_t k = 0; k < entries.size();) {
    size_t j = k;
    double sum = 0.0;
    while (j < entries.size() && entries[j].row == entries[k].row &&
           entries[j].col == entries[k].col)
      sum += entries[j++].value;
    a.col_ind.push_back(entries[k].col);
    a.val.push_back(sum);
    ++a.row_ptr[entries[k].row + 1];
    k = j;
  }
  for (int i = 0; i < rows; ++i) a.row_ptr[i + 1] += a.row_ptr[i];
  if (symmetric) {
    if (rows != cols) throw std::invalid_argument("symmetric matrix must be square");
    SparseMat t = a.transposed();
    if (t.row_ptr != a.row_ptr || t.col_ind != a.col_ind || t.val != a.val)
      throw std::invalid_argument("symmetric flag set but matrix differs from its transpose");
  }
  return a;
}

SparseMat sparse_identity(int n) {
  SparseMat a;
  a.rows = a.cols = n;
  a.symmetric = true;
  a.row_ptr.resize(n + 1);
  a.col_ind.resize(n);
  a.val.assign(n, 1.0);
  for (int i = 0; i <= n; ++i) a.row_ptr[i] = i;
  for (int i = 0; i < n; ++i) a.col_ind[i] = i;
  return a;
}

SparseMat sparse_from_dense(const MatrixXd& m, bool symmetric, double drop_tol) {
  std::vector<Triplet> entries;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (std::abs(m(i, j)) > drop_tol) entries.push_back({i, j, m(i, j)});
  return sparse_from_triplets(static_cast<int>(m.rows()), static_cast<int>(m.cols()),
                              std::move(entries), symmetric);
}

VectorXd spmv(const SparseMat& a, const VectorXd& x, FlopCount* flops) {
  if (x.size() != a.cols) throw std::invalid_argument("spmv: dimension mismatch");
  VectorXd y = VectorXd::Zero(a.rows);
  for (int i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) s += a.val[k] * x[a.col_ind[k]];
    y[i] = s;
  }
  if (flops) *flops += 2ll * a.nnz();
  return y;
}

VectorXd sparse_diagonal(const SparseMat& a) {
  int n = std::min(a.rows, a.cols);
  VectorXd d = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) d[i] = a.at(i, i);
  return d;
}

JacobiScaled jacobi_scale(const SparseMat& a) {
  if (a.rows != a.cols) throw std::invalid_argument("jacobi_scale: matrix must be square");
  VectorXd diag = sparse_diagonal(a);
  for (int i = 0; i < a.rows; ++i)
    if (!(diag[i] > 0.0))
      throw SingularPreconditioner("jacobi_scale: non-positive diagonal at index " +
                                   std::to_string(i));
  JacobiScaled out;
  out.d = diag.array().sqrt();
  out.scaled = a;
  for (int i = 0; i < a.rows; ++i)
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      int j = a.col_ind[k];
      out.scaled.val[k] = (i == j) ? 1.0 : a.val[k] / (out.d[i] * out.d[j]);
    }
  return out;
}

void write_matrix_market(const SparseMat& a, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "%%MatrixMarket matrix coordinate real "
    << (a.symmetric ? "symmetric" : "general") << "\n";
  int count = 0;
  for (int i = 0; i < a.rows; ++i)
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
      if (!a.symmetric || a.col_ind[k] <= i) ++count;
  f << a.rows << " " << a.cols << " " << count << "\n";
  char buf[64];
  for (int i = 0; i < a.rows; ++i)
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      if (a.symmetric && a.col_ind[k] > i) continue;
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i + 1, a.col_ind[k] + 1, a.val[k]);
      f << buf;
    }
  if (!f) throw std::runtime_error("write failed: " + path);
}

SparseMat read_matrix_market(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  int lineno = 0;
  if (!std::getline(f, line)) throw ParseError(1, "empty file");
  ++lineno;
  std::istringstream header(line);
  std::string banner, object, format, field, sym;
  header >> banner >> object >> format >> field >> sym;
  if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate")
    throw ParseError(lineno, "expected '%%MatrixMarket matrix coordinate' header");
  if (field != "real" && field != "integer")
    throw ParseError(lineno, "unsupported field type: " + field);
  bool symmetric = false;
  if (sym == "symmetric")
    symmetric = true;
  else if (sym != "general")
    throw ParseError(lineno, "unsupported symmetry qualifier: " + sym);

  int rows = 0, cols = 0, count = 0;
  int n_read = 0;
  bool have_size = false;
  std::vector<Triplet> entries;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    if (!have_size) {
      if (!(ss >> rows >> cols >> count)) throw ParseError(lineno, "bad size line");
      if (rows < 0 || cols < 0 || count < 0) throw ParseError(lineno, "negative size");
      have_size = true;
      continue;
    }
    int i, j;
    double v;
    if (!(ss >> i >> j >> v)) throw ParseError(lineno, "bad entry line");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw ParseError(lineno, "index out of range");
    if (symmetric && j > i) throw ParseError(lineno, "upper-triangle entry in symmetric file");
    entries.push_back({i - 1, j - 1, v});
    if (symmetric && i != j) entries.push_back({j - 1, i - 1, v});
    ++n_read;
  }
  if (!have_size) throw ParseError(lineno, "missing size line");
  if (n_read != count) throw ParseError(lineno, "entry count does not match header");
  return sparse_from_triplets(rows, cols, std::move(entries), symmetric);
}

}  // namespace crossed
