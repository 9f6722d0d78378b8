#pragma once

// Compressed sparse row matrices and the small set of instrumented kernels the
// rest of the library is built on.  Symmetric matrices (precisions, scaled
// precisions, factors' inputs) store both triangles so row slices give whole
// neighbourhoods and spmv stays branch-free.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace crossed {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Scalar-operation tally: one unit per add/multiply/divide/sqrt.  Kernels take
// a nullable pointer; null means "don't count".
using FlopCount = std::int64_t;

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct SparseMat {
  int rows = 0;
  int cols = 0;
  bool symmetric = false;  // both triangles stored, value(i,j) == value(j,i)
  std::vector<int> row_ptr;  // size rows + 1
  std::vector<int> col_ind;  // size nnz, strictly increasing within each row
  std::vector<double> val;

  int nnz() const { return static_cast<int>(col_ind.size()); }
  double at(int i, int j) const;  // 0.0 outside the support
  MatrixXd dense() const;
  SparseMat transposed() const;
};

// Builds CSR from an unsorted triplet list; duplicates are summed.  With
// `symmetric` set, support and values must match the transpose exactly
// (transpose-compare), otherwise the build is rejected.
SparseMat sparse_from_triplets(int rows, int cols, std::vector<Triplet> entries,
                               bool symmetric);

SparseMat sparse_identity(int n);

// Entries with |a_ij| <= drop_tol are not stored.
SparseMat sparse_from_dense(const MatrixXd& a, bool symmetric, double drop_tol = 0.0);

// y = A x; adds 2*nnz(A) to *flops when given.
VectorXd spmv(const SparseMat& a, const VectorXd& x, FlopCount* flops = nullptr);

VectorXd sparse_diagonal(const SparseMat& a);

// Diag(A)^{-1/2} A Diag(A)^{-1/2} together with the scaling vector
// d = diag(A)^{1/2}.  The result carries exact ones on the diagonal (assigned,
// not recomputed).  Requires a strictly positive diagonal.
struct JacobiScaled {
  SparseMat scaled;
  VectorXd d;
};
JacobiScaled jacobi_scale(const SparseMat& a);

// Matrix Market exchange files (coordinate, real).  Symmetric-flagged
// matrices are written with the `symmetric` qualifier and only their lower
// triangle; reads mirror it back.  Values carry 17 significant digits so a
// write/read round trip is exact.  Malformed input raises ParseError with the
// offending line number.
void write_matrix_market(const SparseMat& a, const std::string& path);
SparseMat read_matrix_market(const std::string& path);

}  // namespace crossed
