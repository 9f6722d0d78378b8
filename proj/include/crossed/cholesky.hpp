#pragma once

// Sparse Cholesky machinery driven by graph elimination: conditional
// independence graph, greedy minimum-degree ordering, symbolic fill-in and
// flop prediction, numeric and incomplete factorization, triangular solves,
// and the factor-based Gaussian sampler.
//
// The symbolic phase simulates elimination on the graph of Q: removing a
// vertex pairwise-connects its not-yet-eliminated neighbours, and the fill
// column of position m collects exactly the higher-ordered neighbours present
// at its elimination.  The numeric phase then runs a left-looking column
// recursion over that pattern, so its flop counter reproduces the symbolic
// cost prediction sum_m [1 + n'_m + n'_m (1 + n'_m)] operation for operation
// (n'_m = strictly-below-diagonal entries of column m).

#include "crossed/rng.hpp"
#include "crossed/sparse.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace crossed {

struct CIGraph {
  int p = 0;
  std::vector<std::vector<int>> adj;  // sorted, symmetric, no self-loops
};

// Edge (j,m) iff Q_jm != 0 numerically, j != m.  Requires the symmetric flag.
CIGraph ci_graph(const SparseMat& q);

// Greedy minimum-degree elimination order; `pin_last` vertices (typically the
// fixed-effect block) are forced after all others.  Ties break toward the
// smallest original index, which makes the order deterministic.
std::vector<int> min_degree_order(const CIGraph& g, const std::vector<int>& pin_last = {});

struct EliminationReport {
  std::vector<int> order;                      // order[t] = vertex eliminated at step t
  std::vector<std::int64_t> per_column_counts; // n_{L,m} incl. the diagonal, by position
  std::int64_t total_nl = 0;
  std::int64_t predicted_flops = 0;
  double lower_bound = 0.0;   // total_nl^2 / p
  double upper_bound = 0.0;   // total_nl^1.5
  bool dense_fallback = false;  // tail of the elimination went fully dense
};

EliminationReport symbolic_factor(const CIGraph& g, const std::vector<int>& order);

void write_elimination_report(const EliminationReport& r, const std::string& path);

struct CholFactor {
  SparseMat l;              // lower triangular, in permuted coordinates
  std::vector<int> order;
  FlopCount flops = 0;
};

// P Q P' = L L' for the permutation P induced by `order`.  Throws
// NotPositiveDefinite (naming the original column) on a non-positive pivot.
CholFactor numeric_cholesky(const SparseMat& q, const std::vector<int>& order);

// Zero-fill factor restricted to `pattern` (lower-triangular support with full
// diagonal); by default the lower triangle of Q itself.  Negative pivot
// quantities continue through their absolute value; a zero pivot after that
// fix raises SingularPreconditioner.
SparseMat incomplete_cholesky(const SparseMat& q, const SparseMat* pattern = nullptr);

// Solves L x = b (or L' x = b) by substitution in O(n_L) flops.
VectorXd tri_solve(const SparseMat& l, const VectorXd& b, bool transposed,
                   FlopCount* flops = nullptr);

// One draw from N(Q^{-1} m, Q^{-1}) given the factor of the permuted Q:
// solve L w = P m, then L'(P theta) = w + z with z standard normal.
VectorXd chol_sample(const CholFactor& f, const VectorXd& m, Rng& rng);

}  // namespace crossed
