#pragma once

// Spectral diagnostics for normalized precision and co-occurrence matrices:
// effective condition numbers after outlier removal, multipartite adjacency
// spectra, and the graph-connectivity bounds that control them.

#include "crossed/design.hpp"
#include "crossed/sparse.hpp"

#include <iosfwd>
#include <map>
#include <utility>
#include <vector>

namespace crossed {

// Dense eigensolves are for desk-scale verification only.
inline constexpr int kEigSizeCap = 4000;

// All eigenvalues, ascending.  Requires symmetry within 1e-12 (relative to
// the largest entry) and size at most kEigSizeCap; throws otherwise.
VectorXd dense_sym_eig(const MatrixXd& m);

enum class MatrixKind { Q, QBar, UBar, AdjacencyR, AdjacencyPair };

struct SpectrumReport {
  VectorXd eigenvalues;  // ascending
  MatrixKind matrix_kind = MatrixKind::Q;
  // (s, r) -> kappa_{s+1, p-r}: condition number after dropping the s
  // smallest and r largest eigenvalues.
  std::map<std::pair<int, int>, double> effective_cns;
};

// kappa_{s+1, p-r} with eigs ascending; requires s + r < p and a positive
// denominator eigenvalue.
double effective_condition_number(const VectorXd& eigs, int s, int r);

// Gram matrix U = V'V (optionally V' Diag(omega) V), densely (desk scale).
MatrixXd dense_u(const SparseMat& v);
MatrixXd dense_u(const SparseMat& v, const VectorXd& omega);
// Diag(m)^{-1/2} m Diag(m)^{-1/2}; requires a strictly positive diagonal.
MatrixXd normalize_by_diagonal(const MatrixXd& m);
// Diagonal-normalized precision built from the design and model.
MatrixXd dense_q_normalized(const SparseMat& v, const PrecisionModel& model);

// Co-occurrence adjacency over the random-effect levels of a K >= 2
// random-intercept design: counts off the diagonal, zero diagonal, normalized
// by row sums D.  Verifies the identity D = (K-1) * level counts exactly.
MatrixXd normalized_adjacency_r(const FactorDesign& d);

// Checks on the diagonal-normalized likelihood and precision spectra:
// K structural near-zero eigenvalues, largest eigenvalue pinned at K+1, and
// the corresponding outlier brackets for the normalized precision.
//
// The top eigenvalue of normalized Q lives in a window set by the diagonal
// shrinkage factors s_j = tau u_j / (t_j + tau u_j), u = Diag(V' Omega V):
// splitting normalized Q into a diagonal part (entries 1 - s_j) plus a
// congruence-scaled copy of normalized U gives
//   (K+1) min s + min(1-s)  <=  mu_top  <=  (K+1) max s + max(1-s)  <=  K+2,
// which tends to [K+1, K+2] as the prior weight t_j / u_j vanishes.
struct ScaledSpectrumReport {
  int k_factors = 0;
  VectorXd u_eigs;        // spectrum of normalized V'V
  VectorXd q_eigs;        // spectrum of normalized Q
  int near_zero_count = 0;  // eigenvalues of normalized U below 1e-8
  double top_u = 0;
  double mu_small = 0;    // K-th smallest eigenvalue of normalized Q
  double mu_top = 0;
  double small_bound = 0;  // maxT / (tau + maxT)
  double top_lower = 0;   // (K+1) min s + min(1-s)
  double top_upper = 0;   // (K+1) max s + max(1-s), provably <= K+2
  bool zero_count_ok = false, top_ok = false, small_ok = false, top_range_ok = false;
  bool pass() const { return zero_count_ok && top_ok && small_ok && top_range_ok; }
};
ScaledSpectrumReport scaled_spectrum_check(const FactorDesign& d,
                                           const PrecisionModel& model);

// Interior-spectrum control: the condition number of normalized Q after
// dropping its K smallest and 2 largest eigenvalues is at most
// (1 + (K-1) nu_high) / (1 + (K-1) nu_low), where nu_low / nu_high bracket
// the interior adjacency spectrum.  Informative only when nu_low stays away
// from -1/(K-1) and the interior interval straddles zero.
struct InterlaceReport {
  double nu_low = 0;   // K-th smallest adjacency eigenvalue
  double nu_high = 0;  // second-largest adjacency eigenvalue
  double bound = 0;    // +inf when the denominator closes
  double actual = 0;   // measured condition number of the interior block
  bool informative = false;
};
InterlaceReport interlace_bound(const FactorDesign& d, const PrecisionModel& model);

// Connectivity of consecutive factor pairs and the pair-spectral statistic.
struct PairwiseReport {
  std::vector<int> component_counts;  // per consecutive pair in `perm` order
  int predicted_multiplicity = 0;     // sum of component counts: a lower bound
                                      // on the -1/(K-1) eigenvalue count
  double lambda_star = 0;             // sqrt(K-1) * max nontrivial pair |eig|
};
PairwiseReport pairwise_components(const FactorDesign& d);
PairwiseReport pairwise_components(const FactorDesign& d, const std::vector<int>& perm);

// Bipartite adjacency restricted to factors (k, h): co-occurrence counts by
// default, 0/1 entries when binary is set.
MatrixXd pair_adjacency(const FactorDesign& d, int k, int h, bool binary = false);
// sqrt(K-1) * max{|lambda|: lambda in any pair spectrum, |lambda| != 1};
// below 1 it bounds the interior condition number by (1+l*)/(1-l*).
double pair_spectral_bound(const FactorDesign& d);

// Slack added to degree-based spectral-gap bounds at finite sizes (the
// asymptotic statements hold up to a vanishing sequence; this fixes it).
inline constexpr double kDegreeBoundSlack = 0.05;

struct BoundCheckReport {
  int trials = 0;
  int passes = 0;
  bool applicable = true;  // false when the bound denominator closes
  double bound = 0;
  double pass_rate() const { return trials ? static_cast<double>(passes) / trials : 0.0; }
};

// Fraction of seeded biregular designs (T=I, tau=1) whose interior condition
// number respects (1 + s + slack) / (1 - s - slack), s = 1/sqrt(d1) + 1/sqrt(d2).
BoundCheckReport biregular_bound_check(int g1, int g2, int d1, int d2, int trials,
                                       std::uint64_t seed0);
// Same for Bernoulli bipartite designs; eps = 4 (1/sqrt(G1 pi) + 1/sqrt(G2 pi)
// + sqrt(1/(G1 pi) + 1/(G2 pi))).
BoundCheckReport er_bound_check(int g1, int g2, double pi, int trials,
                                std::uint64_t seed0);

// CSV histogram over equal-width bins: header then "bin_lo,bin_hi,count".
void write_spectrum_histogram(const VectorXd& eigs, int bins, std::ostream& os);

}  // namespace crossed
