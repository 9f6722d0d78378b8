#include "crossed/spectral.hpp"

#include "crossed/errors.hpp"
#include "crossed/generators.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace crossed {

namespace {

// Basic union-find for bipartite component counting.
struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
  int components() {
    int c = 0;
    for (int a = 0; a < static_cast<int>(parent.size()); ++a)
      if (find(a) == a) ++c;
    return c;
  }
};

void require_random_intercept(const FactorDesign& d, const char* who) {
  if (d.n_factors() < 2)
    throw std::invalid_argument(std::string(who) + ": needs at least two factors");
  for (const Factor& f : d.factors)
    if (f.slope_dim != 1)
      throw std::invalid_argument(std::string(who) + ": random-intercept factors only");
}

VectorXd inv_sqrt(const VectorXd& v, const char* who) {
  VectorXd r(v.size());
  for (int i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) throw std::invalid_argument(std::string(who) + ": non-positive diagonal");
    r[i] = 1.0 / std::sqrt(v[i]);
  }
  return r;
}

}  // namespace

VectorXd dense_sym_eig(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("dense_sym_eig: matrix not square");
  if (m.rows() > kEigSizeCap)
    throw CapExceeded("dense_sym_eig: size " + std::to_string(m.rows()) +
                      " exceeds cap " + std::to_string(kEigSizeCap));
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("dense_sym_eig: matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericBreakdown("dense_sym_eig: eigensolver failed to converge");
  return solver.eigenvalues();
}

double effective_condition_number(const VectorXd& eigs, int s, int r) {
  const int p = static_cast<int>(eigs.size());
  if (s < 0 || r < 0 || s + r >= p)
    throw std::invalid_argument("effective_condition_number: need s + r < p");
  double denom = eigs[s];
  if (!(denom > 0.0))
    throw std::invalid_argument("effective_condition_number: non-positive denominator");
  return eigs[p - 1 - r] / denom;
}

MatrixXd dense_u(const SparseMat& v) { return dense_u(v, VectorXd::Ones(v.rows)); }

MatrixXd dense_u(const SparseMat& v, const VectorXd& omega) {
  if (omega.size() != v.rows)
    throw std::invalid_argument("dense_u: weight length mismatch");
  MatrixXd u = MatrixXd::Zero(v.cols, v.cols);
  for (int i = 0; i < v.rows; ++i)
    for (int ka = v.row_ptr[i]; ka < v.row_ptr[i + 1]; ++ka)
      for (int kb = v.row_ptr[i]; kb < v.row_ptr[i + 1]; ++kb)
        u(v.col_ind[ka], v.col_ind[kb]) += omega[i] * v.val[ka] * v.val[kb];
  return u;
}

MatrixXd normalize_by_diagonal(const MatrixXd& m) {
  VectorXd d = inv_sqrt(m.diagonal(), "normalize_by_diagonal");
  return d.asDiagonal() * m * d.asDiagonal();
}

MatrixXd dense_q_normalized(const SparseMat& v, const PrecisionModel& model) {
  SparseMat q = assemble_precision(v, model);
  return normalize_by_diagonal(q.dense());
}

MatrixXd normalized_adjacency_r(const FactorDesign& d) {
  require_random_intercept(d, "normalized_adjacency_r");
  const int kk = d.n_factors();
  int pr = 0;
  for (const Factor& f : d.factors) pr += f.levels;
  MatrixXd a = MatrixXd::Zero(pr, pr);
  std::vector<std::int64_t> level_count(pr, 0);
  for (int i = 0; i < d.n_obs(); ++i) {
    for (int k = 0; k < kk; ++k) {
      int jk = d.block_offset(k) + d.assignment[i][k] - 1;
      ++level_count[jk];
      for (int h = k + 1; h < kk; ++h) {
        int jh = d.block_offset(h) + d.assignment[i][h] - 1;
        a(jk, jh) += 1.0;
        a(jh, jk) += 1.0;
      }
    }
  }
  VectorXd rowsum = a.rowwise().sum();
  for (int j = 0; j < pr; ++j) {
    if (rowsum[j] <= 0.0)
      throw std::invalid_argument("normalized_adjacency_r: isolated level");
    // row sums count each observation once per co-factor, exactly
    if (rowsum[j] != (kk - 1) * static_cast<double>(level_count[j]))
      throw std::logic_error("normalized_adjacency_r: row-sum identity violated");
  }
  VectorXd s = inv_sqrt(rowsum, "normalized_adjacency_r");
  return s.asDiagonal() * a * s.asDiagonal();
}

ScaledSpectrumReport scaled_spectrum_check(const FactorDesign& d,
                                           const PrecisionModel& model) {
  SparseMat v = build_design_matrix(d);
  ScaledSpectrumReport rep;
  rep.k_factors = d.n_factors();
  MatrixXd u = dense_u(v, model.omega);
  rep.u_eigs = dense_sym_eig(normalize_by_diagonal(u));
  rep.q_eigs = dense_sym_eig(dense_q_normalized(v, model));
  const int k = rep.k_factors;
  const int p = static_cast<int>(rep.u_eigs.size());
  rep.near_zero_count = 0;
  for (int j = 0; j < p; ++j)
    if (rep.u_eigs[j] < 1e-8) ++rep.near_zero_count;
  rep.top_u = rep.u_eigs[p - 1];
  rep.mu_small = rep.q_eigs[k - 1];
  rep.mu_top = rep.q_eigs[p - 1];
  double max_t = model.t.maxCoeff();
  rep.small_bound = max_t / (model.tau + max_t);
  // Shrinkage window for the top eigenvalue (see the report declaration):
  // the prior diagonal pulls the top outlier below K+1 by at most the worst
  // relative prior weight, and pushes it above by at most max(1-s) <= 1.
  VectorXd s = (model.tau * u.diagonal().array() /
                (model.t.array() + model.tau * u.diagonal().array()))
                   .matrix();
  rep.top_lower = (k + 1) * s.minCoeff() + (1.0 - s.maxCoeff());
  rep.top_upper = (k + 1) * s.maxCoeff() + (1.0 - s.minCoeff());
  if (rep.top_upper > k + 2 + 1e-12)
    throw std::logic_error("scaled_spectrum_check: top window exceeded K+2");
  rep.zero_count_ok = rep.near_zero_count == k;
  rep.top_ok = std::abs(rep.top_u - (k + 1)) <= 1e-8;
  rep.small_ok = rep.mu_small <= rep.small_bound + 1e-10;
  rep.top_range_ok = rep.mu_top >= rep.top_lower - 1e-10 &&
                     rep.mu_top <= rep.top_upper + 1e-10;
  return rep;
}

InterlaceReport interlace_bound(const FactorDesign& d, const PrecisionModel& model) {
  require_random_intercept(d, "interlace_bound");
  const int k = d.n_factors();
  VectorXd nu = dense_sym_eig(normalized_adjacency_r(d));
  const int pr = static_cast<int>(nu.size());
  InterlaceReport rep;
  rep.nu_low = nu[k - 1];
  rep.nu_high = nu[pr - 2];
  double denom = 1.0 + (k - 1) * rep.nu_low;
  rep.bound = denom > 0.0 ? (1.0 + (k - 1) * rep.nu_high) / denom
                          : std::numeric_limits<double>::infinity();
  rep.informative = rep.nu_low > -1.0 / (k - 1) + 1e-10 && rep.nu_low <= 0.0 &&
                    rep.nu_high >= 0.0;
  SparseMat v = build_design_matrix(d);
  VectorXd mu = dense_sym_eig(dense_q_normalized(v, model));
  rep.actual = effective_condition_number(mu, k, 2);
  return rep;
}

MatrixXd pair_adjacency(const FactorDesign& d, int k, int h, bool binary) {
  if (k == h || k < 0 || h < 0 || k >= d.n_factors() || h >= d.n_factors())
    throw std::invalid_argument("pair_adjacency: bad factor pair");
  const int gk = d.factors[k].levels, gh = d.factors[h].levels;
  MatrixXd a = MatrixXd::Zero(gk + gh, gk + gh);
  for (int i = 0; i < d.n_obs(); ++i) {
    int row = d.assignment[i][k] - 1;
    int col = gk + d.assignment[i][h] - 1;
    if (binary) {
      a(row, col) = 1.0;
      a(col, row) = 1.0;
    } else {
      a(row, col) += 1.0;
      a(col, row) += 1.0;
    }
  }
  return a;
}

namespace {

// Largest |eigenvalue| of a normalized pair adjacency after removing the
// trivial +-1 pair.
double pair_nontrivial_radius(const FactorDesign& d, int k, int h) {
  MatrixXd a = pair_adjacency(d, k, h, false);
  VectorXd rowsum = a.rowwise().sum();
  VectorXd s = inv_sqrt(rowsum, "pair_spectral_bound");
  VectorXd eigs = dense_sym_eig(s.asDiagonal() * a * s.asDiagonal());
  const int n = static_cast<int>(eigs.size());
  // drop one eigenvalue nearest +1 and one nearest -1
  int at_top = 0, at_bottom = 0;
  for (int j = 1; j < n; ++j) {
    if (std::abs(eigs[j] - 1.0) < std::abs(eigs[at_top] - 1.0)) at_top = j;
    if (std::abs(eigs[j] + 1.0) < std::abs(eigs[at_bottom] + 1.0)) at_bottom = j;
  }
  double radius = 0.0;
  for (int j = 0; j < n; ++j)
    if (j != at_top && j != at_bottom) radius = std::max(radius, std::abs(eigs[j]));
  return radius;
}

}  // namespace

PairwiseReport pairwise_components(const FactorDesign& d, const std::vector<int>& perm) {
  require_random_intercept(d, "pairwise_components");
  const int kk = d.n_factors();
  if (static_cast<int>(perm.size()) != kk)
    throw std::invalid_argument("pairwise_components: permutation size mismatch");
  std::vector<char> seen(kk, 0);
  for (int x : perm) {
    if (x < 0 || x >= kk || seen[x])
      throw std::invalid_argument("pairwise_components: not a permutation");
    seen[x] = 1;
  }
  PairwiseReport rep;
  for (int l = 0; l + 1 < kk; ++l) {
    int k = perm[l], h = perm[l + 1];
    DisjointSets ds(d.factors[k].levels + d.factors[h].levels);
    for (int i = 0; i < d.n_obs(); ++i)
      ds.unite(d.assignment[i][k] - 1,
               d.factors[k].levels + d.assignment[i][h] - 1);
    rep.component_counts.push_back(ds.components());
  }
  rep.predicted_multiplicity =
      std::accumulate(rep.component_counts.begin(), rep.component_counts.end(), 0);
  double radius = 0.0;
  for (int k = 0; k < kk; ++k)
    for (int h = k + 1; h < kk; ++h)
      radius = std::max(radius, pair_nontrivial_radius(d, k, h));
  rep.lambda_star = std::sqrt(static_cast<double>(kk - 1)) * radius;
  return rep;
}

PairwiseReport pairwise_components(const FactorDesign& d) {
  std::vector<int> identity(d.n_factors());
  std::iota(identity.begin(), identity.end(), 0);
  return pairwise_components(d, identity);
}

double pair_spectral_bound(const FactorDesign& d) {
  return pairwise_components(d).lambda_star;
}

BoundCheckReport biregular_bound_check(int g1, int g2, int d1, int d2, int trials,
                                       std::uint64_t seed0) {
  BoundCheckReport rep;
  rep.trials = trials;
  double s = 1.0 / std::sqrt(static_cast<double>(d1)) + 1.0 / std::sqrt(static_cast<double>(d2));
  double denom = 1.0 - s - kDegreeBoundSlack;
  rep.applicable = denom > 0.0;
  rep.bound = rep.applicable ? (1.0 + s + kDegreeBoundSlack) / denom
                             : std::numeric_limits<double>::infinity();
  if (!rep.applicable) return rep;
  for (int t = 0; t < trials; ++t) {
    FactorDesign d = gen_biregular_bipartite(g1, g2, d1, d2, seed0 + t);
    SparseMat v = build_design_matrix(d);
    PrecisionModel model = PrecisionModel::unit(d.n_params(), d.n_obs());
    VectorXd mu = dense_sym_eig(dense_q_normalized(v, model));
    if (effective_condition_number(mu, 2, 2) <= rep.bound) ++rep.passes;
  }
  return rep;
}

BoundCheckReport er_bound_check(int g1, int g2, double pi, int trials,
                                std::uint64_t seed0) {
  BoundCheckReport rep;
  rep.trials = trials;
  double e1 = 1.0 / std::sqrt(g1 * pi), e2 = 1.0 / std::sqrt(g2 * pi);
  double eps = 4.0 * (e1 + e2 + std::sqrt(e1 * e1 + e2 * e2));
  rep.applicable = eps < 1.0;
  rep.bound = rep.applicable ? (1.0 + eps) / (1.0 - eps)
                             : std::numeric_limits<double>::infinity();
  if (!rep.applicable) return rep;
  for (int t = 0; t < trials; ++t) {
    FactorDesign d = gen_er_bipartite(g1, g2, pi, seed0 + t);
    SparseMat v = build_design_matrix(d);
    PrecisionModel model = PrecisionModel::unit(d.n_params(), d.n_obs());
    VectorXd mu = dense_sym_eig(dense_q_normalized(v, model));
    if (effective_condition_number(mu, 2, 2) <= rep.bound) ++rep.passes;
  }
  return rep;
}

void write_spectrum_histogram(const VectorXd& eigs, int bins, std::ostream& os) {
  if (eigs.size() == 0 || bins < 1)
    throw std::invalid_argument("write_spectrum_histogram: empty input");
  double lo = eigs.minCoeff(), hi = eigs.maxCoeff();
  double width = (hi - lo) / bins;
  if (width <= 0.0) width = 1.0;  // degenerate spectrum: one occupied bin
  std::vector<std::int64_t> count(bins, 0);
  for (int j = 0; j < eigs.size(); ++j) {
    int b = static_cast<int>((eigs[j] - lo) / width);
    count[std::min(b, bins - 1)] += 1;
  }
  os << "bin_lo,bin_hi,count\n";
  char buf[96];
  for (int b = 0; b < bins; ++b) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%lld\n", lo + b * width,
                  lo + (b + 1) * width, static_cast<long long>(count[b]));
    os << buf;
  }
}

}  // namespace crossed
