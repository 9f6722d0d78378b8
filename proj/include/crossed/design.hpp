#pragma once

// Categorical observation designs for crossed-random-effects models and the
// assembly of the posterior precision Q = Diag(T) + tau * V' Diag(omega) V.
//
// Parameter layout: one block of levels*slope_dim coordinates per factor, in
// factor order, and the shared fixed-effect block LAST.  Keeping the heavily
// connected fixed effects at the end is what keeps sparse factorizations of Q
// from filling in at the first elimination step.

#include "crossed/rng.hpp"
#include "crossed/sparse.hpp"

#include <string>
#include <vector>

namespace crossed {

struct Factor {
  int levels = 0;
  int slope_dim = 1;  // 1 = random intercept; d > 1 = slope block of width d
};

struct FactorDesign {
  std::vector<Factor> factors;
  // assignment[i][k] in 1..levels(k): the level of factor k at observation i.
  std::vector<std::vector<int>> assignment;
  // covariates[k]: N x slope_dim(k); empty for intercept-only factors.
  std::vector<MatrixXd> covariates;
  int fixed_dim = 1;
  MatrixXd fixed_covariates;  // N x fixed_dim; empty means the all-ones intercept

  int n_factors() const { return static_cast<int>(factors.size()); }
  int n_obs() const { return static_cast<int>(assignment.size()); }
  int n_params() const;
  int block_offset(int k) const;  // first column of factor k's block
  int fixed_offset() const;       // first column of the fixed block (placed last)
  bool intercept_only() const;
};

// Checks shapes, level ranges, and that every level of every factor is
// observed at least once; throws std::invalid_argument otherwise.
void validate_design(const FactorDesign& d);

// N x p sparse design matrix; row i has sum_k slope_dim(k) + fixed_dim
// structural non-zeros.
SparseMat build_design_matrix(const FactorDesign& d);

// The Gaussian model behind Q = Diag(t) + tau * V' Diag(omega) V.  omega
// holds per-observation weights: all ones for a plain Gaussian likelihood,
// or latent augmentation weights that change every sampler sweep.
struct PrecisionModel {
  VectorXd t;      // diagonal prior precision, length p
  double tau = 1.0;
  VectorXd omega;  // per-observation weights, length N
  VectorXd m0;     // prior mean; empty means zero

  static PrecisionModel unit(int p, int n) {
    return {VectorXd::Ones(p), 1.0, VectorXd::Ones(n), VectorXd()};
  }
};

// Q = Diag(t) + tau * V' Diag(omega) V, assembled in O(N) triplets
// (duplicates summed).  t has length p, omega length N, tau > 0.
SparseMat assemble_precision(const SparseMat& v, const VectorXd& t, double tau,
                             const VectorXd& omega);
SparseMat assemble_precision(const SparseMat& v, const PrecisionModel& model);
// Same, with additional symmetric off-diagonal prior-precision entries (each
// unordered pair listed once with row < col; the mirror is emitted here), for
// priors that couple coordinates within a slope block.
SparseMat assemble_precision(const SparseMat& v, const PrecisionModel& model,
                             const std::vector<Triplet>& prior_offdiag);

// nnz of Diag(t) + V'V by support only (no values); the support of Q is
// design-determined, so this is computed once even when omega changes every
// Gibbs sweep.
std::int64_t precision_support_nnz(const SparseMat& v);

// One draw with covariance exactly Diag(t) + tau * V' Diag(omega) V in
// O(N + p): z = t^{1/2}.*zeta + sqrt(tau) * V'(omega^{1/2}.*eta).
VectorXd sample_prior_precision_gaussian(const SparseMat& v, const VectorXd& t,
                                         double tau, const VectorXd& omega, Rng& rng);
VectorXd sample_prior_precision_gaussian(const SparseMat& v, const PrecisionModel& model,
                                         Rng& rng);

// Columnar text files.  Assignments: header "K G_1 .. G_K N" then one row of
// K level indices per observation.  Covariates travel in a parallel file:
// header "K D_1 .. D_K D_0 N" then one row of sum_k D_k + D_0 values per
// observation (factor blocks in order, fixed block last).  Parse errors carry
// line numbers.
void write_design(const FactorDesign& d, const std::string& path);
FactorDesign read_design(const std::string& path);
void write_covariates(const FactorDesign& d, const std::string& path);
void read_covariates(FactorDesign& d, const std::string& path);

}  // namespace crossed
