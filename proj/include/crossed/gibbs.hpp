#pragma once

// Blocked Gibbs sampler for crossed-effects generalized linear mixed models:
// a joint Gaussian draw of all coefficients (factor- or solver-based),
// Polya-Gamma auxiliary draws for the logistic likelihood, and Wishart draws
// of the per-factor precision blocks.

#include "crossed/cg.hpp"
#include "crossed/design.hpp"
#include "crossed/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace crossed {

// One exact draw from the Polya-Gamma distribution PG(b, c), b >= 1 integer,
// as the sum of b independent PG(1, c) draws.  Each PG(1, c) draw uses the
// alternating-series accept/reject method on a two-piece proposal (truncated
// inverse-Gaussian body, exponential tail, crossover at 0.64).  A run that
// burns 10^4 proposals without accepting raises NumericBreakdown.
double sample_polya_gamma(int b, double c, Rng& rng);

// Wishart draw with `dof` degrees of freedom and expectation dof * scale, by
// Bartlett decomposition: W = L A A' L' with L the Cholesky factor of `scale`
// and A lower triangular (chi diagonal, standard-normal subdiagonal).
// Requires dof > dim - 1 and an SPD scale.
MatrixXd sample_wishart(double dof, const MatrixXd& scale, Rng& rng);

enum class Likelihood { kGaussian, kBinomialLogit };
enum class ThetaSampler { kCholesky, kCg };
enum class FixedPrior { kNormal, kFlat };

// Per-factor Wishart prior W(alpha, phi^{-1}); alpha > dim - 1 keeps it
// proper.  Defaults: alpha = (dim - 1) + 1/10, phi = (1/10) I, so that a
// one-dimensional intercept block gets W(1/10, 10) with prior mean 1 and
// wider blocks stay proper.
struct FactorPrior {
  double alpha = 0.0;
  MatrixXd phi;
};
FactorPrior default_factor_prior(int dim);

struct GLMMSpec {
  FactorDesign design;
  Likelihood likelihood = Likelihood::kGaussian;
  double tau = 1.0;  // Gaussian observation precision (known, not updated)
  VectorXd y;        // responses, length N
  // Binomial trial counts n_i >= 1; ignored for the Gaussian likelihood.
  std::vector<int> trials;
  // One prior per factor; empty means default_factor_prior for every factor.
  std::vector<FactorPrior> priors;
  FixedPrior fixed_prior = FixedPrior::kNormal;
  VectorXd fixed_mean;            // empty means zero
  double fixed_precision = 0.1;   // normal-prior precision on the fixed block
};

// Shape and propriety checks; throws std::invalid_argument.
void validate_spec(const GLMMSpec& spec);

struct GibbsState {
  VectorXd theta;             // length p
  VectorXd omega;             // length N; latent weights, binomial only
  std::vector<MatrixXd> t_k;  // per-factor precision block, D_k x D_k, SPD
  // Linear-term responses for the coefficient update: y_i - n_i/2 for the
  // binomial likelihood, tau * y_i for the Gaussian one.
  VectorXd kappa;
  int sweep = 0;
};

// theta = 0, omega = n_i / 4, T_k = I.
GibbsState init_state(const GLMMSpec& spec);

// The three independent randomness streams of a chain.  Keeping them apart
// means swapping the coefficient sampler leaves the auxiliary and precision
// draws untouched, so such chains are comparable draw for draw.
struct ChainRngs {
  Rng theta, omega, prec;
};
ChainRngs chain_rngs(std::uint64_t seed);

struct SweepOptions {
  ThetaSampler sampler = ThetaSampler::kCholesky;
  double cg_tol = 1e-8;
  int cg_maxit = 2000;
  bool update_precisions = true;  // false pins T_k (conjugate-check mode)
  // Optional precomputed elimination order for the factor-based sampler; the
  // support of the joint precision never changes across sweeps, so chains
  // compute it once.
  std::vector<int> chol_order;
};

// One full sweep, updating `state` in place in the order: coefficients,
// auxiliary weights (binomial only), factor precisions.  Returns the solver
// report when the coefficient draw ran through CG.  A flat fixed-effect prior
// can make the joint precision singular; that surfaces as the factorization's
// non-positive-pivot error naming the offending column.
std::optional<CGReport> gibbs_sweep(const GLMMSpec& spec, GibbsState& state,
                                    const SweepOptions& opt, ChainRngs& rngs);

struct ChainSummary {
  int sweeps = 0;
  int burnin = 0;
  // Per post-burn-in sweep; iteration entries are empty for the factor-based
  // coefficient sampler.
  std::vector<int> cg_iterations;
  std::vector<FlopCount> theta_flops;
  double mean_cg_iterations = 0.0;
  VectorXd theta_mean, theta_var;  // post-burn-in moments
  std::vector<MatrixXd> tk_mean;
};

// Runs `sweeps` full sweeps from init_state and summarizes the last
// sweeps - burnin of them.  Deterministic in `seed`.  When `trace` is given,
// writes one CSV row per sweep: sweep, cg_iterations, cg_flops, per-factor
// coefficient-block means, per-factor precision traces, fixed-block mean.
ChainSummary run_chain(const GLMMSpec& spec, int sweeps, int burnin,
                       const SweepOptions& opt, std::uint64_t seed,
                       std::ostream* trace = nullptr);

}  // namespace crossed
