#include "crossed/gibbs.hpp"

#include "crossed/cholesky.hpp"
#include "crossed/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace crossed {

namespace {

FactorPrior prior_for(const GLMMSpec& spec, int k) {
  if (!spec.priors.empty()) return spec.priors[k];
  return default_factor_prior(spec.design.factors[k].slope_dim);
}

// Diagonal + slope-coupling representation of the joint prior precision,
// together with the likelihood weights of the current sweep.
struct JointModel {
  PrecisionModel model;
  std::vector<Triplet> offdiag;  // within-block couplings, row < col
};

JointModel joint_model(const GLMMSpec& spec, const GibbsState& st) {
  const FactorDesign& d = spec.design;
  const int p = d.n_params();
  JointModel jm;
  jm.model.t = VectorXd::Zero(p);
  for (int k = 0; k < d.n_factors(); ++k) {
    const int dim = d.factors[k].slope_dim;
    const MatrixXd& tk = st.t_k[k];
    for (int g = 0; g < d.factors[k].levels; ++g) {
      int j0 = d.block_offset(k) + g * dim;
      for (int a = 0; a < dim; ++a) {
        jm.model.t[j0 + a] = tk(a, a);
        for (int b = a + 1; b < dim; ++b)
          if (tk(a, b) != 0.0) jm.offdiag.push_back({j0 + a, j0 + b, tk(a, b)});
      }
    }
  }
  double t0 = spec.fixed_prior == FixedPrior::kFlat ? 0.0 : spec.fixed_precision;
  for (int j = d.fixed_offset(); j < p; ++j) jm.model.t[j] = t0;
  if (spec.likelihood == Likelihood::kGaussian) {
    jm.model.tau = spec.tau;
    jm.model.omega = VectorXd::Ones(d.n_obs());
  } else {
    jm.model.tau = 1.0;
    jm.model.omega = st.omega;
  }
  return jm;
}

// b = T m0 + V' kappa; prior means are zero everywhere except (optionally)
// the fixed block.
VectorXd linear_term(const GLMMSpec& spec, const GibbsState& st, const SparseMat& v) {
  VectorXd b = VectorXd::Zero(v.cols);
  if (spec.fixed_prior == FixedPrior::kNormal && spec.fixed_mean.size())
    for (int a = 0; a < spec.design.fixed_dim; ++a)
      b[spec.design.fixed_offset() + a] = spec.fixed_precision * spec.fixed_mean[a];
  for (int i = 0; i < v.rows; ++i)
    for (int ka = v.row_ptr[i]; ka < v.row_ptr[i + 1]; ++ka)
      b[v.col_ind[ka]] += v.val[ka] * st.kappa[i];
  return b;
}

SparseMat assemble_joint(const SparseMat& v, const JointModel& jm) {
  return jm.offdiag.empty() ? assemble_precision(v, jm.model)
                            : assemble_precision(v, jm.model, jm.offdiag);
}

// One draw with covariance exactly Q = T_joint + tau V' Omega V, summing
// independent pieces: per-level factor draws through the Cholesky factor of
// each T_k, a diagonal fixed-block draw, and the weighted likelihood part.
// Draw order (factors in order, levels ascending, fixed block, observations
// ascending) is part of the determinism contract.
VectorXd joint_prior_draw(const GLMMSpec& spec, const GibbsState& st,
                          const SparseMat& v, const JointModel& jm, Rng& rng) {
  const FactorDesign& d = spec.design;
  VectorXd z = VectorXd::Zero(v.cols);
  for (int k = 0; k < d.n_factors(); ++k) {
    const int dim = d.factors[k].slope_dim;
    if (dim == 1) {
      double s = std::sqrt(st.t_k[k](0, 0));
      for (int g = 0; g < d.factors[k].levels; ++g)
        z[d.block_offset(k) + g] = s * draw_normal(rng);
      continue;
    }
    Eigen::LLT<MatrixXd> llt(st.t_k[k]);
    if (llt.info() != Eigen::Success)
      throw NumericBreakdown("gibbs_sweep: factor precision not positive definite");
    MatrixXd lk = llt.matrixL();
    VectorXd xi(dim);
    for (int g = 0; g < d.factors[k].levels; ++g) {
      for (int a = 0; a < dim; ++a) xi[a] = draw_normal(rng);
      z.segment(d.block_offset(k) + g * dim, dim) = lk * xi;
    }
  }
  if (spec.fixed_prior == FixedPrior::kNormal) {
    double s = std::sqrt(spec.fixed_precision);
    for (int a = 0; a < d.fixed_dim; ++a)
      z[d.fixed_offset() + a] = s * draw_normal(rng);
  }
  double st_tau = std::sqrt(jm.model.tau);
  for (int i = 0; i < v.rows; ++i) {
    double e = st_tau * std::sqrt(jm.model.omega[i]) * draw_normal(rng);
    for (int ka = v.row_ptr[i]; ka < v.row_ptr[i + 1]; ++ka)
      z[v.col_ind[ka]] += v.val[ka] * e;
  }
  return z;
}

std::optional<CGReport> update_theta(const GLMMSpec& spec, GibbsState& st,
                                     const SweepOptions& opt, Rng& rng,
                                     const SparseMat& v, const JointModel& jm) {
  VectorXd b = linear_term(spec, st, v);
  if (opt.sampler == ThetaSampler::kCholesky) {
    SparseMat q = assemble_joint(v, jm);
    std::vector<int> order = opt.chol_order;
    if (order.empty()) {
      std::vector<int> pin;
      for (int j = spec.design.fixed_offset(); j < v.cols; ++j) pin.push_back(j);
      order = min_degree_order(ci_graph(q), pin);
    }
    try {
      CholFactor f = numeric_cholesky(q, order);
      st.theta = chol_sample(f, b, rng);
    } catch (const NotPositiveDefinite& e) {
      if (spec.fixed_prior == FixedPrior::kFlat)
        throw NotPositiveDefinite(
            e.column, "gibbs_sweep: joint precision is singular under the flat "
                      "fixed-effect prior; null direction hits column " +
                          std::to_string(e.column));
      throw;
    }
    return std::nullopt;
  }
  VectorXd rhs = b + joint_prior_draw(spec, st, v, jm, rng);
  SymOp op;
  Preconditioner minv;
  if (jm.offdiag.empty()) {
    op = precision_op(v, jm.model);
    minv = jacobi_preconditioner(precision_diagonal(v, jm.model));
  } else {
    SparseMat q = assemble_joint(v, jm);
    minv = jacobi_preconditioner(q);
    op = sparse_op(q);  // sparse_op copies, so q may go out of scope
  }
  auto [x, report] = pcg_solve(op, minv, rhs, opt.cg_tol, opt.cg_maxit);
  st.theta = std::move(x);
  return report;
}

}  // namespace

FactorPrior default_factor_prior(int dim) {
  return {(dim - 1) + 0.1, 0.1 * MatrixXd::Identity(dim, dim)};
}

MatrixXd sample_wishart(double dof, const MatrixXd& scale, Rng& rng) {
  const int d = static_cast<int>(scale.rows());
  if (scale.cols() != d || d == 0)
    throw std::invalid_argument("sample_wishart: scale must be square and non-empty");
  if (!(dof > d - 1))
    throw std::invalid_argument("sample_wishart: need dof > dim - 1");
  Eigen::LLT<MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("sample_wishart: scale not positive definite");
  MatrixXd a = MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(draw_chi_squared(rng, dof - i));
    for (int j = 0; j < i; ++j) a(i, j) = draw_normal(rng);
  }
  MatrixXd la = MatrixXd(llt.matrixL()) * a;
  MatrixXd w = la * la.transpose();
  // The product fills both triangles with separately rounded sums; mirror the
  // lower one so the draw is symmetric bit for bit.
  for (int j = 1; j < d; ++j)
    for (int i = 0; i < j; ++i) w(i, j) = w(j, i);
  return w;
}

void validate_spec(const GLMMSpec& spec) {
  validate_design(spec.design);
  const int n = spec.design.n_obs();
  if (spec.y.size() != n) throw std::invalid_argument("glmm: y length must equal N");
  if (spec.likelihood == Likelihood::kGaussian) {
    if (!(spec.tau > 0.0)) throw std::invalid_argument("glmm: tau must be > 0");
  } else {
    if (static_cast<int>(spec.trials.size()) != n)
      throw std::invalid_argument("glmm: trials length must equal N");
    for (int i = 0; i < n; ++i) {
      if (spec.trials[i] < 1) throw std::invalid_argument("glmm: trials must be >= 1");
      if (spec.y[i] < 0.0 || spec.y[i] > spec.trials[i] ||
          spec.y[i] != std::floor(spec.y[i]))
        throw std::invalid_argument("glmm: binomial y must be integers in [0, n_i]");
    }
  }
  if (!spec.priors.empty()) {
    if (static_cast<int>(spec.priors.size()) != spec.design.n_factors())
      throw std::invalid_argument("glmm: need one prior per factor");
    for (int k = 0; k < spec.design.n_factors(); ++k) {
      const int dim = spec.design.factors[k].slope_dim;
      const FactorPrior& pr = spec.priors[k];
      if (pr.phi.rows() != dim || pr.phi.cols() != dim)
        throw std::invalid_argument("glmm: prior rate matrix has wrong shape");
      if (!(pr.alpha > dim - 1))
        throw std::invalid_argument("glmm: Wishart prior needs alpha > dim - 1");
      if (Eigen::LLT<MatrixXd>(pr.phi).info() != Eigen::Success)
        throw std::invalid_argument("glmm: prior rate matrix not positive definite");
    }
  }
  if (spec.fixed_prior == FixedPrior::kNormal && !(spec.fixed_precision > 0.0))
    throw std::invalid_argument("glmm: normal fixed prior needs precision > 0");
  if (spec.fixed_mean.size() && spec.fixed_mean.size() != spec.design.fixed_dim)
    throw std::invalid_argument("glmm: fixed prior mean has wrong length");
}

GibbsState init_state(const GLMMSpec& spec) {
  validate_spec(spec);
  GibbsState st;
  const int n = spec.design.n_obs();
  st.theta = VectorXd::Zero(spec.design.n_params());
  if (spec.likelihood == Likelihood::kBinomialLogit) {
    st.omega.resize(n);
    st.kappa.resize(n);
    for (int i = 0; i < n; ++i) {
      st.omega[i] = spec.trials[i] / 4.0;
      st.kappa[i] = spec.y[i] - spec.trials[i] / 2.0;
    }
  } else {
    st.omega = VectorXd::Ones(n);
    st.kappa = spec.tau * spec.y;
  }
  for (int k = 0; k < spec.design.n_factors(); ++k)
    st.t_k.push_back(MatrixXd::Identity(spec.design.factors[k].slope_dim,
                                        spec.design.factors[k].slope_dim));
  return st;
}

ChainRngs chain_rngs(std::uint64_t seed) {
  return {make_rng(seed, 0), make_rng(seed, 1), make_rng(seed, 2)};
}

std::optional<CGReport> gibbs_sweep(const GLMMSpec& spec, GibbsState& state,
                                    const SweepOptions& opt, ChainRngs& rngs) {
  const FactorDesign& d = spec.design;
  SparseMat v = build_design_matrix(d);
  JointModel jm = joint_model(spec, state);
  std::optional<CGReport> report = update_theta(spec, state, opt, rngs.theta, v, jm);
  if (spec.likelihood == Likelihood::kBinomialLogit) {
    VectorXd eta = spmv(v, state.theta);
    for (int i = 0; i < d.n_obs(); ++i)
      state.omega[i] = sample_polya_gamma(spec.trials[i], eta[i], rngs.omega);
  }
  if (opt.update_precisions) {
    for (int k = 0; k < d.n_factors(); ++k) {
      const int dim = d.factors[k].slope_dim;
      const FactorPrior pr = prior_for(spec, k);
      MatrixXd s = pr.phi;
      for (int g = 0; g < d.factors[k].levels; ++g) {
        VectorXd th = state.theta.segment(d.block_offset(k) + g * dim, dim);
        s += th * th.transpose();
      }
      MatrixXd scale = s.llt().solve(MatrixXd::Identity(dim, dim));
      // Materialize the sum first: assigning a transposed expression back
      // onto itself reads entries the assignment already overwrote.
      scale = 0.5 * (scale + scale.transpose()).eval();
      state.t_k[k] = sample_wishart(pr.alpha + d.factors[k].levels, scale, rngs.prec);
    }
  }
  ++state.sweep;
  return report;
}

ChainSummary run_chain(const GLMMSpec& spec, int sweeps, int burnin,
                       const SweepOptions& opt, std::uint64_t seed,
                       std::ostream* trace) {
  if (sweeps <= 0) throw std::invalid_argument("run_chain: need sweeps > 0");
  if (burnin < 0 || burnin >= sweeps)
    throw std::invalid_argument("run_chain: need 0 <= burnin < sweeps");
  GibbsState st = init_state(spec);
  ChainRngs rngs = chain_rngs(seed);
  const FactorDesign& d = spec.design;
  const int p = d.n_params();

  SweepOptions local = opt;
  if (local.sampler == ThetaSampler::kCholesky && local.chol_order.empty()) {
    // the support of Q is design-determined, so one order serves every sweep
    SparseMat q = assemble_joint(build_design_matrix(d), joint_model(spec, st));
    std::vector<int> pin;
    for (int j = d.fixed_offset(); j < p; ++j) pin.push_back(j);
    local.chol_order = min_degree_order(ci_graph(q), pin);
  }

  if (trace) {
    *trace << "sweep,cg_iterations,cg_flops";
    for (int k = 0; k < d.n_factors(); ++k) *trace << ",theta_mean_f" << k;
    for (int k = 0; k < d.n_factors(); ++k) *trace << ",tk_trace_f" << k;
    *trace << ",fixed_mean\n";
  }

  ChainSummary sum;
  sum.sweeps = sweeps;
  sum.burnin = burnin;
  VectorXd acc = VectorXd::Zero(p), acc2 = VectorXd::Zero(p);
  std::vector<MatrixXd> tk_acc;
  for (int k = 0; k < d.n_factors(); ++k)
    tk_acc.push_back(MatrixXd::Zero(d.factors[k].slope_dim, d.factors[k].slope_dim));

  for (int s = 1; s <= sweeps; ++s) {
    std::optional<CGReport> rep = gibbs_sweep(spec, st, local, rngs);
    if (trace) {
      *trace << s << ',' << (rep ? rep->iterations : 0) << ','
             << (rep ? rep->flops : 0);
      for (int k = 0; k < d.n_factors(); ++k) {
        int dim = d.factors[k].slope_dim;
        *trace << ','
               << st.theta.segment(d.block_offset(k), d.factors[k].levels * dim).mean();
      }
      for (int k = 0; k < d.n_factors(); ++k) *trace << ',' << st.t_k[k].trace();
      *trace << ',' << st.theta.segment(d.fixed_offset(), d.fixed_dim).mean() << '\n';
    }
    if (s <= burnin) continue;
    if (rep) {
      sum.cg_iterations.push_back(rep->iterations);
      sum.theta_flops.push_back(rep->flops);
    }
    acc += st.theta;
    acc2 += st.theta.cwiseProduct(st.theta);
    for (int k = 0; k < d.n_factors(); ++k) tk_acc[k] += st.t_k[k];
  }

  const double kept = sweeps - burnin;
  sum.theta_mean = acc / kept;
  sum.theta_var =
      (acc2 / kept - sum.theta_mean.cwiseProduct(sum.theta_mean)).cwiseMax(0.0);
  for (MatrixXd& m : tk_acc) sum.tk_mean.push_back(m / kept);
  if (!sum.cg_iterations.empty()) {
    double tot = 0;
    for (int it : sum.cg_iterations) tot += it;
    sum.mean_cg_iterations = tot / static_cast<double>(sum.cg_iterations.size());
  }
  return sum;
}

}  // namespace crossed
