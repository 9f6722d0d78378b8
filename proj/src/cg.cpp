#include "crossed/cg.hpp"

#include "crossed/cholesky.hpp"
#include "crossed/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace crossed {

SymOp sparse_op(const SparseMat& a) {
  if (a.rows != a.cols) throw std::invalid_argument("sparse_op: matrix not square");
  return {[a](const VectorXd& x) { return spmv(a, x); }, a.nnz()};
}

Preconditioner identity_preconditioner() {
  return {[](const VectorXd& r) { return r; }, 0};
}

Preconditioner jacobi_preconditioner(const VectorXd& diag) {
  for (int j = 0; j < diag.size(); ++j)
    if (!(diag[j] > 0.0))
      throw SingularPreconditioner("jacobi preconditioner: non-positive diagonal");
  VectorXd inv = diag.cwiseInverse();
  return {[inv](const VectorXd& r) { return VectorXd(inv.cwiseProduct(r)); },
          static_cast<FlopCount>(diag.size())};
}

Preconditioner jacobi_preconditioner(const SparseMat& a) {
  return jacobi_preconditioner(sparse_diagonal(a));
}

Preconditioner ic_preconditioner(const SparseMat& l) {
  if (l.rows != l.cols) throw std::invalid_argument("ic_preconditioner: factor not square");
  FlopCount per_solve = l.rows + 2 * (l.nnz() - l.rows);
  return {[l](const VectorXd& r) { return tri_solve(l, tri_solve(l, r, false), true); },
          2 * per_solve};
}

std::pair<VectorXd, CGReport> pcg_solve(const SymOp& a, const Preconditioner& minv,
                                        const VectorXd& b, double tol, int maxit,
                                        const IterateObserver& on_iterate) {
  if (!(tol > 0.0)) throw std::invalid_argument("pcg_solve: tolerance must be positive");
  const int p = static_cast<int>(b.size());
  CGReport report;
  report.tolerance = tol;

  VectorXd x = VectorXd::Zero(p);
  const double norm_b = b.norm();
  if (norm_b == 0.0) {
    report.residual_history = {0.0};
    report.converged = true;
    return {x, report};
  }

  VectorXd r = b;
  VectorXd z = minv.apply(r);
  VectorXd d = z;
  double rz = r.dot(z);
  report.residual_history.push_back(1.0);
  if (on_iterate) on_iterate(0, x);

  for (int k = 1; k <= maxit; ++k) {
    VectorXd q = a.apply(d);
    double dq = d.dot(q);
    double alpha = rz / dq;
    x += alpha * d;
    r -= alpha * q;
    double rel = r.norm() / norm_b;
    if (!std::isfinite(rel) || !std::isfinite(alpha))
      throw NumericBreakdown("pcg_solve: non-finite iterate at step " + std::to_string(k));
    report.iterations = k;
    report.residual_history.push_back(rel);
    if (on_iterate) on_iterate(k, x);
    if (rel < tol) {
      report.converged = true;
      break;
    }
    z = minv.apply(r);
    double rz_new = r.dot(z);
    d = z + (rz_new / rz) * d;
    rz = rz_new;
  }
  report.flops =
      static_cast<FlopCount>(report.iterations) * (4 * p + 2 * a.nnz + minv.apply_flops);
  return {x, report};
}

std::pair<VectorXd, CGReport> cg_solve(const SymOp& a, const VectorXd& b, double tol,
                                       int maxit, const IterateObserver& on_iterate) {
  return pcg_solve(a, identity_preconditioner(), b, tol, maxit, on_iterate);
}

SymOp precision_op(const SparseMat& v, const PrecisionModel& model) {
  if (model.t.size() != v.cols || model.omega.size() != v.rows)
    throw std::invalid_argument("precision_op: dimension mismatch");
  if (!(model.tau > 0.0)) throw std::invalid_argument("precision_op: tau must be positive");
  auto apply = [v, t = model.t, tau = model.tau, omega = model.omega](const VectorXd& x) {
    VectorXd vx = spmv(v, x);
    vx.array() *= omega.array();
    VectorXd qx = t.cwiseProduct(x);
    // accumulate tau * V' vx row by row (transposed apply on CSR)
    for (int i = 0; i < v.rows; ++i)
      for (int k = v.row_ptr[i]; k < v.row_ptr[i + 1]; ++k)
        qx[v.col_ind[k]] += tau * v.val[k] * vx[i];
    return qx;
  };
  return {apply, precision_support_nnz(v)};
}

VectorXd precision_diagonal(const SparseMat& v, const PrecisionModel& model) {
  if (model.t.size() != v.cols || model.omega.size() != v.rows)
    throw std::invalid_argument("precision_diagonal: dimension mismatch");
  VectorXd diag = model.t;
  for (int i = 0; i < v.rows; ++i)
    for (int k = v.row_ptr[i]; k < v.row_ptr[i + 1]; ++k)
      diag[v.col_ind[k]] += model.tau * model.omega[i] * v.val[k] * v.val[k];
  return diag;
}

std::pair<VectorXd, CGReport> cg_sample(const SparseMat& v, const PrecisionModel& model,
                                        const VectorXd& m, double tol, Rng& rng,
                                        int maxit) {
  if (m.size() != v.cols) throw std::invalid_argument("cg_sample: mean-vector size mismatch");
  VectorXd z = sample_prior_precision_gaussian(v, model, rng);
  SymOp q = precision_op(v, model);
  Preconditioner pre = jacobi_preconditioner(precision_diagonal(v, model));
  return pcg_solve(q, pre, m + z, tol, maxit);
}

double effective_cn_from_cg(const CGReport& report) {
  const auto& h = report.residual_history;
  if (!h.empty() && h.back() == 0.0) return 1.0;  // exact termination
  if (report.iterations < 3)
    throw std::invalid_argument("effective_cn_from_cg: need at least 3 iterations");
  // least-squares slope of log h_k on k, over entries still above tolerance
  double sk = 0, sy = 0, skk = 0, sky = 0;
  int n = 0;
  for (int k = 0; k < static_cast<int>(h.size()); ++k) {
    if (!(h[k] > report.tolerance)) continue;
    double y = std::log(h[k]);
    sk += k;
    sy += y;
    skk += static_cast<double>(k) * k;
    sky += k * y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("effective_cn_from_cg: too few usable residuals");
  double slope = (n * sky - sk * sy) / (n * skk - sk * sk);
  double rho = std::exp(slope);
  if (rho >= 1.0) return std::numeric_limits<double>::infinity();
  double root = (1.0 + rho) / (1.0 - rho);
  return root * root;
}

void write_cg_report(const CGReport& report, std::ostream& os) {
  nlohmann::json j;
  j["iterations"] = report.iterations;
  j["residual_history"] = report.residual_history;
  j["converged"] = report.converged;
  j["flops"] = report.flops;
  j["tolerance"] = report.tolerance;
  os << j.dump(2) << "\n";
}

}  // namespace crossed
