#pragma once

// Conjugate-gradient solvers with exact flop accounting, and the
// perturbation-optimization sampler that draws from N(Q^{-1}m, Q^{-1}) by
// solving Q*theta = m + z with z ~ N(0, Q), applying Q matrix-free.

#include "crossed/design.hpp"
#include "crossed/rng.hpp"
#include "crossed/sparse.hpp"

#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

namespace crossed {

struct CGReport {
  int iterations = 0;
  // Relative residual per step, starting at 1.0 for x0 = 0; length
  // iterations + 1.
  std::vector<double> residual_history;
  bool converged = false;
  FlopCount flops = 0;
  double tolerance = 0.0;
};

// Symmetric operator with an explicit stored-entry count; one application is
// charged 2*nnz flops in solver reports.
struct SymOp {
  std::function<VectorXd(const VectorXd&)> apply;
  std::int64_t nnz = 0;
};

SymOp sparse_op(const SparseMat& a);

// Preconditioner: the action r -> M^{-1} r plus its per-application flop
// charge (p for a diagonal, two triangular solves for an incomplete factor).
struct Preconditioner {
  std::function<VectorXd(const VectorXd&)> apply;
  FlopCount apply_flops = 0;
};

Preconditioner identity_preconditioner();
Preconditioner jacobi_preconditioner(const VectorXd& diag);
Preconditioner jacobi_preconditioner(const SparseMat& a);
// M = L L' for a (possibly incomplete) lower-triangular factor L.
Preconditioner ic_preconditioner(const SparseMat& l);

// Called with (k, x_k) after every iteration, starting at (0, x0).
using IterateObserver = std::function<void(int, const VectorXd&)>;

// Plain CG from x0 = 0, stopping when ||r_k|| / ||b|| < tol.  Reported flops
// are iterations * (4p + 2*nnz).  Non-finite iterates raise NumericBreakdown.
std::pair<VectorXd, CGReport> cg_solve(const SymOp& a, const VectorXd& b,
                                       double tol = 1e-8, int maxit = 1000,
                                       const IterateObserver& on_iterate = {});

// Preconditioned CG; same stopping rule on the unpreconditioned residual, so
// minv = identity reproduces cg_solve step for step.  Adds
// iterations * minv.apply_flops to the flop count.
std::pair<VectorXd, CGReport> pcg_solve(const SymOp& a, const Preconditioner& minv,
                                        const VectorXd& b, double tol = 1e-8,
                                        int maxit = 1000,
                                        const IterateObserver& on_iterate = {});

// Matrix-free x -> T x + tau * V'(omega .* (V x)); nnz is the support size of
// the assembled precision (diagonal included), without forming it.
SymOp precision_op(const SparseMat& v, const PrecisionModel& model);
VectorXd precision_diagonal(const SparseMat& v, const PrecisionModel& model);

// One draw from N(Q^{-1}m, Q^{-1}) by Jacobi-preconditioned CG on
// Q*theta = m + z.  The law is exact up to the solver tolerance.
std::pair<VectorXd, CGReport> cg_sample(const SparseMat& v, const PrecisionModel& model,
                                        const VectorXd& m, double tol, Rng& rng,
                                        int maxit = 1000);

// Estimated condition number implied by the observed residual decay: fits a
// geometric rate rho to the history (entries above tolerance) and inverts
// kappa = ((1+rho)/(1-rho))^2.  A diagnostic estimate, not the true kappa:
// actual decay is superlinear once extreme eigenvalues are resolved, so this
// tends to under-read on small spectra.  Exact termination returns 1.
double effective_cn_from_cg(const CGReport& report);

void write_cg_report(const CGReport& report, std::ostream& os);

}  // namespace crossed
