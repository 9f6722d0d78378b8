#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "crossed/cg.hpp"
#include "crossed/cholesky.hpp"
#include "crossed/design.hpp"
#include "crossed/errors.hpp"
#include "crossed/generators.hpp"

#include <Eigen/Dense>
#include <cmath>

using namespace crossed;

namespace {

SparseMat diag_mat(std::initializer_list<double> d) {
  std::vector<Triplet> e;
  int i = 0;
  for (double x : d) {
    e.push_back({i, i, x});
    ++i;
  }
  return sparse_from_triplets(i, i, std::move(e), true);
}

SparseMat empty_design(int p) { return sparse_from_triplets(0, p, {}, false); }

// Q from a two-factor random design with unit prior precision and weights.
struct DesignSystem {
  FactorDesign design;
  SparseMat v;
  PrecisionModel model;
  SparseMat q;
};

DesignSystem make_system(std::vector<int> g, double pi, std::uint64_t seed) {
  DesignSystem s;
  s.design = gen_mcar(static_cast<int>(g.size()), g, pi, seed);
  s.v = build_design_matrix(s.design);
  s.model = PrecisionModel::unit(s.design.n_params(), s.design.n_obs());
  s.q = assemble_precision(s.v, s.model);
  return s;
}

}  // namespace

TEST_CASE("plain conjugate gradients") {
  SUBCASE("identity converges in one step") {
    VectorXd b(3);
    b << 4, -1, 2;
    auto [x, rep] = cg_solve(sparse_op(sparse_identity(3)), b);
    CHECK(x.isApprox(b));
    CHECK(rep.iterations == 1);
    CHECK(rep.converged);
    CHECK(rep.residual_history.size() == 2);
  }
  SUBCASE("two distinct eigenvalues finish in two steps") {
    auto [x, rep] = cg_solve(sparse_op(diag_mat({1, 1, 3})), VectorXd::Ones(3), 1e-10);
    CHECK(rep.iterations <= 3);
    CHECK(rep.residual_history.back() < 1e-10);
  }
  SUBCASE("diagonal solve lands on the exact inverse") {
    auto [x, rep] = cg_solve(sparse_op(diag_mat({1, 2, 4})), VectorXd::Ones(3));
    CHECK(rep.iterations <= 3);
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(0.5));
    CHECK(x[2] == doctest::Approx(0.25));
  }
  SUBCASE("zero right-hand side returns zero without iterating") {
    auto [x, rep] = cg_solve(sparse_op(sparse_identity(2)), VectorXd::Zero(2));
    CHECK(x.isZero());
    CHECK(rep.iterations == 0);
    CHECK(rep.converged);
    CHECK(rep.residual_history == std::vector<double>{0.0});
  }
  SUBCASE("report invariants on a larger solve") {
    Rng rng = make_rng(3);
    DesignSystem s = make_system({15, 18}, 0.3, 12);
    VectorXd b(s.q.rows);
    for (int i = 0; i < b.size(); ++i) b[i] = draw_normal(rng);
    auto [x, rep] = cg_solve(sparse_op(s.q), b, 1e-8, 500);
    CHECK(rep.converged);
    CHECK(static_cast<int>(rep.residual_history.size()) == rep.iterations + 1);
    CHECK(rep.residual_history.front() == 1.0);
    CHECK(rep.residual_history.back() < 1e-8);
    CHECK((spmv(s.q, x) - b).norm() <= 1e-8 * b.norm() * 1.0001);
  }
  SUBCASE("flop count follows the per-iteration formula") {
    SparseMat a = diag_mat({1, 2, 4});
    auto [x, rep] = cg_solve(sparse_op(a), VectorXd::Ones(3));
    CHECK(rep.flops == rep.iterations * (4 * 3 + 2 * a.nnz()));
  }
  SUBCASE("maxit exhaustion reports non-convergence") {
    auto [x, rep] = cg_solve(sparse_op(diag_mat({1, 2, 4, 8, 16})), VectorXd::Ones(5),
                             1e-12, 2);
    CHECK(!rep.converged);
    CHECK(rep.iterations == 2);
  }
}

TEST_CASE("preconditioned conjugate gradients") {
  SUBCASE("perfect preconditioner solves in one step") {
    SparseMat a = diag_mat({1, 2, 4});
    auto [x, rep] =
        pcg_solve(sparse_op(a), jacobi_preconditioner(a), VectorXd::Ones(3));
    CHECK(rep.iterations == 1);
    CHECK(x[2] == doctest::Approx(0.25));
  }
  SUBCASE("identity preconditioner replays the plain solver bit for bit") {
    DesignSystem s = make_system({10, 12}, 0.4, 21);
    Rng rng = make_rng(4);
    VectorXd b(s.q.rows);
    for (int i = 0; i < b.size(); ++i) b[i] = draw_normal(rng);
    auto [x1, r1] = cg_solve(sparse_op(s.q), b);
    auto [x2, r2] = pcg_solve(sparse_op(s.q), identity_preconditioner(), b);
    REQUIRE(r1.residual_history.size() == r2.residual_history.size());
    for (size_t k = 0; k < r1.residual_history.size(); ++k)
      CHECK(std::abs(r1.residual_history[k] - r2.residual_history[k]) <= 1e-14);
    CHECK(r1.flops == r2.flops);
  }
  SUBCASE("jacobi adds exactly p flops per iteration") {
    SparseMat a = diag_mat({1, 2, 4});
    auto [x, rep] = pcg_solve(sparse_op(a), jacobi_preconditioner(a), VectorXd::Ones(3));
    CHECK(rep.flops == rep.iterations * (4 * 3 + 2 * a.nnz() + 3));
  }
  SUBCASE("diagonal scaling pays off on a lopsided random design") {
    DesignSystem s = make_system({100, 1000}, 0.365, 7);
    Rng rng = make_rng(5);
    VectorXd b(s.q.rows);
    for (int i = 0; i < b.size(); ++i) b[i] = draw_normal(rng);
    auto [xp, plain] = cg_solve(sparse_op(s.q), b, 1e-8, 2000);
    auto [xj, jac] =
        pcg_solve(sparse_op(s.q), jacobi_preconditioner(s.q), b, 1e-8, 2000);
    CHECK(plain.converged);
    CHECK(jac.converged);
    CHECK(jac.iterations <= plain.iterations);
  }
  SUBCASE("incomplete-factor preconditioner beats jacobi on a banded system") {
    std::vector<Triplet> e;
    int p = 40;
    for (int i = 0; i < p; ++i) {
      e.push_back({i, i, 4.0});
      if (i + 1 < p) {
        e.push_back({i, i + 1, -1.9});
        e.push_back({i + 1, i, -1.9});
      }
    }
    SparseMat a = sparse_from_triplets(p, p, std::move(e), true);
    VectorXd b = VectorXd::Ones(p);
    auto [xj, jac] = pcg_solve(sparse_op(a), jacobi_preconditioner(a), b);
    auto [xi, ic] = pcg_solve(sparse_op(a), ic_preconditioner(incomplete_cholesky(a)), b);
    CHECK(ic.converged);
    CHECK(ic.iterations <= jac.iterations);
    CHECK((xi - xj).norm() <= 1e-6 * xj.norm());
  }
  SUBCASE("singular diagonal is rejected") {
    CHECK_THROWS_AS(jacobi_preconditioner(diag_mat({1, 0, 2})), SingularPreconditioner);
  }
}

TEST_CASE("error-norm guarantees") {
  // Diagonal spectrum spread over [1, 10]: condition number known exactly.
  const int p = 30;
  std::vector<Triplet> e;
  for (int i = 0; i < p; ++i)
    e.push_back({i, i, 1.0 + 9.0 * i / (p - 1.0)});
  SparseMat a = sparse_from_triplets(p, p, std::move(e), true);
  MatrixXd ad = a.dense();
  Rng rng = make_rng(6);
  VectorXd b(p);
  for (int i = 0; i < p; ++i) b[i] = draw_normal(rng);
  VectorXd xstar = ad.ldlt().solve(b);
  auto a_norm = [&](const VectorXd& v) { return std::sqrt(v.dot(ad * v)); };

  std::vector<double> errs;
  auto observer = [&](int, const VectorXd& xk) { errs.push_back(a_norm(xk - xstar)); };
  cg_solve(sparse_op(a), b, 1e-12, 100, observer);

  SUBCASE("energy-norm error is monotone") {
    for (size_t k = 1; k < errs.size(); ++k) CHECK(errs[k] <= errs[k - 1] * (1 + 1e-12));
  }
  SUBCASE("geometric bound from the condition number") {
    const double kappa = 10.0;
    const double rate = (std::sqrt(kappa) - 1) / (std::sqrt(kappa) + 1);
    double bound = 2.0 * errs[0] * (1 + 1e-6);
    for (size_t k = 1; k < errs.size(); ++k) {
      bound *= rate;
      CHECK(errs[k] <= bound + 1e-13 * errs[0]);
    }
  }
}

TEST_CASE("finite termination with few distinct eigenvalues") {
  // Rotate Diag(1,1,1,5,5,9) by a fixed orthogonal matrix: 3 distinct values.
  const int p = 6;
  Rng rng = make_rng(44);
  MatrixXd g(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) g(i, j) = draw_normal(rng);
  MatrixXd u = Eigen::HouseholderQR<MatrixXd>(g).householderQ();
  VectorXd d(p);
  d << 1, 1, 1, 5, 5, 9;
  MatrixXd m = u * d.asDiagonal() * u.transpose();
  // Materialize the sum before assigning back: the temporary sees a + b and
  // b + a, which round identically, so the result is symmetric bit for bit.
  m = 0.5 * (m + m.transpose()).eval();
  SparseMat a = sparse_from_dense(m, true);
  auto [x, rep] = cg_solve(sparse_op(a), VectorXd::Ones(p), 1e-10, 100);
  CHECK(rep.iterations <= 3 + 2);
  CHECK(rep.residual_history.back() < 1e-10);
}

TEST_CASE("matrix-free precision application") {
  DesignSystem s = make_system({8, 9}, 0.35, 31);
  Rng rng = make_rng(9);
  SymOp op = precision_op(s.v, s.model);
  SUBCASE("agrees with the assembled matrix") {
    for (int trial = 0; trial < 5; ++trial) {
      VectorXd x(s.q.rows);
      for (int i = 0; i < x.size(); ++i) x[i] = draw_normal(rng);
      CHECK((op.apply(x) - spmv(s.q, x)).norm() <= 1e-12 * x.norm() * 10);
    }
  }
  SUBCASE("advertised support equals the assembled footprint") {
    CHECK(op.nnz == s.q.nnz());
  }
  SUBCASE("diagonal extraction matches") {
    CHECK((precision_diagonal(s.v, s.model) - sparse_diagonal(s.q)).norm() <= 1e-12);
  }
  SUBCASE("weighted application matches reassembly") {
    PrecisionModel m2 = s.model;
    for (int i = 0; i < m2.omega.size(); ++i) m2.omega[i] = 0.2 + draw_uniform(rng);
    m2.tau = 2.5;
    m2.t = VectorXd::Constant(s.q.rows, 0.7);
    SparseMat q2 = assemble_precision(s.v, m2);
    SymOp op2 = precision_op(s.v, m2);
    VectorXd x(s.q.rows);
    for (int i = 0; i < x.size(); ++i) x[i] = draw_normal(rng);
    CHECK((op2.apply(x) - spmv(q2, x)).norm() <= 1e-12 * x.norm() * 10);
  }
}

TEST_CASE("perturbation-optimization sampler") {
  SUBCASE("identity precision returns mean plus prior draw in one step") {
    int p = 4;
    PrecisionModel model = PrecisionModel::unit(p, 0);
    VectorXd m = VectorXd::Constant(p, 2.0);
    Rng rng = make_rng(12);
    auto [theta, rep] = cg_sample(empty_design(p), model, m, 1e-8, rng);
    CHECK(rep.iterations == 1);
    Rng replay = make_rng(12);
    VectorXd z = sample_prior_precision_gaussian(empty_design(p), model, replay);
    CHECK(theta == m + z);
  }
  SUBCASE("2x2 law matches the closed-form inverse") {
    // Q = [[2,1],[1,2]] from one shared observation; Q^{-1} = [[2,-1],[-1,2]]/3
    FactorDesign d;
    d.factors = {{1, 1}};
    d.assignment = {{1}};
    SparseMat v = build_design_matrix(d);
    PrecisionModel model = PrecisionModel::unit(2, 1);
    VectorXd m(2);
    m << 3, 3;
    Rng rng = make_rng(13);
    const int draws = 100000;
    VectorXd sum = VectorXd::Zero(2);
    double s11 = 0, s22 = 0, s12 = 0;
    for (int i = 0; i < draws; ++i) {
      auto [theta, rep] = cg_sample(v, model, m, 1e-10, rng);
      sum += theta;
      s11 += theta[0] * theta[0];
      s22 += theta[1] * theta[1];
      s12 += theta[0] * theta[1];
    }
    VectorXd mean = sum / draws;
    double v11 = s11 / draws - mean[0] * mean[0];
    double v22 = s22 / draws - mean[1] * mean[1];
    double v12 = s12 / draws - mean[0] * mean[1];
    double se_mean = std::sqrt(2.0 / 3.0 / draws);
    CHECK(std::abs(mean[0] - 1.0) <= 3 * se_mean);
    CHECK(std::abs(mean[1] - 1.0) <= 3 * se_mean);
    CHECK(std::abs(v11 - 2.0 / 3.0) <= 3 * std::sqrt(2.0) * (2.0 / 3.0) / std::sqrt(draws) * 3);
    CHECK(std::abs(v22 - 2.0 / 3.0) <= 3 * std::sqrt(2.0) * (2.0 / 3.0) / std::sqrt(draws) * 3);
    CHECK(std::abs(v12 + 1.0 / 3.0) <= 3 * 3.0 / std::sqrt(draws));
  }
  SUBCASE("preconditioner choice does not change the law") {
    FactorDesign d;
    d.factors = {{1, 1}};
    d.assignment = {{1}};
    SparseMat v = build_design_matrix(d);
    PrecisionModel model = PrecisionModel::unit(2, 1);
    VectorXd m(2);
    m << 3, 3;
    const int draws = 100000;
    Rng ra = make_rng(14), rb = make_rng(15);
    VectorXd suma = VectorXd::Zero(2), sumb = VectorXd::Zero(2);
    double qa = 0, qb = 0;
    SymOp op = precision_op(v, model);
    for (int i = 0; i < draws; ++i) {
      auto [ta, ignore] = cg_sample(v, model, m, 1e-10, ra);
      suma += ta;
      qa += ta[0] * ta[0];
      VectorXd z = sample_prior_precision_gaussian(v, model, rb);
      auto [tb, ignore2] = cg_solve(op, m + z, 1e-10);
      sumb += tb;
      qb += tb[0] * tb[0];
    }
    double se_mean = std::sqrt(2.0 / 3.0 / draws) * std::sqrt(2.0);
    CHECK(std::abs(suma[0] / draws - sumb[0] / draws) <= 3 * se_mean);
    CHECK(std::abs(suma[1] / draws - sumb[1] / draws) <= 3 * se_mean);
    // second moment: var of theta^2 for N(1, 2/3) is 2*(2/3)^2 + 4*2/3
    double var_sq = 2 * (2.0 / 3.0) * (2.0 / 3.0) + 4 * (2.0 / 3.0);
    CHECK(std::abs(qa / draws - qb / draws) <= 3 * std::sqrt(2 * var_sq / draws));
  }
  SUBCASE("random-design draw converges in a dimension-independent band") {
    PrecisionModel model;
    DesignSystem s = make_system({50, 50}, 0.4, 77);
    Rng rng = make_rng(16);
    auto [theta, rep] =
        cg_sample(s.v, s.model, VectorXd::Zero(s.design.n_params()), 1e-8, rng);
    CHECK(rep.converged);
    CHECK(rep.iterations >= 10);
    CHECK(rep.iterations <= 30);
  }
}

TEST_CASE("condition number back-fit from residual decay") {
  SUBCASE("exact geometric decay inverts to the generating ratio") {
    CGReport rep;
    rep.tolerance = 1e-12;
    rep.iterations = 7;
    for (int k = 0; k <= 7; ++k) rep.residual_history.push_back(std::pow(0.5, k));
    CHECK(effective_cn_from_cg(rep) == doctest::Approx(9.0).epsilon(1e-10));
  }
  SUBCASE("exact termination reads as perfectly conditioned") {
    VectorXd b(3);
    b << 1, 2, 3;
    auto [x, rep] = cg_solve(sparse_op(sparse_identity(3)), b);
    CHECK(effective_cn_from_cg(rep) == 1.0);
  }
  SUBCASE("ten-point spectrum estimated within the documented band") {
    SparseMat a = diag_mat({1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    auto [x, rep] = cg_solve(sparse_op(a), VectorXd::Ones(10));
    double kappa_hat = effective_cn_from_cg(rep);
    CHECK(kappa_hat >= 5.0);
    CHECK(kappa_hat <= 20.0);
  }
  SUBCASE("too few iterations is an error") {
    CGReport rep;
    rep.tolerance = 1e-8;
    rep.iterations = 2;
    rep.residual_history = {1.0, 0.5, 0.1};
    CHECK_THROWS_AS(effective_cn_from_cg(rep), std::invalid_argument);
  }
}

TEST_CASE("report serialization carries the full history") {
  auto [x, rep] = cg_solve(sparse_op(diag_mat({1, 2, 4})), VectorXd::Ones(3));
  std::ostringstream os;
  write_cg_report(rep, os);
  std::string s = os.str();
  CHECK(s.find("\"iterations\": 3") != std::string::npos);
  CHECK(s.find("\"residual_history\"") != std::string::npos);
  CHECK(s.find("\"converged\": true") != std::string::npos);
}
