// Command-line driver: desk-scale experiment commands (benchmark-fig1,
// table1, table3, spectrum) plus generic solve / chol / sample / gibbs entry
// points over Matrix Market and config files.
//
// Every command is deterministic under --seed.  When the primary artifact
// goes to a file, a sibling <out>.manifest.json records the command, the
// resolved option values, and library versions, so a result directory is
// self-describing.  CSV outputs may carry '#' comment lines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "crossed/cg.hpp"
#include "crossed/cholesky.hpp"
#include "crossed/config.hpp"
#include "crossed/design.hpp"
#include "crossed/errors.hpp"
#include "crossed/generators.hpp"
#include "crossed/gibbs.hpp"
#include "crossed/rng.hpp"
#include "crossed/sparse.hpp"
#include "crossed/spectral.hpp"
#include "crossed/stats.hpp"

namespace {

using crossed::CapExceeded;
using crossed::FactorDesign;
using crossed::MatrixXd;
using crossed::PrecisionModel;
using crossed::Rng;
using crossed::SparseMat;
using crossed::VectorXd;
using json = nlohmann::json;

constexpr const char* kVersion = "1.0.0";

// Problem-size guards: dense spectral analysis is capped by the eigensolver
// itself; factor/solve commands accept --force to go past the desk default.
constexpr int kSolveCap = 20000;

void check_cap(int p, int cap, bool force, const std::string& what) {
  if (p <= cap || force) return;
  throw CapExceeded(what + ": p = " + std::to_string(p) + " exceeds the desk-scale cap " +
                    std::to_string(cap) + " (pass --force to override)");
}

// Primary artifact stream: a file when --out is set, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open for writing: " + path);
    }
  }
  std::ostream& os() { return path_.empty() ? std::cout : file_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream file_;
};

json version_block() {
  return {{"crossed", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)}};
}

// <out>.manifest.json next to the primary artifact; skipped for stdout runs.
void write_manifest(const std::string& out_path, const std::string& command,
                    std::uint64_t seed, const json& options, const json& summary) {
  if (out_path.empty()) return;
  json m{{"command", command},
         {"seed", seed},
         {"options", options},
         {"versions", version_block()},
         {"summary", summary}};
  std::ofstream f(out_path + ".manifest.json");
  if (!f) throw std::runtime_error("cannot open for writing: " + out_path + ".manifest.json");
  f << m.dump(2) << "\n";
}

// Whitespace-separated numbers, one logical vector per file.
VectorXd read_vector_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<double> vals;
  double x;
  while (f >> x) vals.push_back(x);
  if (!f.eof())
    throw std::runtime_error("non-numeric content in vector file: " + path);
  return Eigen::Map<const VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

void write_vector_file(const VectorXd& v, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.precision(17);
  for (int i = 0; i < v.size(); ++i) f << v[i] << "\n";
}

std::vector<double> to_std(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// ---------------------------------------------------------------------------
// benchmark-fig1: sparse-Cholesky vs CG sampling cost on random designs.
// Scenario (a): K=2, pi = 20/G (constant expected degree); (b): K=2,
// pi = G^{-1/2}; (c): K=5, pi = G^{-7/2}.  p = K G + 1 in every case.

struct Scenario {
  int k = 2;
  double (*pi)(int) = nullptr;
};

Scenario scenario_for(const std::string& name) {
  if (name == "a") return {2, [](int g) { return 20.0 / g; }};
  if (name == "b") return {2, [](int g) { return 1.0 / std::sqrt(static_cast<double>(g)); }};
  if (name == "c") return {5, [](int g) { return std::pow(static_cast<double>(g), -3.5); }};
  throw std::invalid_argument("unknown scenario '" + name + "' (expected a, b, or c)");
}

FactorDesign scenario_design(const std::string& name, int g, std::uint64_t seed) {
  Scenario s = scenario_for(name);
  return crossed::gen_mcar(s.k, std::vector<int>(s.k, g), s.pi(g), seed);
}

int cmd_benchmark_fig1(const std::string& scenario, std::vector<int> grid,
                       int trials, double tol, std::uint64_t seed,
                       const std::string& out_path) {
  if (grid.size() < 2) throw std::invalid_argument("need at least two grid points for slopes");
  if (!std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end())
    throw std::invalid_argument("grid must be strictly ascending");
  if (trials < 1) throw std::invalid_argument("need trials >= 1");

  Output out(out_path);
  out.os() << "scenario,g,p,n,nnz_q,chol_flops,cg_mean_iterations,cg_mean_flops\n";
  std::vector<double> ps, chol_flops, cg_flops;
  for (size_t i = 0; i < grid.size(); ++i) {
    int g = grid[i];
    FactorDesign d = scenario_design(scenario, g, seed + i);
    SparseMat v = crossed::build_design_matrix(d);
    PrecisionModel model = PrecisionModel::unit(v.cols, v.rows);
    SparseMat q = crossed::assemble_precision(v, model);
    auto order = crossed::min_degree_order(crossed::ci_graph(q));
    auto sym = crossed::symbolic_factor(crossed::ci_graph(q), order);

    double iter_sum = 0, flop_sum = 0;
    for (int t = 0; t < trials; ++t) {
      Rng rng = crossed::make_rng(seed + i, 100 + t);
      auto [x, rep] =
          crossed::cg_sample(v, model, VectorXd::Zero(v.cols), tol, rng, 20 * v.cols + 100);
      iter_sum += rep.iterations;
      flop_sum += static_cast<double>(rep.flops);
    }
    ps.push_back(v.cols);
    chol_flops.push_back(static_cast<double>(sym.predicted_flops));
    cg_flops.push_back(flop_sum / trials);
    out.os() << scenario << ',' << g << ',' << v.cols << ',' << v.rows << ','
             << q.nnz() << ',' << sym.predicted_flops << ',' << iter_sum / trials
             << ',' << flop_sum / trials << "\n";
  }
  double chol_slope = crossed::log_log_slope(ps, chol_flops);
  double cg_slope = crossed::log_log_slope(ps, cg_flops);
  out.os() << "# chol_slope=" << chol_slope << " cg_slope=" << cg_slope << "\n";
  write_manifest(out_path, "benchmark-fig1", seed,
                 {{"scenario", scenario}, {"grid", grid}, {"trials", trials}, {"tol", tol}},
                 {{"chol_slope", chol_slope}, {"cg_slope", cg_slope}});
  return 0;
}

// ---------------------------------------------------------------------------
// table1: effective condition numbers and CG iteration counts with and
// without diagonal preconditioning, on two-factor random designs of fixed
// expected size N = p^{3/2}.

int cmd_table1(int g1, std::vector<int> g2_list, double t, double tau, double tol,
               bool kappa, bool force, std::uint64_t seed, const std::string& out_path) {
  Output out(out_path);
  out.os() << "g1,g2,p,n,kappa_q,iterations_plain,kappa_q_normalized,iterations_jacobi\n";
  json rows = json::array();
  for (size_t i = 0; i < g2_list.size(); ++i) {
    int g2 = g2_list[i];
    int p = g1 + g2 + 1;
    double pi = std::pow(static_cast<double>(p), 1.5) /
                (static_cast<double>(g1) * static_cast<double>(g2));
    if (pi > 1.0) pi = 1.0;
    FactorDesign d = crossed::gen_er_bipartite(g1, g2, pi, seed + i);
    SparseMat v = crossed::build_design_matrix(d);
    PrecisionModel model{VectorXd::Constant(v.cols, t), tau, VectorXd::Ones(v.rows), VectorXd()};

    Rng rng = crossed::make_rng(seed + i, 23);
    VectorXd b(v.cols);
    for (int j = 0; j < b.size(); ++j) b[j] = crossed::draw_uniform(rng) - 0.5;

    crossed::SymOp op = crossed::precision_op(v, model);
    int maxit = 20 * v.cols + 100;
    auto [x_plain, rep_plain] = crossed::cg_solve(op, b, tol, maxit);
    auto minv = crossed::jacobi_preconditioner(crossed::precision_diagonal(v, model));
    auto [x_jac, rep_jac] = crossed::pcg_solve(op, minv, b, tol, maxit);

    double kq = std::nan(""), kqbar = std::nan("");
    if (kappa) {
      check_cap(v.cols, crossed::kEigSizeCap, force, "table1 spectrum");
      MatrixXd u = crossed::dense_u(v);
      MatrixXd q_dense = tau * u;
      q_dense.diagonal().array() += t;
      kq = crossed::effective_condition_number(crossed::dense_sym_eig(q_dense), 2, 2);
      kqbar = crossed::effective_condition_number(
          crossed::dense_sym_eig(crossed::dense_q_normalized(v, model)), 2, 2);
    }
    out.os() << g1 << ',' << g2 << ',' << v.cols << ',' << v.rows << ',' << kq << ','
             << rep_plain.iterations << ',' << kqbar << ',' << rep_jac.iterations << "\n";
    rows.push_back({{"g2", g2},
                    {"p", v.cols},
                    {"n", v.rows},
                    {"kappa_q", kq},
                    {"iterations_plain", rep_plain.iterations},
                    {"kappa_q_normalized", kqbar},
                    {"iterations_jacobi", rep_jac.iterations}});
  }
  write_manifest(out_path, "table1", seed,
                 {{"g1", g1}, {"g2", g2_list}, {"t", t}, {"tau", tau}, {"tol", tol},
                  {"kappa", kappa}},
                 {{"rows", rows}});
  return 0;
}

// ---------------------------------------------------------------------------
// table3: mean CG iterations per Gibbs sweep across a ladder of model
// structures of increasing connectivity damage, on one shared base design
// (same observations, growing parameter vector).

const std::vector<std::string> kTable3Cases = {"intercepts", "nested",   "slopes",
                                               "two_way",    "three_way", "full"};

FactorDesign table3_design(const FactorDesign& base, const std::string& name,
                           std::uint64_t seed) {
  auto grouped = [&](const FactorDesign& d) {
    std::vector<int> groups(d.factors[0].levels);
    for (size_t l = 0; l < groups.size(); ++l) groups[l] = static_cast<int>(l / 5) + 1;
    return crossed::add_nested(d, 0, groups);
  };
  auto sloped = [&](const FactorDesign& d) {
    Rng rng = crossed::make_rng(seed, 40);
    VectorXd x(d.n_obs());
    for (int i = 0; i < x.size(); ++i) x[i] = 2.0 * crossed::draw_uniform(rng) - 1.0;
    return crossed::add_random_slope(d, 1, x);
  };
  if (name == "intercepts") return base;
  if (name == "nested") return grouped(base);
  if (name == "slopes") return sloped(grouped(base));
  FactorDesign d = crossed::add_interaction(sloped(grouped(base)), 0, 1);
  if (name == "two_way") return d;
  d = crossed::add_interaction(d, 4, 2);  // factor 4 is the (0,1) pair
  if (name == "three_way") return d;
  if (name == "full") return crossed::add_interaction(d, 1, 2);
  throw std::invalid_argument("unknown table3 case '" + name + "'");
}

int cmd_table3(int g, double pi, int trials_per_obs, int sweeps, int burnin, double tol,
               std::uint64_t seed, const std::string& out_path) {
  FactorDesign base = crossed::gen_mcar(3, {g, g, g}, pi, seed);
  int n = base.n_obs();
  Rng data_rng = crossed::make_rng(seed, 41);
  VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = std::floor((trials_per_obs + 1) * crossed::draw_uniform(data_rng));

  Output out(out_path);
  out.os() << "model,p,n,mean_cg_iterations\n";
  json rows = json::array();
  for (const std::string& name : kTable3Cases) {
    crossed::GLMMSpec spec;
    spec.design = table3_design(base, name, seed);
    spec.likelihood = crossed::Likelihood::kBinomialLogit;
    spec.trials.assign(n, trials_per_obs);
    spec.y = y;
    crossed::SweepOptions opt;
    opt.sampler = crossed::ThetaSampler::kCg;
    opt.cg_tol = tol;
    opt.cg_maxit = 40 * spec.design.n_params() + 100;
    crossed::ChainSummary run = crossed::run_chain(spec, sweeps, burnin, opt, seed);
    out.os() << name << ',' << spec.design.n_params() << ',' << n << ','
             << run.mean_cg_iterations << "\n";
    rows.push_back({{"model", name},
                    {"p", spec.design.n_params()},
                    {"n", n},
                    {"mean_cg_iterations", run.mean_cg_iterations}});
  }
  write_manifest(out_path, "table3", seed,
                 {{"g", g}, {"pi", pi}, {"trials_per_obs", trials_per_obs},
                  {"sweeps", sweeps}, {"burnin", burnin}, {"tol", tol}},
                 {{"rows", rows}});
  return 0;
}

// ---------------------------------------------------------------------------
// spectrum: histograms of the precision spectrum before and after diagonal
// normalization, with the per-factor bulk locations t + tau N / G_k that the
// raw spectrum clusters around.

std::string sibling_path(const std::string& path, const std::string& suffix) {
  size_t dot = path.find_last_of('.');
  size_t slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + suffix;
  return path.substr(0, dot) + suffix + path.substr(dot);
}

int cmd_spectrum(const std::string& design_file, std::vector<int> levels, double pi,
                 double t, double tau, int bins, std::uint64_t seed,
                 const std::string& out_path) {
  if (out_path.empty())
    throw std::invalid_argument("spectrum writes two histograms; --out is required");
  FactorDesign d;
  if (!design_file.empty()) {
    d = crossed::read_design(design_file);
  } else if (!levels.empty()) {
    d = crossed::gen_mcar(static_cast<int>(levels.size()), levels, pi, seed);
  } else {
    throw std::invalid_argument("need either --design or --levels");
  }
  SparseMat v = crossed::build_design_matrix(d);
  check_cap(v.cols, crossed::kEigSizeCap, false, "spectrum");
  PrecisionModel model{VectorXd::Constant(v.cols, t), tau, VectorXd::Ones(v.rows), VectorXd()};

  MatrixXd u = crossed::dense_u(v);
  MatrixXd q_dense = tau * u;
  q_dense.diagonal().array() += t;
  VectorXd q_eigs = crossed::dense_sym_eig(q_dense);
  VectorXd qbar_eigs = crossed::dense_sym_eig(crossed::dense_q_normalized(v, model));

  std::vector<double> references;
  for (const auto& f : d.factors)
    references.push_back(t + tau * static_cast<double>(d.n_obs()) / f.levels);

  std::string bar_path = sibling_path(out_path, "_normalized");
  {
    Output out(out_path);
    for (size_t k = 0; k < references.size(); ++k)
      out.os() << "# reference factor " << k << ": " << references[k] << "\n";
    crossed::write_spectrum_histogram(q_eigs, bins, out.os());
  }
  {
    Output out(bar_path);
    out.os() << "# normalized spectrum; bulk centered near 1\n";
    crossed::write_spectrum_histogram(qbar_eigs, bins, out.os());
  }
  write_manifest(out_path, "spectrum", seed,
                 {{"design", design_file}, {"levels", levels}, {"pi", pi}, {"t", t},
                  {"tau", tau}, {"bins", bins}},
                 {{"p", v.cols}, {"n", d.n_obs()}, {"references", references},
                  {"normalized_out", bar_path},
                  {"q_extremes", {q_eigs.minCoeff(), q_eigs.maxCoeff()}},
                  {"q_normalized_extremes", {qbar_eigs.minCoeff(), qbar_eigs.maxCoeff()}}});
  return 0;
}

// ---------------------------------------------------------------------------
// solve: preconditioned CG on a Matrix Market system.

int cmd_solve(const std::string& matrix_path, const std::string& rhs_path,
              const std::string& precond, double tol, int maxit,
              const std::string& solution_path, bool force, std::uint64_t seed,
              const std::string& out_path) {
  SparseMat a = crossed::read_matrix_market(matrix_path);
  if (a.rows != a.cols) throw std::invalid_argument("solve needs a square matrix");
  check_cap(a.rows, kSolveCap, force, "solve");
  VectorXd b = rhs_path.empty() ? VectorXd::Ones(a.rows).eval() : read_vector_file(rhs_path);
  if (b.size() != a.rows)
    throw std::invalid_argument("rhs length " + std::to_string(b.size()) +
                                " does not match matrix size " + std::to_string(a.rows));
  if (maxit <= 0) maxit = 20 * a.rows + 100;

  crossed::Preconditioner minv;
  if (precond == "none") {
    minv = crossed::identity_preconditioner();
  } else if (precond == "jacobi") {
    minv = crossed::jacobi_preconditioner(a);
  } else if (precond == "ic") {
    minv = crossed::ic_preconditioner(crossed::incomplete_cholesky(a));
  } else {
    throw std::invalid_argument("unknown preconditioner '" + precond + "'");
  }
  auto [x, rep] = crossed::pcg_solve(crossed::sparse_op(a), minv, b, tol, maxit);
  if (!solution_path.empty()) write_vector_file(x, solution_path);

  Output out(out_path);
  json j{{"p", a.rows},
         {"nnz", a.nnz()},
         {"preconditioner", precond},
         {"iterations", rep.iterations},
         {"converged", rep.converged},
         {"flops", rep.flops},
         {"tolerance", rep.tolerance},
         {"final_relative_residual", rep.residual_history.back()},
         {"effective_condition_number",
          rep.iterations >= 3 ? json(crossed::effective_cn_from_cg(rep)) : json()}};
  out.os() << j.dump(2) << "\n";
  write_manifest(out_path, "solve", seed,
                 {{"matrix", matrix_path}, {"rhs", rhs_path}, {"precond", precond},
                  {"tol", tol}, {"maxit", maxit}},
                 {{"iterations", rep.iterations}, {"converged", rep.converged}});
  return 0;
}

// ---------------------------------------------------------------------------
// chol: symbolic analysis plus (optionally) the numeric factor.

std::vector<int> make_order(const SparseMat& q, const std::string& kind) {
  if (kind == "natural") {
    std::vector<int> order(q.rows);
    for (int i = 0; i < q.rows; ++i) order[i] = i;
    return order;
  }
  if (kind == "mindeg") return crossed::min_degree_order(crossed::ci_graph(q));
  throw std::invalid_argument("unknown ordering '" + kind + "' (expected mindeg or natural)");
}

int cmd_chol(const std::string& matrix_path, const std::string& order_kind,
             bool symbolic_only, const std::string& factor_path,
             const std::string& report_path, bool force, std::uint64_t seed,
             const std::string& out_path) {
  SparseMat q = crossed::read_matrix_market(matrix_path);
  if (q.rows != q.cols) throw std::invalid_argument("chol needs a square matrix");
  check_cap(q.rows, kSolveCap, force, "chol");
  std::vector<int> order = make_order(q, order_kind);
  auto sym = crossed::symbolic_factor(crossed::ci_graph(q), order);
  if (!report_path.empty()) crossed::write_elimination_report(sym, report_path);

  json j{{"p", q.rows},
         {"nnz_q", q.nnz()},
         {"ordering", order_kind},
         {"factor_nonzeros", sym.total_nl},
         {"predicted_flops", sym.predicted_flops},
         {"flops_lower_bound", sym.lower_bound},
         {"flops_upper_bound", sym.upper_bound},
         {"dense_fallback", sym.dense_fallback}};
  if (!symbolic_only) {
    crossed::CholFactor f = crossed::numeric_cholesky(q, order);
    j["measured_flops"] = f.flops;
    j["measured_factor_nonzeros"] = f.l.nnz();
    if (!factor_path.empty()) crossed::write_matrix_market(f.l, factor_path);
  }
  Output out(out_path);
  out.os() << j.dump(2) << "\n";
  write_manifest(out_path, "chol", seed,
                 {{"matrix", matrix_path}, {"order", order_kind},
                  {"symbolic_only", symbolic_only}},
                 {{"factor_nonzeros", sym.total_nl}, {"predicted_flops", sym.predicted_flops}});
  return 0;
}

// ---------------------------------------------------------------------------
// sample: factor once, then draw repeatedly from N(Q^{-1} m, Q^{-1}).

int cmd_sample(const std::string& matrix_path, const std::string& mean_path, int draws,
               const std::string& order_kind, const std::string& draws_path, bool force,
               std::uint64_t seed, const std::string& out_path) {
  if (draws < 1) throw std::invalid_argument("need draws >= 1");
  SparseMat q = crossed::read_matrix_market(matrix_path);
  if (q.rows != q.cols) throw std::invalid_argument("sample needs a square matrix");
  check_cap(q.rows, kSolveCap, force, "sample");
  VectorXd m = mean_path.empty() ? VectorXd::Zero(q.rows).eval() : read_vector_file(mean_path);
  if (m.size() != q.rows)
    throw std::invalid_argument("mean length does not match matrix size");

  crossed::CholFactor f = crossed::numeric_cholesky(q, make_order(q, order_kind));
  Rng rng = crossed::make_rng(seed);
  VectorXd acc = VectorXd::Zero(q.rows);
  std::ofstream draws_file;
  if (!draws_path.empty()) {
    draws_file.open(draws_path);
    if (!draws_file) throw std::runtime_error("cannot open for writing: " + draws_path);
    draws_file.precision(17);
  }
  for (int s = 0; s < draws; ++s) {
    VectorXd x = crossed::chol_sample(f, m, rng);
    acc += x;
    if (draws_file.is_open()) {
      for (int i = 0; i < x.size(); ++i)
        draws_file << x[i] << (i + 1 == x.size() ? '\n' : ',');
    }
  }
  acc /= draws;

  Output out(out_path);
  json j{{"p", q.rows},
         {"draws", draws},
         {"ordering", order_kind},
         {"factor_flops", f.flops},
         {"factor_nonzeros", f.l.nnz()},
         {"draw_mean", to_std(acc)}};
  out.os() << j.dump(2) << "\n";
  write_manifest(out_path, "sample", seed,
                 {{"matrix", matrix_path}, {"mean", mean_path}, {"draws", draws},
                  {"order", order_kind}},
                 {{"factor_flops", f.flops}});
  return 0;
}

// ---------------------------------------------------------------------------
// gibbs: full chain from a declarative config file.

FactorDesign design_from_config(const crossed::Config& cfg) {
  std::string kind = cfg.get_string("design", "kind", "mcar");
  FactorDesign d;
  if (kind == "file") {
    d = crossed::read_design(cfg.get_string("design", "design_file"));
    if (cfg.has("design", "covariates_file"))
      crossed::read_covariates(d, cfg.get_string("design", "covariates_file"));
  } else if (kind == "mcar") {
    std::vector<int> levels = cfg.get_int_list("design", "levels");
    d = crossed::gen_mcar(static_cast<int>(levels.size()), levels,
                          cfg.get_double("design", "pi", 1.0),
                          static_cast<std::uint64_t>(cfg.get_int("design", "design_seed", 1)));
  } else {
    throw std::invalid_argument("config: design.kind must be 'mcar' or 'file'");
  }
  // Structure modifiers, applied in a fixed order: nested grouping, random
  // slope, interaction.
  if (cfg.has("design", "nested_factor")) {
    int parent = cfg.get_int("design", "nested_factor");
    int size = cfg.get_int("design", "nested_group_size", 5);
    if (parent < 0 || parent >= d.n_factors() || size < 1)
      throw std::invalid_argument("config: bad nested_factor / nested_group_size");
    std::vector<int> groups(d.factors[parent].levels);
    for (size_t l = 0; l < groups.size(); ++l)
      groups[l] = static_cast<int>(l) / size + 1;
    d = crossed::add_nested(d, parent, groups);
  }
  if (cfg.has("design", "slope_factor")) {
    Rng rng = crossed::make_rng(
        static_cast<std::uint64_t>(cfg.get_int("design", "design_seed", 1)), 40);
    VectorXd x(d.n_obs());
    for (int i = 0; i < x.size(); ++i) x[i] = 2.0 * crossed::draw_uniform(rng) - 1.0;
    d = crossed::add_random_slope(d, cfg.get_int("design", "slope_factor"), x);
  }
  if (cfg.has("design", "interaction")) {
    std::vector<int> pair = cfg.get_int_list("design", "interaction");
    if (pair.size() != 2)
      throw std::invalid_argument("config: design.interaction needs exactly two factors");
    d = crossed::add_interaction(d, pair[0], pair[1]);
  }
  return d;
}

crossed::GLMMSpec spec_from_config(const crossed::Config& cfg) {
  crossed::GLMMSpec spec;
  spec.design = design_from_config(cfg);
  int n = spec.design.n_obs();

  std::string lik = cfg.get_string("model", "likelihood");
  if (lik == "gaussian") {
    spec.likelihood = crossed::Likelihood::kGaussian;
  } else if (lik == "binomial") {
    spec.likelihood = crossed::Likelihood::kBinomialLogit;
  } else {
    throw std::invalid_argument("config: model.likelihood must be 'gaussian' or 'binomial'");
  }
  spec.tau = cfg.get_double("model", "tau", 1.0);
  std::string fixed = cfg.get_string("model", "fixed_prior", "normal");
  if (fixed == "flat") {
    spec.fixed_prior = crossed::FixedPrior::kFlat;
  } else if (fixed != "normal") {
    throw std::invalid_argument("config: model.fixed_prior must be 'normal' or 'flat'");
  }
  spec.fixed_precision = cfg.get_double("model", "fixed_precision", 0.1);
  if (cfg.has("model", "prior_alpha") || cfg.has("model", "prior_phi_scale")) {
    std::vector<double> alpha = cfg.has("model", "prior_alpha")
                                    ? cfg.get_double_list("model", "prior_alpha")
                                    : std::vector<double>();
    std::vector<double> phi = cfg.has("model", "prior_phi_scale")
                                  ? cfg.get_double_list("model", "prior_phi_scale")
                                  : std::vector<double>();
    for (int k = 0; k < spec.design.n_factors(); ++k) {
      crossed::FactorPrior prior = crossed::default_factor_prior(spec.design.factors[k].slope_dim);
      if (!alpha.empty()) {
        if (static_cast<int>(alpha.size()) != spec.design.n_factors())
          throw std::invalid_argument("config: model.prior_alpha needs one entry per factor");
        prior.alpha = alpha[k];
      }
      if (!phi.empty()) {
        if (static_cast<int>(phi.size()) != spec.design.n_factors())
          throw std::invalid_argument("config: model.prior_phi_scale needs one entry per factor");
        prior.phi = phi[k] * MatrixXd::Identity(spec.design.factors[k].slope_dim,
                                                spec.design.factors[k].slope_dim);
      }
      spec.priors.push_back(prior);
    }
  }

  // Observations: either files or a simulated draw from the model itself.
  if (spec.likelihood == crossed::Likelihood::kBinomialLogit) {
    if (cfg.has("data", "trials_file")) {
      VectorXd tr = read_vector_file(cfg.get_string("data", "trials_file"));
      if (tr.size() != n)
        throw std::invalid_argument("config: trials_file length does not match N");
      spec.trials.resize(n);
      for (int i = 0; i < n; ++i) spec.trials[i] = static_cast<int>(tr[i]);
    } else {
      spec.trials.assign(n, cfg.get_int("data", "trials", 1));
    }
  }
  if (cfg.get_bool("data", "simulate", false)) {
    Rng rng = crossed::make_rng(
        static_cast<std::uint64_t>(cfg.get_int("data", "data_seed", 2)), 42);
    double sd = cfg.get_double("data", "sim_theta_sd", 1.0);
    SparseMat v = crossed::build_design_matrix(spec.design);
    VectorXd theta(v.cols);
    for (int j = 0; j < v.cols; ++j) theta[j] = sd * crossed::draw_normal(rng);
    VectorXd eta = crossed::spmv(v, theta);
    spec.y.resize(n);
    if (spec.likelihood == crossed::Likelihood::kGaussian) {
      double noise_sd = 1.0 / std::sqrt(spec.tau);
      for (int i = 0; i < n; ++i) spec.y[i] = eta[i] + noise_sd * crossed::draw_normal(rng);
    } else {
      for (int i = 0; i < n; ++i) {
        double prob = 1.0 / (1.0 + std::exp(-eta[i]));
        int hits = 0;
        for (int trial = 0; trial < spec.trials[i]; ++trial)
          if (crossed::draw_uniform(rng) < prob) ++hits;
        spec.y[i] = hits;
      }
    }
  } else {
    spec.y = read_vector_file(cfg.get_string("data", "response_file"));
    if (spec.y.size() != n)
      throw std::invalid_argument("config: response_file length does not match N");
  }
  return spec;
}

int cmd_gibbs(const std::string& config_path, std::int64_t seed_override,
              const std::string& out_path) {
  crossed::Config cfg = crossed::Config::parse_file(config_path);
  crossed::GLMMSpec spec = spec_from_config(cfg);

  crossed::SweepOptions opt;
  std::string method = cfg.get_string("sampler", "method", "cholesky");
  if (method == "cg") {
    opt.sampler = crossed::ThetaSampler::kCg;
  } else if (method != "cholesky") {
    throw std::invalid_argument("config: sampler.method must be 'cholesky' or 'cg'");
  }
  opt.cg_tol = cfg.get_double("sampler", "cg_tol", 1e-8);
  opt.cg_maxit = cfg.get_int("sampler", "cg_maxit", 40 * spec.design.n_params() + 100);
  opt.update_precisions = cfg.get_bool("sampler", "update_precisions", true);
  int sweeps = cfg.get_int("sampler", "sweeps", 1000);
  int burnin = cfg.get_int("sampler", "burnin", sweeps / 10);
  // Read the config seed unconditionally so the key counts as consumed even
  // when the command-line value overrides it.
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("sampler", "seed", 1));
  if (seed_override >= 0) seed = static_cast<std::uint64_t>(seed_override);
  cfg.require_consumed();

  Output out(out_path);
  crossed::ChainSummary run = crossed::run_chain(spec, sweeps, burnin, opt, seed, &out.os());

  json tk = json::array();
  for (const MatrixXd& t : run.tk_mean) {
    json rows_j = json::array();
    for (int r = 0; r < t.rows(); ++r)
      rows_j.push_back(std::vector<double>(t.row(r).begin(), t.row(r).end()));
    tk.push_back(rows_j);
  }
  write_manifest(out_path, "gibbs", seed,
                 {{"config", config_path}, {"method", method}, {"sweeps", sweeps},
                  {"burnin", burnin}},
                 {{"p", spec.design.n_params()},
                  {"n", spec.design.n_obs()},
                  {"mean_cg_iterations", run.mean_cg_iterations},
                  {"theta_mean", to_std(run.theta_mean)},
                  {"theta_var", to_std(run.theta_var)},
                  {"tk_mean", tk}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crossed random-effects experiment driver"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out_path;

  auto* fig1 = app.add_subcommand("benchmark-fig1",
                                  "Cholesky vs CG sampling cost over a size grid");
  std::string scenario;
  std::vector<int> grid{50, 100, 200, 400};
  int trials = 3;
  double tol = 1e-8;
  fig1->add_option("--scenario", scenario, "design family: a, b, or c")->required();
  fig1->add_option("--grid", grid, "ascending per-factor level counts");
  fig1->add_option("--trials", trials, "CG repetitions per grid point");
  fig1->add_option("--tol", tol, "CG relative-residual tolerance");
  fig1->add_option("--seed", seed, "RNG seed");
  fig1->add_option("--out", out_path, "output CSV (stdout when omitted)");

  auto* t1 = app.add_subcommand("table1", "condition numbers and CG iterations, "
                                          "plain vs Jacobi");
  int g1 = 100;
  std::vector<int> g2_list{100, 1000};
  double t_prior = 1.0, tau = 1.0;
  bool no_kappa = false, force = false;
  t1->add_option("--g1", g1, "levels of the first factor");
  t1->add_option("--g2", g2_list, "levels of the second factor, one row each");
  t1->add_option("--t", t_prior, "diagonal prior precision");
  t1->add_option("--tau", tau, "likelihood precision");
  t1->add_option("--tol", tol, "CG relative-residual tolerance");
  t1->add_flag("--no-kappa", no_kappa, "skip the dense eigensolves");
  t1->add_flag("--force", force, "override desk-scale caps");
  t1->add_option("--seed", seed, "RNG seed");
  t1->add_option("--out", out_path, "output CSV (stdout when omitted)");

  auto* t3 = app.add_subcommand("table3", "mean Gibbs CG iterations across the "
                                          "model-structure ladder");
  int g3 = 20, trials_per_obs = 2, sweeps = 60, burnin = 10;
  double pi3 = 0.05;
  t3->add_option("--g", g3, "levels per base factor");
  t3->add_option("--pi", pi3, "cell inclusion probability");
  t3->add_option("--trials-per-obs", trials_per_obs, "binomial trials per observation");
  t3->add_option("--sweeps", sweeps, "Gibbs sweeps per model");
  t3->add_option("--burnin", burnin, "sweeps discarded from summaries");
  t3->add_option("--tol", tol, "CG relative-residual tolerance");
  t3->add_option("--seed", seed, "RNG seed");
  t3->add_option("--out", out_path, "output CSV (stdout when omitted)");

  auto* spect = app.add_subcommand("spectrum", "precision spectrum histograms, raw "
                                               "and diagonally normalized");
  std::string design_file;
  std::vector<int> levels;
  double pi_s = 1.0;
  int bins = 60;
  spect->add_option("--design", design_file, "design file to analyze");
  spect->add_option("--levels", levels, "per-factor level counts for a random design");
  spect->add_option("--pi", pi_s, "cell inclusion probability for --levels");
  spect->add_option("--t", t_prior, "diagonal prior precision");
  spect->add_option("--tau", tau, "likelihood precision");
  spect->add_option("--bins", bins, "histogram bins");
  spect->add_option("--seed", seed, "RNG seed");
  spect->add_option("--out", out_path, "output CSV; sibling _normalized file is derived")
      ->required();

  auto* solve = app.add_subcommand("solve", "preconditioned CG on a Matrix Market system");
  std::string matrix_path, rhs_path, solution_path, precond = "none";
  int maxit = 0;
  solve->add_option("--matrix", matrix_path, "Matrix Market file")->required();
  solve->add_option("--rhs", rhs_path, "right-hand side (ones when omitted)");
  solve->add_option("--precond", precond, "none, jacobi, or ic");
  solve->add_option("--tol", tol, "relative-residual tolerance");
  solve->add_option("--maxit", maxit, "iteration cap (auto when 0)");
  solve->add_option("--solution", solution_path, "write the solution vector here");
  solve->add_flag("--force", force, "override desk-scale caps");
  solve->add_option("--seed", seed, "RNG seed");
  solve->add_option("--out", out_path, "JSON report (stdout when omitted)");

  auto* chol = app.add_subcommand("chol", "sparse Cholesky analysis and factorization");
  std::string order_kind = "mindeg", factor_path, report_path;
  bool symbolic_only = false;
  chol->add_option("--matrix", matrix_path, "Matrix Market file")->required();
  chol->add_option("--order", order_kind, "mindeg or natural");
  chol->add_flag("--symbolic-only", symbolic_only, "skip the numeric factorization");
  chol->add_option("--factor", factor_path, "write the factor here (Matrix Market)");
  chol->add_option("--report", report_path, "write the elimination analysis JSON here");
  chol->add_flag("--force", force, "override desk-scale caps");
  chol->add_option("--seed", seed, "RNG seed");
  chol->add_option("--out", out_path, "JSON report (stdout when omitted)");

  auto* sample = app.add_subcommand("sample", "Gaussian draws from a Matrix Market "
                                              "precision matrix");
  std::string mean_path, draws_path;
  int draws = 1;
  sample->add_option("--matrix", matrix_path, "Matrix Market file")->required();
  sample->add_option("--mean", mean_path, "linear term m of N(Q^{-1} m, Q^{-1})");
  sample->add_option("--draws", draws, "number of draws");
  sample->add_option("--order", order_kind, "mindeg or natural");
  sample->add_option("--draws-out", draws_path, "write one CSV row per draw here");
  sample->add_flag("--force", force, "override desk-scale caps");
  sample->add_option("--seed", seed, "RNG seed");
  sample->add_option("--out", out_path, "JSON report (stdout when omitted)");

  auto* gibbs = app.add_subcommand("gibbs", "run a Gibbs chain from a config file");
  std::string config_path;
  std::int64_t gibbs_seed = -1;
  gibbs->add_option("--config", config_path, "experiment config file")->required();
  gibbs->add_option("--seed", gibbs_seed, "overrides sampler.seed from the config");
  gibbs->add_option("--out", out_path, "trace CSV (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fig1->parsed())
      return cmd_benchmark_fig1(scenario, grid, trials, tol, seed, out_path);
    if (t1->parsed())
      return cmd_table1(g1, g2_list, t_prior, tau, tol, !no_kappa, force, seed, out_path);
    if (t3->parsed())
      return cmd_table3(g3, pi3, trials_per_obs, sweeps, burnin, tol, seed, out_path);
    if (spect->parsed())
      return cmd_spectrum(design_file, levels, pi_s, t_prior, tau, bins, seed, out_path);
    if (solve->parsed())
      return cmd_solve(matrix_path, rhs_path, precond, tol, maxit, solution_path, force,
                       seed, out_path);
    if (chol->parsed())
      return cmd_chol(matrix_path, order_kind, symbolic_only, factor_path, report_path,
                      force, seed, out_path);
    if (sample->parsed())
      return cmd_sample(matrix_path, mean_path, draws, order_kind, draws_path, force,
                        seed, out_path);
    if (gibbs->parsed()) return cmd_gibbs(config_path, gibbs_seed, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
