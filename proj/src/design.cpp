#include "crossed/design.hpp"

#include "crossed/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace crossed {

int FactorDesign::n_params() const {
  int p = fixed_dim;
  for (const Factor& f : factors) p += f.levels * f.slope_dim;
  return p;
}

int FactorDesign::block_offset(int k) const {
  int off = 0;
  for (int j = 0; j < k; ++j) off += factors[j].levels * factors[j].slope_dim;
  return off;
}

int FactorDesign::fixed_offset() const { return block_offset(n_factors()); }

bool FactorDesign::intercept_only() const {
  if (fixed_dim != 1) return false;
  for (const Factor& f : factors)
    if (f.slope_dim != 1) return false;
  return true;
}

void validate_design(const FactorDesign& d) {
  const int n = d.n_obs();
  const int kk = d.n_factors();
  if (kk == 0) throw std::invalid_argument("design has no factors");
  if (d.fixed_dim < 0) throw std::invalid_argument("negative fixed_dim");
  if (!d.covariates.empty() && static_cast<int>(d.covariates.size()) != kk)
    throw std::invalid_argument("covariates list length must match factor count");
  std::vector<std::vector<char>> seen(kk);
  for (int k = 0; k < kk; ++k) {
    if (d.factors[k].levels <= 0 || d.factors[k].slope_dim <= 0)
      throw std::invalid_argument("factor " + std::to_string(k) + ": non-positive shape");
    seen[k].assign(d.factors[k].levels, 0);
    if (d.factors[k].slope_dim > 1) {
      if (d.covariates.empty() || d.covariates[k].rows() != n ||
          d.covariates[k].cols() != d.factors[k].slope_dim)
        throw std::invalid_argument("factor " + std::to_string(k) +
                                    ": covariate table does not match N x slope_dim");
    }
  }
  if (d.fixed_covariates.size() != 0 &&
      (d.fixed_covariates.rows() != n || d.fixed_covariates.cols() != d.fixed_dim))
    throw std::invalid_argument("fixed covariate table does not match N x fixed_dim");
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(d.assignment[i].size()) != kk)
      throw std::invalid_argument("observation " + std::to_string(i) +
                                  ": wrong number of level indices");
    for (int k = 0; k < kk; ++k) {
      int g = d.assignment[i][k];
      if (g < 1 || g > d.factors[k].levels)
        throw std::invalid_argument("observation " + std::to_string(i) + ", factor " +
                                    std::to_string(k) + ": level " + std::to_string(g) +
                                    " out of range");
      seen[k][g - 1] = 1;
    }
  }
  for (int k = 0; k < kk; ++k)
    for (int g = 0; g < d.factors[k].levels; ++g)
      if (!seen[k][g])
        throw std::invalid_argument("factor " + std::to_string(k) + ": level " +
                                    std::to_string(g + 1) + " never observed");
}

SparseMat build_design_matrix(const FactorDesign& d) {
  validate_design(d);
  const int n = d.n_obs();
  const int p = d.n_params();
  std::vector<Triplet> entries;
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d.n_factors(); ++k) {
      const Factor& f = d.factors[k];
      int base = d.block_offset(k) + (d.assignment[i][k] - 1) * f.slope_dim;
      if (f.slope_dim == 1) {
        entries.push_back({i, base, 1.0});
      } else {
        for (int t = 0; t < f.slope_dim; ++t)
          entries.push_back({i, base + t, d.covariates[k](i, t)});
      }
    }
    for (int t = 0; t < d.fixed_dim; ++t) {
      double w = d.fixed_covariates.size() ? d.fixed_covariates(i, t) : 1.0;
      entries.push_back({i, d.fixed_offset() + t, w});
    }
  }
  return sparse_from_triplets(n, p, std::move(entries), false);
}

namespace {

void emit_precision_entries(const SparseMat& v, const VectorXd& t, double tau,
                            const VectorXd& omega, std::vector<Triplet>& entries) {
  if (t.size() != v.cols)
    throw std::invalid_argument("assemble_precision: T length must equal columns of V");
  if (omega.size() != v.rows)
    throw std::invalid_argument("assemble_precision: omega length must equal rows of V");
  if (!(tau > 0.0)) throw std::invalid_argument("assemble_precision: tau must be > 0");
  entries.reserve(entries.size() + v.cols + 4 * static_cast<size_t>(v.nnz()));
  for (int j = 0; j < v.cols; ++j) entries.push_back({j, j, t[j]});
  for (int i = 0; i < v.rows; ++i) {
    double w = tau * omega[i];
    // emit each unordered pair once, mirrored with the identical product, so
    // the assembled matrix is bitwise symmetric
    for (int ka = v.row_ptr[i]; ka < v.row_ptr[i + 1]; ++ka) {
      entries.push_back({v.col_ind[ka], v.col_ind[ka], w * v.val[ka] * v.val[ka]});
      for (int kb = ka + 1; kb < v.row_ptr[i + 1]; ++kb) {
        double q = w * v.val[ka] * v.val[kb];
        entries.push_back({v.col_ind[ka], v.col_ind[kb], q});
        entries.push_back({v.col_ind[kb], v.col_ind[ka], q});
      }
    }
  }
}

}  // namespace

SparseMat assemble_precision(const SparseMat& v, const VectorXd& t, double tau,
                             const VectorXd& omega) {
  std::vector<Triplet> entries;
  emit_precision_entries(v, t, tau, omega, entries);
  return sparse_from_triplets(v.cols, v.cols, std::move(entries), true);
}

std::int64_t precision_support_nnz(const SparseMat& v) {
  std::unordered_set<std::int64_t> pairs;
  for (int i = 0; i < v.rows; ++i)
    for (int ka = v.row_ptr[i]; ka < v.row_ptr[i + 1]; ++ka)
      for (int kb = v.row_ptr[i]; kb < v.row_ptr[i + 1]; ++kb)
        pairs.insert(static_cast<std::int64_t>(v.col_ind[ka]) * v.cols + v.col_ind[kb]);
  for (int j = 0; j < v.cols; ++j)
    pairs.insert(static_cast<std::int64_t>(j) * v.cols + j);
  return static_cast<std::int64_t>(pairs.size());
}

VectorXd sample_prior_precision_gaussian(const SparseMat& v, const VectorXd& t,
                                         double tau, const VectorXd& omega, Rng& rng) {
  if (t.size() != v.cols || omega.size() != v.rows)
    throw std::invalid_argument("sample_prior_precision_gaussian: dimension mismatch");
  VectorXd z(v.cols);
  for (int j = 0; j < v.cols; ++j) z[j] = std::sqrt(t[j]) * draw_normal(rng);
  double sqrt_tau = std::sqrt(tau);
  for (int i = 0; i < v.rows; ++i) {
    double e = sqrt_tau * std::sqrt(omega[i]) * draw_normal(rng);
    for (int k = v.row_ptr[i]; k < v.row_ptr[i + 1]; ++k)
      z[v.col_ind[k]] += v.val[k] * e;
  }
  return z;
}

void write_design(const FactorDesign& d, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << d.n_factors();
  for (const Factor& fac : d.factors) f << " " << fac.levels;
  f << " " << d.n_obs() << "\n";
  for (const auto& row : d.assignment) {
    for (size_t k = 0; k < row.size(); ++k) f << (k ? " " : "") << row[k];
    f << "\n";
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

FactorDesign read_design(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  int lineno = 0;
  if (!std::getline(f, line)) throw ParseError(1, "empty design file");
  ++lineno;
  std::istringstream header(line);
  int kk = 0;
  if (!(header >> kk) || kk <= 0) throw ParseError(lineno, "bad factor count");
  FactorDesign d;
  d.factors.resize(kk);
  for (int k = 0; k < kk; ++k)
    if (!(header >> d.factors[k].levels) || d.factors[k].levels <= 0)
      throw ParseError(lineno, "bad level count for factor " + std::to_string(k));
  int n = 0;
  if (!(header >> n) || n < 0) throw ParseError(lineno, "bad observation count");
  d.assignment.resize(n, std::vector<int>(kk));
  for (int i = 0; i < n; ++i) {
    if (!std::getline(f, line)) throw ParseError(lineno + 1, "unexpected end of file");
    ++lineno;
    std::istringstream ss(line);
    for (int k = 0; k < kk; ++k)
      if (!(ss >> d.assignment[i][k])) throw ParseError(lineno, "bad level index");
  }
  validate_design(d);
  return d;
}

void write_covariates(const FactorDesign& d, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << d.n_factors();
  for (const Factor& fac : d.factors) f << " " << fac.slope_dim;
  f << " " << d.fixed_dim << " " << d.n_obs() << "\n";
  char buf[32];
  for (int i = 0; i < d.n_obs(); ++i) {
    bool first = true;
    auto put = [&](double x) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      f << (first ? "" : " ") << buf;
      first = false;
    };
    for (int k = 0; k < d.n_factors(); ++k) {
      if (d.factors[k].slope_dim == 1)
        put(1.0);
      else
        for (int t = 0; t < d.factors[k].slope_dim; ++t) put(d.covariates[k](i, t));
    }
    for (int t = 0; t < d.fixed_dim; ++t)
      put(d.fixed_covariates.size() ? d.fixed_covariates(i, t) : 1.0);
    f << "\n";
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

void read_covariates(FactorDesign& d, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  int lineno = 0;
  if (!std::getline(f, line)) throw ParseError(1, "empty covariate file");
  ++lineno;
  std::istringstream header(line);
  int kk = 0;
  if (!(header >> kk) || kk != d.n_factors())
    throw ParseError(lineno, "factor count does not match design");
  std::vector<int> dims(kk);
  for (int k = 0; k < kk; ++k)
    if (!(header >> dims[k]) || dims[k] <= 0)
      throw ParseError(lineno, "bad slope dimension");
  int d0 = 0, n = 0;
  if (!(header >> d0 >> n) || d0 < 0 || n != d.n_obs())
    throw ParseError(lineno, "bad fixed dimension or observation count");
  for (int k = 0; k < kk; ++k) d.factors[k].slope_dim = dims[k];
  d.fixed_dim = d0;
  d.covariates.assign(kk, MatrixXd());
  for (int k = 0; k < kk; ++k)
    if (dims[k] > 1) d.covariates[k].resize(n, dims[k]);
  d.fixed_covariates.resize(n, d0);
  for (int i = 0; i < n; ++i) {
    if (!std::getline(f, line)) throw ParseError(lineno + 1, "unexpected end of file");
    ++lineno;
    std::istringstream ss(line);
    for (int k = 0; k < kk; ++k) {
      for (int t = 0; t < dims[k]; ++t) {
        double x;
        if (!(ss >> x)) throw ParseError(lineno, "bad covariate value");
        if (dims[k] > 1)
          d.covariates[k](i, t) = x;
        else if (x != 1.0)
          throw ParseError(lineno, "intercept column must be 1");
      }
    }
    for (int t = 0; t < d0; ++t) {
      double x;
      if (!(ss >> x)) throw ParseError(lineno, "bad fixed covariate value");
      d.fixed_covariates(i, t) = x;
    }
  }
  validate_design(d);
}

SparseMat assemble_precision(const SparseMat& v, const PrecisionModel& model) {
  return assemble_precision(v, model.t, model.tau, model.omega);
}

SparseMat assemble_precision(const SparseMat& v, const PrecisionModel& model,
                             const std::vector<Triplet>& prior_offdiag) {
  std::vector<Triplet> entries;
  entries.reserve(2 * prior_offdiag.size());
  for (const Triplet& e : prior_offdiag) {
    if (e.row < 0 || e.col >= v.cols || e.row >= e.col)
      throw std::invalid_argument(
          "assemble_precision: prior off-diagonal entries need 0 <= row < col < p");
    entries.push_back(e);
    entries.push_back({e.col, e.row, e.value});
  }
  emit_precision_entries(v, model.t, model.tau, model.omega, entries);
  return sparse_from_triplets(v.cols, v.cols, std::move(entries), true);
}

VectorXd sample_prior_precision_gaussian(const SparseMat& v, const PrecisionModel& model,
                                         Rng& rng) {
  return sample_prior_precision_gaussian(v, model.t, model.tau, model.omega, rng);
}

}  // namespace crossed
