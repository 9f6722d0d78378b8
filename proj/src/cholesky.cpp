#include "crossed/cholesky.hpp"

#include "crossed/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

namespace crossed {

CIGraph ci_graph(const SparseMat& q) {
  if (q.rows != q.cols) throw std::invalid_argument("ci_graph: matrix must be square");
  if (!q.symmetric)
    throw std::invalid_argument("ci_graph: symmetric (both-triangle) storage required");
  CIGraph g;
  g.p = q.rows;
  g.adj.resize(q.rows);
  for (int i = 0; i < q.rows; ++i)
    for (int k = q.row_ptr[i]; k < q.row_ptr[i + 1]; ++k) {
      int j = q.col_ind[k];
      if (j != i && q.val[k] != 0.0) g.adj[i].push_back(j);
    }
  return g;  // CSR rows are sorted, so each list is already sorted
}

std::vector<int> min_degree_order(const CIGraph& g, const std::vector<int>& pin_last) {
  const int p = g.p;
  std::vector<char> pinned(p, 0);
  for (int v : pin_last) {
    if (v < 0 || v >= p) throw std::invalid_argument("min_degree_order: pinned vertex out of range");
    pinned[v] = 1;
  }
  std::vector<std::set<int>> adj(p);
  for (int v = 0; v < p; ++v) adj[v] = std::set<int>(g.adj[v].begin(), g.adj[v].end());
  std::vector<char> alive(p, 1);
  std::vector<int> order;
  order.reserve(p);
  int remaining = p;
  while (remaining > 0) {
    int best = -1;
    bool best_pinned = true;
    size_t best_deg = 0;
    for (int v = 0; v < p; ++v) {
      if (!alive[v]) continue;
      bool pv = pinned[v];
      // unpinned strictly precede pinned; then smallest degree, smallest index
      if (best != -1) {
        if (pv && !best_pinned) continue;
        if (pv == best_pinned && adj[v].size() >= best_deg) continue;
      }
      best = v;
      best_pinned = pv;
      best_deg = adj[v].size();
    }
    order.push_back(best);
    alive[best] = 0;
    --remaining;
    std::vector<int> nb(adj[best].begin(), adj[best].end());
    for (int u : nb) adj[u].erase(best);
    if (static_cast<int>(nb.size()) == remaining && remaining > 0) {
      // The rest is one clique: degrees stay equal, so index order decides.
      std::vector<int> tail[2];
      for (int v = 0; v < p; ++v)
        if (alive[v]) tail[pinned[v] ? 1 : 0].push_back(v);
      for (const auto& t : tail) order.insert(order.end(), t.begin(), t.end());
      break;
    }
    for (size_t a = 0; a < nb.size(); ++a)
      for (size_t b = a + 1; b < nb.size(); ++b) {
        adj[nb[a]].insert(nb[b]);
        adj[nb[b]].insert(nb[a]);
      }
  }
  return order;
}

namespace {

void check_permutation(int p, const std::vector<int>& order) {
  if (static_cast<int>(order.size()) != p)
    throw std::invalid_argument("order must have one entry per vertex");
  std::vector<char> seen(p, 0);
  for (int v : order) {
    if (v < 0 || v >= p || seen[v])
      throw std::invalid_argument("order is not a permutation");
    seen[v] = 1;
  }
}

struct SymbolicPattern {
  // below[t]: sorted positions (> t) of the strictly-below-diagonal entries of
  // column t of L, in permuted coordinates.
  std::vector<std::vector<int>> below;
  bool dense_fallback = false;
};

SymbolicPattern eliminate(const CIGraph& g, const std::vector<int>& order) {
  const int p = g.p;
  check_permutation(p, order);
  std::vector<int> pos(p);
  for (int t = 0; t < p; ++t) pos[order[t]] = t;
  std::vector<std::set<int>> adj(p);  // in position space, alive entries only
  for (int v = 0; v < p; ++v)
    for (int u : g.adj[v]) adj[pos[v]].insert(pos[u]);
  SymbolicPattern out;
  out.below.resize(p);
  for (int t = 0; t < p; ++t) {
    std::vector<int>& nb = out.below[t];
    nb.assign(adj[t].begin(), adj[t].end());
    for (int u : nb) adj[u].erase(t);
    if (static_cast<int>(nb.size()) == p - t - 1 && t + 1 < p) {
      // Every later column is dense from here on.
      out.dense_fallback = true;
      for (int s = t + 1; s < p; ++s) {
        out.below[s].resize(p - s - 1);
        for (int j = s + 1; j < p; ++j) out.below[s][j - s - 1] = j;
      }
      break;
    }
    for (size_t a = 0; a < nb.size(); ++a)
      for (size_t b = a + 1; b < nb.size(); ++b) {
        adj[nb[a]].insert(nb[b]);
        adj[nb[b]].insert(nb[a]);
      }
  }
  return out;
}

}  // namespace

EliminationReport symbolic_factor(const CIGraph& g, const std::vector<int>& order) {
  SymbolicPattern pat = eliminate(g, order);
  EliminationReport r;
  r.order = order;
  r.dense_fallback = pat.dense_fallback;
  r.per_column_counts.resize(g.p);
  for (int t = 0; t < g.p; ++t) {
    std::int64_t n_strict = static_cast<std::int64_t>(pat.below[t].size());
    r.per_column_counts[t] = 1 + n_strict;
    r.total_nl += 1 + n_strict;
    r.predicted_flops += 1 + n_strict + n_strict * (1 + n_strict);
  }
  double nl = static_cast<double>(r.total_nl);
  r.lower_bound = nl * nl / std::max(1, g.p);
  r.upper_bound = std::pow(nl, 1.5);
  return r;
}

void write_elimination_report(const EliminationReport& r, const std::string& path) {
  nlohmann::json j;
  j["order"] = r.order;
  j["n_l_per_column"] = r.per_column_counts;
  j["n_l_total"] = r.total_nl;
  j["flops_predicted"] = r.predicted_flops;
  j["bounds"] = {{"lower", r.lower_bound}, {"upper", r.upper_bound}};
  j["dense_fallback"] = r.dense_fallback;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << j.dump(2) << "\n";
}

CholFactor numeric_cholesky(const SparseMat& q, const std::vector<int>& order) {
  if (q.rows != q.cols) throw std::invalid_argument("numeric_cholesky: matrix must be square");
  const int p = q.rows;
  CIGraph g = ci_graph(q);
  SymbolicPattern pat = eliminate(g, order);
  std::vector<int> pos(p);
  for (int t = 0; t < p; ++t) pos[order[t]] = t;

  // Column values aligned with pat.below[t]; diagonal kept separately.
  std::vector<std::vector<double>> colval(p);
  std::vector<double> diag(p);
  // rows[t]: finalized columns l < t with an entry at row t, with its slot.
  struct RowEntry {
    int col;
    int slot;
  };
  std::vector<std::vector<RowEntry>> rows(p);
  std::vector<double> work(p, 0.0);
  FlopCount flops = 0;

  for (int t = 0; t < p; ++t) {
    const std::vector<int>& below = pat.below[t];
    // Scatter column t of the permuted Q.
    int ov = order[t];
    work[t] = 0.0;
    for (int k = q.row_ptr[ov]; k < q.row_ptr[ov + 1]; ++k) {
      int s = pos[q.col_ind[k]];
      if (s >= t) work[s] = q.val[k];
    }
    // Apply the updates of every earlier column with a row-t entry.
    for (const RowEntry& re : rows[t]) {
      const std::vector<int>& src = pat.below[re.col];
      const std::vector<double>& sval = colval[re.col];
      double f = sval[re.slot];
      for (size_t s = re.slot; s < src.size(); ++s) {
        work[src[s]] -= f * sval[s];
        flops += 2;
      }
    }
    double pivot = work[t];
    if (!(pivot > 0.0))
      throw NotPositiveDefinite(
          ov, "numeric_cholesky: non-positive pivot at column " + std::to_string(ov) +
                  " (elimination step " + std::to_string(t) + ")");
    double d = std::sqrt(pivot);
    flops += 1;
    diag[t] = d;
    colval[t].resize(below.size());
    for (size_t s = 0; s < below.size(); ++s) {
      colval[t][s] = work[below[s]] / d;
      flops += 1;
      work[below[s]] = 0.0;
      rows[below[s]].push_back({t, static_cast<int>(s)});
    }
    work[t] = 0.0;
  }

  std::vector<Triplet> entries;
  entries.reserve(static_cast<size_t>(p));
  for (int t = 0; t < p; ++t) {
    entries.push_back({t, t, diag[t]});
    for (size_t s = 0; s < pat.below[t].size(); ++s)
      entries.push_back({pat.below[t][s], t, colval[t][s]});
  }
  CholFactor f;
  f.l = sparse_from_triplets(p, p, std::move(entries), false);
  f.order = order;
  f.flops = flops;
  return f;
}

SparseMat incomplete_cholesky(const SparseMat& q, const SparseMat* pattern) {
  if (q.rows != q.cols)
    throw std::invalid_argument("incomplete_cholesky: matrix must be square");
  const int p = q.rows;
  // Column-wise lower-triangular pattern; default = tril(support(Q)).
  std::vector<std::vector<int>> below(p);
  const SparseMat* src = pattern ? pattern : &q;
  std::vector<char> has_diag(p, 0);
  for (int i = 0; i < src->rows; ++i)
    for (int k = src->row_ptr[i]; k < src->row_ptr[i + 1]; ++k) {
      int j = src->col_ind[k];
      if (pattern && j > i)
        throw std::invalid_argument("incomplete_cholesky: pattern must be lower-triangular");
      if (j == i)
        has_diag[i] = 1;
      else if (j < i)
        below[j].push_back(i);
    }
  for (int i = 0; i < p; ++i)
    if (!has_diag[i])
      throw std::invalid_argument("incomplete_cholesky: pattern must include the diagonal");
  for (auto& b : below) std::sort(b.begin(), b.end());

  std::vector<std::vector<double>> colval(p);
  std::vector<double> diag(p);
  struct RowEntry {
    int col;
    int slot;
  };
  std::vector<std::vector<RowEntry>> rows(p);
  std::vector<double> work(p, 0.0);
  std::vector<char> in_col(p, 0);

  for (int t = 0; t < p; ++t) {
    work[t] = q.at(t, t);
    in_col[t] = 1;
    for (int j : below[t]) {
      work[j] = q.at(j, t);
      in_col[j] = 1;
    }
    // Restricted update: contributions land only on pattern slots of column t.
    for (const RowEntry& re : rows[t]) {
      const std::vector<int>& src_rows = below[re.col];
      const std::vector<double>& sval = colval[re.col];
      double f = sval[re.slot];
      work[t] -= f * f;
      for (size_t s = re.slot + 1; s < src_rows.size(); ++s)
        if (in_col[src_rows[s]]) work[src_rows[s]] -= f * sval[s];
    }
    double pivot = std::abs(work[t]);  // continuation fix for negative pivots
    if (pivot < 1e-300)
      throw SingularPreconditioner(
          "incomplete_cholesky: zero pivot at column " + std::to_string(t));
    double d = std::sqrt(pivot);
    diag[t] = d;
    colval[t].resize(below[t].size());
    for (size_t s = 0; s < below[t].size(); ++s) {
      int j = below[t][s];
      colval[t][s] = work[j] / d;
      work[j] = 0.0;
      in_col[j] = 0;
      rows[j].push_back({t, static_cast<int>(s)});
    }
    work[t] = 0.0;
    in_col[t] = 0;
  }

  std::vector<Triplet> entries;
  for (int t = 0; t < p; ++t) {
    entries.push_back({t, t, diag[t]});
    for (size_t s = 0; s < below[t].size(); ++s)
      entries.push_back({below[t][s], t, colval[t][s]});
  }
  return sparse_from_triplets(p, p, std::move(entries), false);
}

VectorXd tri_solve(const SparseMat& l, const VectorXd& b, bool transposed,
                   FlopCount* flops) {
  if (l.rows != l.cols) throw std::invalid_argument("tri_solve: matrix must be square");
  if (b.size() != l.rows) throw std::invalid_argument("tri_solve: dimension mismatch");
  const int p = l.rows;
  for (int i = 0; i < p; ++i) {
    int last = l.row_ptr[i + 1] - 1;
    if (last < l.row_ptr[i] || l.col_ind[last] != i)
      throw std::invalid_argument("tri_solve: input is not lower-triangular with full diagonal");
    if (l.val[last] == 0.0)
      throw std::invalid_argument("tri_solve: zero diagonal at row " + std::to_string(i));
  }
  VectorXd x(p);
  FlopCount count = 0;
  if (!transposed) {
    for (int i = 0; i < p; ++i) {
      double s = b[i];
      int k = l.row_ptr[i];
      for (; k < l.row_ptr[i + 1] - 1; ++k) {
        s -= l.val[k] * x[l.col_ind[k]];
        count += 2;
      }
      x[i] = s / l.val[k];
      count += 1;
    }
  } else {
    x = b;
    for (int i = p - 1; i >= 0; --i) {
      int diag = l.row_ptr[i + 1] - 1;
      x[i] /= l.val[diag];
      count += 1;
      for (int k = l.row_ptr[i]; k < diag; ++k) {
        x[l.col_ind[k]] -= l.val[k] * x[i];
        count += 2;
      }
    }
  }
  if (flops) *flops += count;
  return x;
}

VectorXd chol_sample(const CholFactor& f, const VectorXd& m, Rng& rng) {
  const int p = f.l.rows;
  if (m.size() != p) throw std::invalid_argument("chol_sample: dimension mismatch");
  VectorXd pm(p);
  for (int t = 0; t < p; ++t) pm[t] = m[f.order[t]];
  VectorXd w = tri_solve(f.l, pm, false);
  for (int t = 0; t < p; ++t) w[t] += draw_normal(rng);
  VectorXd ptheta = tri_solve(f.l, w, true);
  VectorXd theta(p);
  for (int t = 0; t < p; ++t) theta[f.order[t]] = ptheta[t];
  return theta;
}

}  // namespace crossed
