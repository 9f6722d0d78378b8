#include "crossed/generators.hpp"

#include "crossed/errors.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>

namespace crossed {

namespace {

bool all_levels_covered(const std::vector<std::vector<int>>& rows,
                        const std::vector<int>& g) {
  std::vector<std::vector<char>> seen(g.size());
  for (size_t k = 0; k < g.size(); ++k) seen[k].assign(g[k], 0);
  for (const auto& row : rows)
    for (size_t k = 0; k < g.size(); ++k) seen[k][row[k] - 1] = 1;
  for (const auto& s : seen)
    for (char c : s)
      if (!c) return false;
  return true;
}

FactorDesign design_from_rows(std::vector<std::vector<int>> rows,
                              const std::vector<int>& g) {
  FactorDesign d;
  for (int levels : g) d.factors.push_back({levels, 1});
  d.assignment = std::move(rows);
  validate_design(d);
  return d;
}

}  // namespace

FactorDesign gen_mcar(int k_factors, const std::vector<int>& g, double pi,
                      std::uint64_t seed, int max_retries) {
  if (k_factors <= 0 || static_cast<int>(g.size()) != k_factors)
    throw std::invalid_argument("gen_mcar: level counts must match factor count");
  if (!(pi > 0.0) || pi > 1.0) throw std::invalid_argument("gen_mcar: pi must be in (0,1]");
  std::int64_t cells = 1;
  int max_g = 0;
  for (int levels : g) {
    if (levels <= 0) throw std::invalid_argument("gen_mcar: non-positive level count");
    if (cells > (std::int64_t{1} << 62) / levels)
      throw std::invalid_argument("gen_mcar: contingency table too large to address");
    cells *= levels;
    max_g = std::max(max_g, levels);
  }
  Rng rng = make_rng(seed, 17);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::int64_t n = std::binomial_distribution<std::int64_t>(cells, pi)(rng);
    // Sample n distinct cell ids, then decode mixed-radix to level tuples.
    std::set<std::int64_t> ids;
    std::uniform_int_distribution<std::int64_t> pick(0, cells - 1);
    while (static_cast<std::int64_t>(ids.size()) < n) ids.insert(pick(rng));
    std::vector<std::vector<int>> rows;
    rows.reserve(ids.size());
    for (std::int64_t id : ids) {
      std::vector<int> row(k_factors);
      for (int k = k_factors - 1; k >= 0; --k) {
        row[k] = static_cast<int>(id % g[k]) + 1;
        id /= g[k];
      }
      rows.push_back(std::move(row));
    }
    if (all_levels_covered(rows, g)) return design_from_rows(std::move(rows), g);
  }
  throw InfeasibleDesign(
      "gen_mcar: could not cover every level in " + std::to_string(max_retries) +
      " attempts (expected N = " + std::to_string(pi * static_cast<double>(cells)) +
      ", largest factor has " + std::to_string(max_g) + " levels)");
}

FactorDesign gen_er_bipartite(int g1, int g2, double pi, std::uint64_t seed,
                              int max_retries) {
  return gen_mcar(2, {g1, g2}, pi, seed, max_retries);
}

FactorDesign gen_biregular_bipartite(int g1, int g2, int d1, int d2,
                                     std::uint64_t seed, int max_restarts) {
  if (g1 <= 0 || g2 <= 0 || d1 <= 0 || d2 <= 0)
    throw std::invalid_argument("gen_biregular_bipartite: non-positive parameter");
  if (static_cast<std::int64_t>(g1) * d1 != static_cast<std::int64_t>(g2) * d2)
    throw InfeasibleDesign("gen_biregular_bipartite: handshake violated, " +
                           std::to_string(g1) + "*" + std::to_string(d1) +
                           " != " + std::to_string(g2) + "*" + std::to_string(d2));
  if (d1 > g2 || d2 > g1)
    throw InfeasibleDesign("gen_biregular_bipartite: degree exceeds opposite side");
  const int n = g1 * d1;
  Rng rng = make_rng(seed, 23);
  std::vector<int> left(n), right(n);
  for (int v = 0; v < g1; ++v)
    std::fill_n(left.begin() + static_cast<std::ptrdiff_t>(v) * d1, d1, v);
  for (int v = 0; v < g2; ++v)
    std::fill_n(right.begin() + static_cast<std::ptrdiff_t>(v) * d2, d2, v);

  auto key = [&](int a, int b) { return static_cast<std::int64_t>(a) * g2 + b; };
  for (int restart = 0; restart < max_restarts; ++restart) {
    std::shuffle(right.begin(), right.end(), rng);
    std::map<std::int64_t, int> mult;
    for (int e = 0; e < n; ++e) ++mult[key(left[e], right[e])];
    auto excess = [&]() {
      std::int64_t s = 0;
      for (auto& [k, c] : mult) s += c - 1;
      return s;
    };
    // Repair parallel edges by random degree-preserving double switches:
    // (a,b),(c,d) -> (a,d),(c,b), accepted when total multiplicity never grows.
    std::int64_t bad = excess();
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::int64_t budget = 200ll * n + 10000;
    while (bad > 0 && budget-- > 0) {
      int e = pick(rng), f = pick(rng);
      int a = left[e], b = right[e], c = left[f], d = right[f];
      if (a == c || b == d) continue;
      if (mult[key(a, b)] < 2 && mult[key(c, d)] < 2) continue;
      int delta = 0;
      delta -= (mult[key(a, b)] >= 2) + (mult[key(c, d)] >= 2);
      delta += (mult.count(key(a, d)) && mult[key(a, d)] >= 1) +
               (mult.count(key(c, b)) && mult[key(c, b)] >= 1);
      if (delta > 0) continue;
      --mult[key(a, b)];
      if (mult[key(a, b)] == 0) mult.erase(key(a, b));
      --mult[key(c, d)];
      if (mult[key(c, d)] == 0) mult.erase(key(c, d));
      ++mult[key(a, d)];
      ++mult[key(c, b)];
      right[e] = d;
      right[f] = b;
      bad += delta;
    }
    if (bad == 0) {
      std::vector<std::vector<int>> rows;
      rows.reserve(n);
      for (int e = 0; e < n; ++e) rows.push_back({left[e] + 1, right[e] + 1});
      std::sort(rows.begin(), rows.end());
      return design_from_rows(std::move(rows), {g1, g2});
    }
  }
  throw InfeasibleDesign("gen_biregular_bipartite: no simple realization found after " +
                         std::to_string(max_restarts) + " rematches (G1=" +
                         std::to_string(g1) + ", d1=" + std::to_string(d1) + ")");
}

FactorDesign gen_worst_case(int g, int d) {
  if (d < 2) throw std::invalid_argument("gen_worst_case: d must be >= 2");
  if (g <= d) throw InfeasibleDesign("gen_worst_case: requires G > d");
  const int m = g - 1;  // window arithmetic wraps modulo G-1
  auto in_window = [&](int value, int lo) {
    int rel = ((value - lo) % m + m) % m;
    return rel < d;
  };
  std::vector<std::vector<int>> rows;
  std::vector<int> deg2(g + 1, 0);
  auto connect = [&](int a, int b) {
    rows.push_back({a, b});
    ++deg2[b];
  };
  for (int gg = 1; gg <= g - 1; ++gg) {
    for (int j = 1; j <= g; ++j) {
      if (gg == j)
        connect(gg, j);  // (a)
      else if (gg < j && in_window(j - 2, d * (gg - 1)))
        connect(gg, j);  // (b)
      else if (gg > j && in_window(j - 1, d * (gg - 1)))
        connect(gg, j);  // (c)
    }
  }
  for (int j = 1; j <= g; ++j)
    if (deg2[j] <= d) connect(g, j);  // last level adopts all low-degree partners
  std::sort(rows.begin(), rows.end());
  return design_from_rows(std::move(rows), {g, g});
}

FactorDesign gen_pairwise_disconnected(int g) {
  if (g < 2) throw std::invalid_argument("gen_pairwise_disconnected: G must be >= 2");
  std::vector<std::vector<int>> rows;
  rows.reserve(static_cast<size_t>(g) * g);
  for (int i = 1; i <= g * g; ++i) {
    int shared = (i + g - 1) / g;  // ceil(i/G)
    int third = (i % g) + 1;
    rows.push_back({shared, shared, third});
  }
  return design_from_rows(std::move(rows), {g, g, g});
}

FactorDesign gen_connected_null_example() {
  return design_from_rows({{1, 1, 2}, {2, 2, 2}, {2, 1, 1}}, {2, 2, 2});
}

FactorDesign add_interaction(const FactorDesign& d, int k, int h) {
  if (k == h) throw std::invalid_argument("add_interaction: factors must differ");
  if (k < 0 || h < 0 || k >= d.n_factors() || h >= d.n_factors())
    throw std::invalid_argument("add_interaction: factor index out of range");
  std::map<std::pair<int, int>, int> index;  // observed pair -> dense level id
  for (const auto& row : d.assignment) {
    std::pair<int, int> pair{row[k], row[h]};
    index.emplace(pair, static_cast<int>(index.size()) + 1);
  }
  FactorDesign out = d;
  out.factors.push_back({static_cast<int>(index.size()), 1});
  if (!out.covariates.empty()) out.covariates.emplace_back();
  for (auto& row : out.assignment) row.push_back(index.at({row[k], row[h]}));
  validate_design(out);
  return out;
}

FactorDesign add_nested(const FactorDesign& d, int parent_k,
                        const std::vector<int>& group_of_level) {
  if (parent_k < 0 || parent_k >= d.n_factors())
    throw std::invalid_argument("add_nested: factor index out of range");
  if (static_cast<int>(group_of_level.size()) != d.factors[parent_k].levels)
    throw std::invalid_argument("add_nested: group map must cover every parent level");
  int groups = 0;
  for (int gid : group_of_level) {
    if (gid < 1) throw std::invalid_argument("add_nested: group ids are 1-based");
    groups = std::max(groups, gid);
  }
  FactorDesign out = d;
  out.factors.push_back({groups, 1});
  if (!out.covariates.empty()) out.covariates.emplace_back();
  for (auto& row : out.assignment) row.push_back(group_of_level[row[parent_k] - 1]);
  validate_design(out);
  return out;
}

FactorDesign add_random_slope(const FactorDesign& d, int k, const VectorXd& x) {
  if (k < 0 || k >= d.n_factors())
    throw std::invalid_argument("add_random_slope: factor index out of range");
  if (x.size() != d.n_obs())
    throw std::invalid_argument("add_random_slope: covariate length must equal N");
  FactorDesign out = d;
  if (out.covariates.empty()) out.covariates.assign(out.n_factors(), MatrixXd());
  out.factors[k].slope_dim = 2;
  out.covariates[k].resize(d.n_obs(), 2);
  out.covariates[k].col(0).setOnes();
  out.covariates[k].col(1) = x;
  validate_design(out);
  return out;
}

}  // namespace crossed
