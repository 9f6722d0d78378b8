#pragma once

// Design generators: random contingency tables, random biregular bipartite
// graphs, two deterministic stress designs, a small three-factor example with
// redundant columns despite pairwise connectivity, and design modifiers
// (interactions, nested groupings, random slopes).

#include "crossed/design.hpp"
#include "crossed/rng.hpp"

#include <cstdint>
#include <vector>

namespace crossed {

// Each of the prod(G) cells of the K-way contingency table is observed
// independently with probability pi.  Designs leaving some level unobserved
// are redrawn as a whole (the conditional law stays clean); after
// `max_retries` failures an InfeasibleDesign error is raised.
FactorDesign gen_mcar(int k_factors, const std::vector<int>& g, double pi,
                      std::uint64_t seed, int max_retries = 100);

// gen_mcar restricted to two factors (random bipartite graph).
FactorDesign gen_er_bipartite(int g1, int g2, double pi, std::uint64_t seed,
                              int max_retries = 100);

// Uniform-ish random bipartite graph where every factor-1 level has degree
// exactly d1 and every factor-2 level degree d2 (requires the handshake
// g1*d1 == g2*d2).  Configuration-model stub matching; multi-edges are
// resolved by random degree-preserving edge switches, with a full rematch when
// a repair stalls and an error once `max_restarts` rematches are exhausted.
FactorDesign gen_biregular_bipartite(int g1, int g2, int d1, int d2,
                                     std::uint64_t seed, int max_restarts = 200);

// Deterministic two-factor design of G levels each whose conditional
// independence graph is an expander-like gadget: sparse (degree about d+1)
// yet forcing quadratic fill-in under any elimination order.
FactorDesign gen_worst_case(int g, int d);

// Three factors, G levels each, N = G^2: factors 1 and 2 always share the
// level ceil(i/G) (their pairwise graph splits into G components) while
// factor 3 cycles through all levels (fully connected to both).
FactorDesign gen_pairwise_disconnected(int g);

// Fixed three-factor, two-level, three-observation design: all three pairwise
// graphs are connected, yet U^(r) still has a 3-dimensional null space.
FactorDesign gen_connected_null_example();

// Appends a factor whose level is the observed (factor k, factor h) level
// pair, re-indexed densely over pairs that actually occur.
FactorDesign add_interaction(const FactorDesign& d, int k, int h);

// Appends a grouping factor: observation i gets group_of_level[g_k[i] - 1]
// (1-based group ids, contiguous).  A single group is allowed but collinear
// with the intercept.
FactorDesign add_nested(const FactorDesign& d, int parent_k,
                        const std::vector<int>& group_of_level);

// Widens factor k to a slope block (1, x_i) per observation.
FactorDesign add_random_slope(const FactorDesign& d, int k, const VectorXd& x);

}  // namespace crossed
