#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace stochcrf {

struct WeightedEdge {
    std::size_t u = 0;
    std::size_t v = 0;
    double weight = 1.0;
};

// Undirected simple graph on nodes [0, n). Edges are stored with u < v,
// sorted, without duplicates.
struct SparseGraph {
    std::size_t n = 0;
    std::vector<WeightedEdge> edges;

    std::size_t edge_count() const { return edges.size(); }
    // Throws construction error if an invariant is broken.
    void validate() const;
};

// G(n, p): every pair independently with probability p.
SparseGraph gen_gnp(std::size_t n, double p, std::uint64_t seed);

// G(n, m): exactly m distinct edges, uniform over edge sets.
SparseGraph gen_gnm(std::size_t n, std::size_t m, std::uint64_t seed);

// G(n, p_ij): pair (i, j), i < j, independently with probability p(i, j).
SparseGraph gen_gnpij(std::size_t n, const std::function<double(std::size_t, std::size_t)>& p, std::uint64_t seed);

// Components ordered by smallest member, members ascending.
std::vector<std::vector<std::size_t>> connected_components(const SparseGraph& g);

std::size_t largest_component_size(const SparseGraph& g);
inline bool is_connected(const SparseGraph& g) { return g.n <= 1 || largest_component_size(g) == g.n; }

struct SparsificationBounds {
    std::size_t n = 0;
    double epsilon = 1.0;
    double p_lower = 0.0;       // ln(n)/n: connectedness
    double p_upper = 0.0;       // ln(n)/(n eps^2): cut preservation
    double degree_lower = 0.0;  // ln(n)
    double max_edges = 0.0;     // n ln(n)/eps^2
};

SparsificationBounds sparsification_bounds(std::size_t n, double epsilon);

// Keeps each edge independently with probability p. With reweight, kept edges
// carry weight/p so every cut is preserved in expectation.
SparseGraph bernoulli_sparsify(const SparseGraph& g, double p, std::uint64_t seed, bool reweight = true);

// Minimum s-t cut value of a weighted undirected graph.
double st_min_cut(const SparseGraph& g, std::size_t s, std::size_t t);

// Complete weighted graph with two planted clusters {0..n/2-1} and {n/2..n-1}:
// intra-cluster weights in [intra_lo, intra_hi], inter-cluster in [inter_lo, inter_hi].
struct PlantedClusters {
    double intra_lo = 0.75;
    double intra_hi = 1.25;
    double inter_lo = 0.0;
    double inter_hi = 0.04;
};
SparseGraph planted_two_cluster_graph(std::size_t n, const PlantedClusters& weights, std::uint64_t seed);

struct RegimeSummary {
    std::size_t n = 0;
    double p = 0.0;
    std::size_t trials = 0;
    double fraction_connected = 0.0;
    double mean_largest_component = 0.0;
    // Trials whose largest component has fewer than 10 ln(n) nodes.
    double fraction_small_components = 0.0;
};

// Monte-Carlo over seeds base_seed .. base_seed + trials - 1.
RegimeSummary gnp_regime(std::size_t n, double p, std::size_t trials, std::uint64_t base_seed);

} // namespace stochcrf
