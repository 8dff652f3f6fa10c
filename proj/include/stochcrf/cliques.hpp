#pragma once

#include "stochcrf/divergence.hpp"
#include "stochcrf/field_model.hpp"
#include "stochcrf/random_graph.hpp"
#include "stochcrf/rng.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace stochcrf {

using Position = std::array<double, 2>;  // (row, col) scaled to [0,1]

std::vector<Position> node_positions(int width, int height);

// Partition of the nodes into q groups of similar statistics and nearby
// positions, used to approximate node-to-group connectivity by the group mean.
struct ClusterModel {
    std::size_t q = 0;
    std::vector<std::uint32_t> assignment;
    std::vector<double> centroid_stats;  // q * stats dim
    std::vector<Position> centroid_pos;
    std::vector<std::vector<std::size_t>> members;  // ascending node ids
    double objective = 0.0;
    std::vector<double> objective_trace;  // after init and after every accepted iteration
    int iterations = 0;

    std::shared_ptr<const StatsField> stats;
    // Lattice width used to exclude 4-neighborhood pairs from sampling;
    // 0 when nodes do not live on a grid.
    int grid_width = 0;

    std::size_t node_count() const { return assignment.size(); }
    StatsView centroid(std::size_t c) const;
};

inline constexpr int kMaxClusterIterations = 50;
inline constexpr std::size_t kDefaultClusterCount = 500;

// Lloyd-style alternation on sum_c sum_{j in c} (|S_j - mu_S,c| + |p_j - mu_p,c|)
// (unsquared norms). Centroids are always the member means; an update that
// would raise the objective is rolled back and ends the iteration.
ClusterModel cluster_nodes(std::shared_ptr<const StatsField> stats, std::span<const Position> positions,
                           std::size_t q, std::uint64_t seed, int grid_width = 0);

// Sum of unsquared feature distances to the assigned centroids.
double cluster_objective(const StatsField& stats, std::span<const Position> positions,
                         std::span<const std::uint32_t> assignment, std::span<const double> centroid_stats,
                         std::span<const Position> centroid_pos);

// F(l, c) = connectivity(divergence(S_l, centroid_c)): the centroid proxy for
// the expected connectivity between node l and the members of c.
double cluster_connectivity(std::size_t l, std::size_t c, const ClusterModel& model, const DivergenceKind& div);

// Batched evaluation of cluster_connectivity for one node against every
// cluster, with divergence-specific precomputation.
class AbstractedConnectivity {
public:
    AbstractedConnectivity(const ClusterModel& model, const DivergenceKind& div);
    void row(std::size_t l, std::span<double> out) const;
    double operator()(std::size_t l, std::size_t c) const;

private:
    const ClusterModel& model_;
    DivergenceKind div_;
    std::size_t dim_;
    std::vector<double> centroid_terms_;  // log or sqrt of centroids, per divergence
    std::vector<double> centroid_self_;   // per-cluster scalar term
    std::vector<double> node_terms_;      // sqrt of node stats (Hellinger)
    std::vector<double> node_self_;       // per-node scalar term
};

// Members of c that node l owns as sampling candidates: index above l and
// not a 4-neighbor of l.
std::size_t candidate_count(const ClusterModel& model, std::size_t l, std::size_t c);

// Stochastic inclusion test: [F >= gamma * U(0,1)].
inline bool stochastic_indicator(double f, double gamma, Rng& rng) { return f >= gamma * uniform_open01(rng); }

inline double connection_probability(double f, double gamma) { return f >= gamma ? 1.0 : (f > 0.0 ? f / gamma : 0.0); }

// Expected mean long-range degree for a sparsity factor gamma under the
// sampler's owner rule.
double expected_mean_degree(const ClusterModel& model, const DivergenceKind& div, double gamma);

// Sparsity factor whose expected mean long-range degree equals target_degree.
double calibrate_gamma(const ClusterModel& model, const DivergenceKind& div, double target_degree);

struct LongRangeClique {
    std::size_t i = 0;
    std::size_t j = 0;
    double connectivity = 0.0;
};

struct CliqueSet {
    std::vector<LongRangeClique> long_range;  // i < j, sorted
    double gamma = 0.0;
    std::uint64_t seed = 0;
    double expected_degree_target = 0.0;

    std::size_t size() const { return long_range.size(); }
    std::vector<NodePair> pairs() const;
};

// Per owner node l and cluster c: Binomial(candidates, min(F/gamma, 1)) edges,
// drawn uniformly among the candidates. Each owner uses its own RNG stream.
CliqueSet sample_cliques(const ClusterModel& model, const DivergenceKind& div, double gamma, std::uint64_t seed);

// Throws construction error on self-pairs, duplicates or 4-neighborhood pairs.
void validate_clique_set(const CliqueSet& cs, std::size_t n, int grid_width);

void write_clique_csv(std::ostream& out, const CliqueSet& cs);

struct DegreeReport {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    double mean_degree = 0.0;
    std::size_t min_degree = 0;
    std::size_t max_degree = 0;
    double implied_p = 0.0;  // mean_degree / (n - 1)
    SparsificationBounds bounds;
    bool below_connectedness = false;  // implied_p < p_lower
    bool above_cut_bound = false;      // implied_p > p_upper
};

DegreeReport degree_report(const CliqueSet& cs, std::size_t n, double epsilon);

} // namespace stochcrf
