#pragma once

#include "stochcrf/energy.hpp"
#include "stochcrf/image.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace stochcrf {

// s-t network over n non-terminal nodes. Terminal capacities are stored per
// node; inter-node arcs come in sister pairs with residual bookkeeping.
class FlowNetwork {
public:
    explicit FlowNetwork(std::size_t nodes = 0);

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t arc_count() const { return arcs_.size(); }

    // Adds capacity on s->i and i->t.
    void add_terminal(std::size_t i, double source_cap, double sink_cap);
    // Adds arcs i->j (cap_ij) and j->i (cap_ji).
    void add_edge(std::size_t i, std::size_t j, double cap_ij, double cap_ji);

    // Constant added to the cut value to recover the energy.
    double offset() const { return offset_; }
    void add_offset(double c) { offset_ += c; }

    // Sum of original capacities on arcs leaving the source side.
    double cut_capacity(const std::vector<std::uint8_t>& source_side) const;

    // Net flow imbalance at node i after a solve; zero when flow is conserved.
    double conservation_residual(std::size_t i) const;

private:
    friend class MaxFlowSolver;

    struct Arc {
        std::size_t head;
        std::size_t next;  // next arc out of the same tail
        std::size_t sister;
        double cap;
        double residual;
    };
    struct Node {
        std::size_t first = kNone;
        double source_cap = 0.0;
        double sink_cap = 0.0;
        double tr_cap0 = 0.0;  // source_cap - sink_cap before solving
        double tr_cap = 0.0;   // residual terminal capacity (>0 source, <0 sink)
    };
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

    std::vector<Node> nodes_;
    std::vector<Arc> arcs_;
    double preflow_ = 0.0;  // flow routed straight s->i->t at construction
    double offset_ = 0.0;
};

struct MaxFlowResult {
    double flow = 0.0;
    // 1 = source side. Nodes reachable from neither terminal in the residual
    // graph are placed on the source side.
    std::vector<std::uint8_t> source_side;
};

// Boykov-Kolmogorov augmenting paths with search-tree reuse. Consumes the
// network's residual capacities; deterministic for a fixed arc order.
MaxFlowResult max_flow(FlowNetwork& net);

// Terminal arcs carry unary costs (s->i = cost of background, i->t = cost of
// foreground); each pairwise term adds symmetric arcs of capacity lambda*theta.
FlowNetwork build_st_graph(const EnergyModel& em);

// Source side becomes foreground (1).
SegmentationMask extract_labels(const MaxFlowResult& result, int width, int height);

struct BruteForceResult {
    double energy = 0.0;
    std::vector<std::uint8_t> labels;
};

inline constexpr std::size_t kBruteForceMaxNodes = 20;

// Exhaustive minimum over all 2^n labelings; ties go to the lexicographically
// smallest labeling.
BruteForceResult brute_force_min_energy(const EnergyModel& em);

// Convenience: build, solve, and return the minimizing labeling and its energy.
BruteForceResult solve_min_cut(const EnergyModel& em);

} // namespace stochcrf
