#include "stochcrf/inference.hpp"

#include "stochcrf/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace stochcrf {

FlowNetwork::FlowNetwork(std::size_t nodes) : nodes_(nodes) {}

void FlowNetwork::add_terminal(std::size_t i, double source_cap, double sink_cap) {
    if (i >= nodes_.size()) throw Error(ErrorKind::Construction, "terminal arc on unknown node");
    if (!(source_cap >= 0.0) || !(sink_cap >= 0.0)) throw Error(ErrorKind::Construction, "negative terminal capacity");
    Node& n = nodes_[i];
    n.source_cap += source_cap;
    n.sink_cap += sink_cap;
    // Route min(cs, ct) directly; only the difference stays as residual.
    double cs = source_cap;
    double ct = sink_cap;
    if (n.tr_cap > 0.0)
        cs += n.tr_cap;
    else
        ct -= n.tr_cap;
    preflow_ += std::min(cs, ct);
    n.tr_cap = cs - ct;
    n.tr_cap0 = n.tr_cap;
}

void FlowNetwork::add_edge(std::size_t i, std::size_t j, double cap_ij, double cap_ji) {
    if (i >= nodes_.size() || j >= nodes_.size() || i == j) throw Error(ErrorKind::Construction, "invalid arc endpoints");
    if (!(cap_ij >= 0.0) || !(cap_ji >= 0.0)) throw Error(ErrorKind::Construction, "negative arc capacity");
    const std::size_t a = arcs_.size();
    arcs_.push_back({j, nodes_[i].first, a + 1, cap_ij, cap_ij});
    arcs_.push_back({i, nodes_[j].first, a, cap_ji, cap_ji});
    nodes_[i].first = a;
    nodes_[j].first = a + 1;
}

double FlowNetwork::cut_capacity(const std::vector<std::uint8_t>& source_side) const {
    double cut = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (source_side[i])
            cut += nodes_[i].sink_cap;
        else
            cut += nodes_[i].source_cap;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!source_side[i]) continue;
        for (std::size_t a = nodes_[i].first; a != kNone; a = arcs_[a].next)
            if (!source_side[arcs_[a].head]) cut += arcs_[a].cap;
    }
    return cut;
}

double FlowNetwork::conservation_residual(std::size_t i) const {
    const Node& n = nodes_[i];
    double net_out = 0.0;
    for (std::size_t a = n.first; a != kNone; a = arcs_[a].next) net_out += arcs_[a].cap - arcs_[a].residual;
    // Terminal inflow minus outflow equals the drop in residual terminal capacity.
    return (n.tr_cap0 - n.tr_cap) - net_out;
}

class MaxFlowSolver {
public:
    explicit MaxFlowSolver(FlowNetwork& net)
        : net_(net), arcs_(net.arcs_), n_(net.nodes_.size()), state_(n_) {}

    MaxFlowResult run();

private:
    static constexpr std::size_t kNone = FlowNetwork::kNone;
    static constexpr std::size_t kTerminal = kNone - 1;
    static constexpr std::size_t kOrphan = kNone - 2;
    static constexpr int kInfiniteDist = std::numeric_limits<int>::max();

    struct State {
        std::size_t parent = kNone;  // arc toward the parent, or a sentinel
        bool is_sink = false;
        bool active = false;
        long timestamp = 0;
        int dist = 0;
    };

    double& tr_cap(std::size_t i) { return net_.nodes_[i].tr_cap; }
    std::size_t first(std::size_t i) const { return net_.nodes_[i].first; }
    bool has_parent(std::size_t i) const { return state_[i].parent != kNone; }

    void set_active(std::size_t i) {
        if (!state_[i].active) {
            state_[i].active = true;
            active_.push_back(i);
        }
    }
    std::size_t next_active() {
        while (!active_.empty()) {
            const std::size_t i = active_.front();
            active_.pop_front();
            state_[i].active = false;
            if (has_parent(i)) return i;
        }
        return kNone;
    }
    void set_orphan_front(std::size_t i) {
        state_[i].parent = kOrphan;
        orphans_.push_front(i);
    }
    void set_orphan_rear(std::size_t i) {
        state_[i].parent = kOrphan;
        orphans_.push_back(i);
    }

    void augment(std::size_t bridge);
    void process_orphan(std::size_t i, bool sink_tree);

    FlowNetwork& net_;
    std::vector<FlowNetwork::Arc>& arcs_;
    std::size_t n_;
    std::vector<State> state_;
    std::deque<std::size_t> active_;
    std::deque<std::size_t> orphans_;
    double flow_ = 0.0;
    long time_ = 0;
};

void MaxFlowSolver::augment(std::size_t bridge) {
    // bridge runs from a source-tree node to a sink-tree node.
    double bottleneck = arcs_[bridge].residual;
    std::size_t i = arcs_[arcs_[bridge].sister].head;
    for (;;) {
        const std::size_t a = state_[i].parent;
        if (a == kTerminal) break;
        bottleneck = std::min(bottleneck, arcs_[arcs_[a].sister].residual);
        i = arcs_[a].head;
    }
    bottleneck = std::min(bottleneck, tr_cap(i));
    i = arcs_[bridge].head;
    for (;;) {
        const std::size_t a = state_[i].parent;
        if (a == kTerminal) break;
        bottleneck = std::min(bottleneck, arcs_[a].residual);
        i = arcs_[a].head;
    }
    bottleneck = std::min(bottleneck, -tr_cap(i));

    arcs_[arcs_[bridge].sister].residual += bottleneck;
    arcs_[bridge].residual -= bottleneck;

    i = arcs_[arcs_[bridge].sister].head;
    for (;;) {
        const std::size_t a = state_[i].parent;
        if (a == kTerminal) break;
        arcs_[a].residual += bottleneck;
        arcs_[arcs_[a].sister].residual -= bottleneck;
        if (arcs_[arcs_[a].sister].residual <= 0.0) set_orphan_front(i);
        i = arcs_[a].head;
    }
    tr_cap(i) -= bottleneck;
    if (tr_cap(i) <= 0.0) {
        tr_cap(i) = 0.0;
        set_orphan_front(i);
    }

    i = arcs_[bridge].head;
    for (;;) {
        const std::size_t a = state_[i].parent;
        if (a == kTerminal) break;
        arcs_[arcs_[a].sister].residual += bottleneck;
        arcs_[a].residual -= bottleneck;
        if (arcs_[a].residual <= 0.0) set_orphan_front(i);
        i = arcs_[a].head;
    }
    tr_cap(i) += bottleneck;
    if (tr_cap(i) >= 0.0) {
        tr_cap(i) = 0.0;
        set_orphan_front(i);
    }

    flow_ += bottleneck;
}

void MaxFlowSolver::process_orphan(std::size_t i, bool sink_tree) {
    // Residual capacity usable to reach i's tree root through neighbor j.
    auto usable = [&](std::size_t a0) {
        return sink_tree ? arcs_[a0].residual : arcs_[arcs_[a0].sister].residual;
    };

    std::size_t best_arc = kNone;
    int best_dist = kInfiniteDist;
    for (std::size_t a0 = first(i); a0 != kNone; a0 = arcs_[a0].next) {
        if (!(usable(a0) > 0.0)) continue;
        std::size_t j = arcs_[a0].head;
        if (state_[j].is_sink != sink_tree || !has_parent(j)) continue;

        // Walk to the root to check j's origin is a terminal.
        int d = 0;
        for (;;) {
            if (state_[j].timestamp == time_) {
                d += state_[j].dist;
                break;
            }
            const std::size_t a = state_[j].parent;
            ++d;
            if (a == kTerminal) {
                state_[j].timestamp = time_;
                state_[j].dist = 1;
                break;
            }
            if (a == kOrphan) {
                d = kInfiniteDist;
                break;
            }
            j = arcs_[a].head;
        }
        if (d == kInfiniteDist) continue;
        if (d < best_dist) {
            best_arc = a0;
            best_dist = d;
        }
        for (j = arcs_[a0].head; state_[j].timestamp != time_; j = arcs_[state_[j].parent].head) {
            state_[j].timestamp = time_;
            state_[j].dist = d--;
        }
    }

    state_[i].parent = best_arc;
    if (best_arc != kNone) {
        state_[i].timestamp = time_;
        state_[i].dist = best_dist + 1;
        return;
    }

    // No valid parent: i becomes free; children become orphans.
    for (std::size_t a0 = first(i); a0 != kNone; a0 = arcs_[a0].next) {
        const std::size_t j = arcs_[a0].head;
        const std::size_t a = state_[j].parent;
        if (state_[j].is_sink != sink_tree || a == kNone) continue;
        if (usable(a0) > 0.0) set_active(j);
        if (a != kTerminal && a != kOrphan && arcs_[a].head == i) set_orphan_rear(j);
    }
}

MaxFlowResult MaxFlowSolver::run() {
    for (std::size_t i = 0; i < n_; ++i) {
        State& s = state_[i];
        if (tr_cap(i) > 0.0) {
            s.is_sink = false;
            s.parent = kTerminal;
            s.dist = 1;
            set_active(i);
        } else if (tr_cap(i) < 0.0) {
            s.is_sink = true;
            s.parent = kTerminal;
            s.dist = 1;
            set_active(i);
        }
    }

    std::size_t current = kNone;
    for (;;) {
        std::size_t i = current;
        if (i != kNone && !has_parent(i)) i = kNone;
        if (i == kNone) {
            i = next_active();
            if (i == kNone) break;
        }

        std::size_t bridge = kNone;
        if (!state_[i].is_sink) {
            for (std::size_t a = first(i); a != kNone; a = arcs_[a].next) {
                if (!(arcs_[a].residual > 0.0)) continue;
                const std::size_t j = arcs_[a].head;
                State& sj = state_[j];
                if (!has_parent(j)) {
                    sj.is_sink = false;
                    sj.parent = arcs_[a].sister;
                    sj.timestamp = state_[i].timestamp;
                    sj.dist = state_[i].dist + 1;
                    set_active(j);
                } else if (sj.is_sink) {
                    bridge = a;
                    break;
                } else if (sj.timestamp <= state_[i].timestamp && sj.dist > state_[i].dist) {
                    sj.parent = arcs_[a].sister;
                    sj.timestamp = state_[i].timestamp;
                    sj.dist = state_[i].dist + 1;
                }
            }
        } else {
            for (std::size_t a = first(i); a != kNone; a = arcs_[a].next) {
                if (!(arcs_[arcs_[a].sister].residual > 0.0)) continue;
                const std::size_t j = arcs_[a].head;
                State& sj = state_[j];
                if (!has_parent(j)) {
                    sj.is_sink = true;
                    sj.parent = arcs_[a].sister;
                    sj.timestamp = state_[i].timestamp;
                    sj.dist = state_[i].dist + 1;
                    set_active(j);
                } else if (!sj.is_sink) {
                    bridge = arcs_[a].sister;
                    break;
                } else if (sj.timestamp <= state_[i].timestamp && sj.dist > state_[i].dist) {
                    sj.parent = arcs_[a].sister;
                    sj.timestamp = state_[i].timestamp;
                    sj.dist = state_[i].dist + 1;
                }
            }
        }

        ++time_;
        if (bridge == kNone) {
            current = kNone;
            continue;
        }

        current = i;
        augment(bridge);
        while (!orphans_.empty()) {
            const std::size_t o = orphans_.front();
            orphans_.pop_front();
            process_orphan(o, state_[o].is_sink);
        }
    }

    MaxFlowResult result;
    result.flow = flow_ + net_.preflow_;
    result.source_side.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) result.source_side[i] = !(has_parent(i) && state_[i].is_sink);
    return result;
}

MaxFlowResult max_flow(FlowNetwork& net) { return MaxFlowSolver(net).run(); }

FlowNetwork build_st_graph(const EnergyModel& em) {
    FlowNetwork net(em.node_count());
    for (std::size_t i = 0; i < em.node_count(); ++i) {
        double c0 = em.unary()[i].background;
        double c1 = em.unary()[i].foreground;
        // Capacities must be non-negative; shift both labels by the same constant.
        const double m = std::min(c0, c1);
        if (m < 0.0) {
            c0 -= m;
            c1 -= m;
            net.add_offset(m);
        }
        net.add_terminal(i, c0, c1);
    }
    auto add_terms = [&](const std::vector<PairTerm>& terms, double lambda) {
        for (const auto& t : terms) {
            const double cap = lambda * t.theta;
            if (cap < 0.0) throw Error(ErrorKind::Construction, "negative pairwise capacity");
            net.add_edge(t.i, t.j, cap, cap);
        }
    };
    add_terms(em.local_terms(), em.lambda_local());
    add_terms(em.long_terms(), em.lambda_long());
    return net;
}

SegmentationMask extract_labels(const MaxFlowResult& result, int width, int height) {
    if (result.source_side.size() != static_cast<std::size_t>(width) * height)
        throw Error(ErrorKind::DimensionMismatch, "partition does not match mask dimensions");
    SegmentationMask mask(width, height);
    mask.labels = result.source_side;
    return mask;
}

BruteForceResult brute_force_min_energy(const EnergyModel& em) {
    const std::size_t n = em.node_count();
    if (n > kBruteForceMaxNodes) throw Error(ErrorKind::Refusal, "brute force limited to 20 nodes");
    BruteForceResult best{std::numeric_limits<double>::infinity(), std::vector<std::uint8_t>(n, 0)};
    std::vector<std::uint8_t> labels(n);
    // Counting with node 0 as the most significant bit visits labelings in
    // lexicographic order, so the first strict minimum wins ties.
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) {
        for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::uint8_t>((code >> (n - 1 - i)) & 1U);
        const double e = total_energy(em, labels);
        if (e < best.energy) {
            best.energy = e;
            best.labels = labels;
        }
    }
    return best;
}

BruteForceResult solve_min_cut(const EnergyModel& em) {
    FlowNetwork net = build_st_graph(em);
    MaxFlowResult r = max_flow(net);
    return {total_energy(em, r.source_side), std::move(r.source_side)};
}

} // namespace stochcrf
