#include "stochcrf/random_graph.hpp"

#include "stochcrf/error.hpp"
#include "stochcrf/inference.hpp"
#include "stochcrf/parallel.hpp"
#include "stochcrf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <unordered_set>

namespace stochcrf {

namespace {

std::uint64_t pair_count(std::size_t n) { return static_cast<std::uint64_t>(n) * (n - (n > 0)) / 2; }

// Pair index k enumerates (i, j), i < j, row by row: (0,1), (0,2), ..., (1,2), ...
std::pair<std::size_t, std::size_t> pair_from_index(std::uint64_t k, std::size_t n) {
    // Row i starts at i*n - i*(i+1)/2. Invert with a floating estimate, then fix up.
    const double nn = static_cast<double>(n);
    auto row_start = [n](std::uint64_t i) { return i * n - i * (i + 1) / 2; };
    auto i = static_cast<std::uint64_t>(
        std::floor(((2.0 * nn - 1.0) - std::sqrt((2.0 * nn - 1.0) * (2.0 * nn - 1.0) - 8.0 * static_cast<double>(k))) / 2.0));
    while (i > 0 && row_start(i) > k) --i;
    while (row_start(i + 1) <= k) ++i;
    const std::uint64_t j = k - row_start(i) + i + 1;
    return {static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
}

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        // Smaller index becomes the root.
        if (a == b) return;
        if (a < b)
            parent_[b] = a;
        else
            parent_[a] = b;
    }

private:
    std::vector<std::size_t> parent_;
};

} // namespace

void SparseGraph::validate() const {
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        if (e.u >= n || e.v >= n) throw Error(ErrorKind::Construction, "edge endpoint out of range");
        if (e.u == e.v) throw Error(ErrorKind::Construction, "self-loop");
        if (e.u > e.v) throw Error(ErrorKind::Construction, "edge not normalized (u < v)");
        if (k > 0 && !(std::tie(edges[k - 1].u, edges[k - 1].v) < std::tie(e.u, e.v)))
            throw Error(ErrorKind::Construction, "duplicate or unsorted edge");
        if (!(e.weight > 0.0)) throw Error(ErrorKind::Construction, "edge weight must be positive");
    }
}

SparseGraph gen_gnp(std::size_t n, double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::Domain, "p must lie in [0,1]");
    if (n < 1) throw Error(ErrorKind::Domain, "n must be at least 1");
    SparseGraph g{n, {}};
    const std::uint64_t total = pair_count(n);
    if (p == 0.0 || total == 0) return g;
    if (p == 1.0) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) g.edges.push_back({i, j, 1.0});
        return g;
    }
    // Geometric skipping over the pair index: gaps between kept pairs are
    // Geometric(p), which is equivalent to one Bernoulli(p) per pair.
    Rng rng = derived_rng(seed, 0);
    const double log_q = std::log1p(-p);
    g.edges.reserve(static_cast<std::size_t>(static_cast<double>(total) * p * 1.1) + 16);
    std::uint64_t k = 0;
    for (;;) {
        const double skip = std::floor(std::log(uniform_open01(rng)) / log_q);
        if (skip >= static_cast<double>(total - k)) break;
        k += static_cast<std::uint64_t>(skip);
        auto [i, j] = pair_from_index(k, n);
        g.edges.push_back({i, j, 1.0});
        if (++k >= total) break;
    }
    return g;
}

SparseGraph gen_gnm(std::size_t n, std::size_t m, std::uint64_t seed) {
    if (n < 1) throw Error(ErrorKind::Domain, "n must be at least 1");
    const std::uint64_t total = pair_count(n);
    if (m > total) throw Error(ErrorKind::Domain, "m exceeds n(n-1)/2");
    Rng rng = derived_rng(seed, 0);
    // Floyd's sampling of m distinct pair indices.
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(m * 2);
    for (std::uint64_t r = total - m; r < total; ++r) {
        const std::uint64_t t = std::uniform_int_distribution<std::uint64_t>(0, r)(rng);
        if (!chosen.insert(t).second) chosen.insert(r);
    }
    std::vector<std::uint64_t> ks(chosen.begin(), chosen.end());
    std::sort(ks.begin(), ks.end());
    SparseGraph g{n, {}};
    g.edges.reserve(m);
    for (auto k : ks) {
        auto [i, j] = pair_from_index(k, n);
        g.edges.push_back({i, j, 1.0});
    }
    return g;
}

SparseGraph gen_gnpij(std::size_t n, const std::function<double(std::size_t, std::size_t)>& p, std::uint64_t seed) {
    if (n < 1) throw Error(ErrorKind::Domain, "n must be at least 1");
    SparseGraph g{n, {}};
    Rng rng = derived_rng(seed, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double pij = p(i, j);
            if (!(pij >= 0.0 && pij <= 1.0)) throw Error(ErrorKind::Domain, "pair probability outside [0,1]");
            if (uniform_open01(rng) < pij) g.edges.push_back({i, j, 1.0});
        }
    }
    return g;
}

std::vector<std::vector<std::size_t>> connected_components(const SparseGraph& g) {
    UnionFind uf(g.n);
    for (const auto& e : g.edges) uf.unite(e.u, e.v);
    std::vector<std::vector<std::size_t>> comps;
    std::vector<std::size_t> slot(g.n, SIZE_MAX);
    for (std::size_t v = 0; v < g.n; ++v) {
        const std::size_t root = uf.find(v);
        if (slot[root] == SIZE_MAX) {
            slot[root] = comps.size();
            comps.emplace_back();
        }
        comps[slot[root]].push_back(v);
    }
    return comps;
}

std::size_t largest_component_size(const SparseGraph& g) {
    UnionFind uf(g.n);
    for (const auto& e : g.edges) uf.unite(e.u, e.v);
    std::vector<std::size_t> sizes(g.n, 0);
    std::size_t best = 0;
    for (std::size_t v = 0; v < g.n; ++v) best = std::max(best, ++sizes[uf.find(v)]);
    return best;
}

SparsificationBounds sparsification_bounds(std::size_t n, double epsilon) {
    if (n < 2) throw Error(ErrorKind::Domain, "n must be at least 2");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw Error(ErrorKind::Domain, "epsilon must lie in (0,1]");
    const double nd = static_cast<double>(n);
    const double ln = std::log(nd);
    const double eps2 = epsilon * epsilon;
    return {n, epsilon, ln / nd, ln / (nd * eps2), ln, nd * ln / eps2};
}

SparseGraph bernoulli_sparsify(const SparseGraph& g, double p, std::uint64_t seed, bool reweight) {
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorKind::Domain, "sampling probability must lie in (0,1]");
    Rng rng = derived_rng(seed, 1);
    SparseGraph out{g.n, {}};
    for (const auto& e : g.edges)
        if (uniform_open01(rng) < p) out.edges.push_back({e.u, e.v, reweight ? e.weight / p : e.weight});
    return out;
}

double st_min_cut(const SparseGraph& g, std::size_t s, std::size_t t) {
    if (s >= g.n || t >= g.n || s == t) throw Error(ErrorKind::Domain, "invalid terminals");
    FlowNetwork net(g.n);
    const double big = 1.0 + std::accumulate(g.edges.begin(), g.edges.end(), 0.0,
                                             [](double acc, const WeightedEdge& e) { return acc + e.weight; });
    net.add_terminal(s, big, 0.0);
    net.add_terminal(t, 0.0, big);
    for (const auto& e : g.edges) net.add_edge(e.u, e.v, e.weight, e.weight);
    return max_flow(net).flow;
}

SparseGraph planted_two_cluster_graph(std::size_t n, const PlantedClusters& w, std::uint64_t seed) {
    Rng rng = derived_rng(seed, 2);
    SparseGraph g{n, {}};
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool same = (i < half) == (j < half);
            const double lo = same ? w.intra_lo : w.inter_lo;
            const double hi = same ? w.intra_hi : w.inter_hi;
            g.edges.push_back({i, j, lo + (hi - lo) * uniform_open01(rng)});
        }
    }
    return g;
}

RegimeSummary gnp_regime(std::size_t n, double p, std::size_t trials, std::uint64_t base_seed) {
    std::vector<std::size_t> largest(trials);
    parallel_blocks(trials, 1, [&](std::size_t, std::size_t b, std::size_t) {
        largest[b] = largest_component_size(gen_gnp(n, p, base_seed + b));
    });
    RegimeSummary s{n, p, trials, 0.0, 0.0, 0.0};
    if (trials == 0) return s;
    const double small_limit = 10.0 * std::log(static_cast<double>(n));
    std::size_t connected = 0;
    std::size_t small = 0;
    double sum = 0.0;
    for (auto l : largest) {
        connected += l == n;
        small += static_cast<double>(l) < small_limit;
        sum += static_cast<double>(l);
    }
    const auto t = static_cast<double>(trials);
    s.fraction_connected = connected / t;
    s.fraction_small_components = small / t;
    s.mean_largest_component = sum / t;
    return s;
}

} // namespace stochcrf
