#include "stochcrf/cliques.hpp"

#include "stochcrf/error.hpp"
#include "stochcrf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stochcrf {

std::vector<Position> node_positions(int width, int height) {
    std::vector<Position> pos(static_cast<std::size_t>(width) * height);
    const double sr = height > 1 ? 1.0 / (height - 1) : 0.0;
    const double sc = width > 1 ? 1.0 / (width - 1) : 0.0;
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) pos[static_cast<std::size_t>(r) * width + c] = {r * sr, c * sc};
    return pos;
}

StatsView ClusterModel::centroid(std::size_t c) const {
    const std::size_t dim = stats->dim();
    return {stats->kind(), stats->channels(), stats->bins(), {centroid_stats.data() + c * dim, dim}};
}

namespace {

constexpr std::size_t kNodeBlock = 1024;

double feature_distance(std::span<const double> s, const double* mu, const Position& p, const Position& mp) {
    double ss = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double d = s[k] - mu[k];
        ss += d * d;
    }
    const double dr = p[0] - mp[0];
    const double dc = p[1] - mp[1];
    return std::sqrt(ss) + std::sqrt(dr * dr + dc * dc);
}

double center_distance(const double* a, const double* b, std::size_t dim, const Position& pa, const Position& pb) {
    return feature_distance({a, dim}, b, pa, pb);
}

struct Centers {
    std::vector<double> stats;
    std::vector<Position> pos;
};

void compute_means(const StatsField& stats, std::span<const Position> positions,
                   const std::vector<std::vector<std::size_t>>& members, Centers& centers) {
    const std::size_t dim = stats.dim();
    parallel_blocks(members.size(), 64, [&](std::size_t, std::size_t c0, std::size_t c1) {
        for (std::size_t c = c0; c < c1; ++c) {
            if (members[c].empty()) continue;
            double* mu = centers.stats.data() + c * dim;
            std::fill(mu, mu + dim, 0.0);
            Position mp{0.0, 0.0};
            for (std::size_t j : members[c]) {
                auto s = stats[j].values;
                for (std::size_t k = 0; k < dim; ++k) mu[k] += s[k];
                mp[0] += positions[j][0];
                mp[1] += positions[j][1];
            }
            const double inv = 1.0 / static_cast<double>(members[c].size());
            for (std::size_t k = 0; k < dim; ++k) mu[k] *= inv;
            centers.pos[c] = {mp[0] * inv, mp[1] * inv};
        }
    });
}

std::vector<std::vector<std::size_t>> build_members(std::span<const std::uint32_t> assignment, std::size_t q) {
    std::vector<std::vector<std::size_t>> members(q);
    for (std::size_t i = 0; i < assignment.size(); ++i) members[assignment[i]].push_back(i);
    return members;
}

// k-means++ seeding (squared-distance weighting) under the additive metric.
Centers seed_centers(const StatsField& stats, std::span<const Position> positions, std::size_t q, Rng& rng) {
    const std::size_t n = stats.size();
    const std::size_t dim = stats.dim();
    Centers centers{std::vector<double>(q * dim), std::vector<Position>(q)};
    auto place = [&](std::size_t c, std::size_t node) {
        auto s = stats[node].values;
        std::copy(s.begin(), s.end(), centers.stats.begin() + static_cast<std::ptrdiff_t>(c * dim));
        centers.pos[c] = positions[node];
    };

    place(0, std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c <= q; ++c) {
        const double* mu = centers.stats.data() + (c - 1) * dim;
        const Position mp = centers.pos[c - 1];
        parallel_blocks(n, kNodeBlock, [&](std::size_t, std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                const double d = feature_distance(stats[i].values, mu, positions[i], mp);
                best[i] = std::min(best[i], d * d);
            }
        });
        if (c == q) break;
        double total = 0.0;
        for (double d : best) total += d;
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = uniform_open01(rng) * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += best[i];
                if (acc >= target && best[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        }
        place(c, pick);
    }
    return centers;
}

} // namespace

double cluster_objective(const StatsField& stats, std::span<const Position> positions,
                         std::span<const std::uint32_t> assignment, std::span<const double> centroid_stats,
                         std::span<const Position> centroid_pos) {
    const std::size_t n = assignment.size();
    const std::size_t dim = stats.dim();
    std::vector<double> partial(block_count(n, kNodeBlock), 0.0);
    parallel_blocks(n, kNodeBlock, [&](std::size_t blk, std::size_t b, std::size_t e) {
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) {
            const std::uint32_t c = assignment[i];
            s += feature_distance(stats[i].values, centroid_stats.data() + c * dim, positions[i], centroid_pos[c]);
        }
        partial[blk] = s;
    });
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

ClusterModel cluster_nodes(std::shared_ptr<const StatsField> stats_ptr, std::span<const Position> positions,
                           std::size_t q, std::uint64_t seed, int grid_width) {
    if (!stats_ptr) throw Error(ErrorKind::Domain, "stats required");
    const StatsField& stats = *stats_ptr;
    const std::size_t n = stats.size();
    const std::size_t dim = stats.dim();
    if (positions.size() != n) throw Error(ErrorKind::DimensionMismatch, "positions do not match stats");
    if (q < 1) throw Error(ErrorKind::Domain, "cluster count must be at least 1");
    if (q > n) throw Error(ErrorKind::Domain, "cluster count exceeds node count");
    if (q > std::numeric_limits<std::uint32_t>::max()) throw Error(ErrorKind::Domain, "cluster count too large");

    ClusterModel model;
    model.q = q;
    model.stats = stats_ptr;
    model.grid_width = grid_width;

    if (q == n) {
        model.assignment.resize(n);
        model.members.resize(n);
        model.centroid_stats.resize(n * dim);
        model.centroid_pos.assign(positions.begin(), positions.end());
        for (std::size_t i = 0; i < n; ++i) {
            model.assignment[i] = static_cast<std::uint32_t>(i);
            model.members[i] = {i};
            auto s = stats[i].values;
            std::copy(s.begin(), s.end(), model.centroid_stats.begin() + static_cast<std::ptrdiff_t>(i * dim));
        }
        model.objective = 0.0;
        model.objective_trace = {0.0};
        return model;
    }

    Rng rng = derived_rng(seed, 0xC1u);
    Centers centers = seed_centers(stats, positions, q, rng);

    std::vector<std::uint32_t> assign(n, 0);
    std::vector<double> upper(n, 0.0);
    std::vector<double> lower(n, 0.0);

    // Exhaustive nearest and second-nearest center.
    auto full_scan = [&](std::size_t i) {
        double d1 = std::numeric_limits<double>::infinity();
        double d2 = d1;
        std::uint32_t a = 0;
        auto s = stats[i].values;
        for (std::size_t c = 0; c < q; ++c) {
            const double d = feature_distance(s, centers.stats.data() + c * dim, positions[i], centers.pos[c]);
            if (d < d1) {
                d2 = d1;
                d1 = d;
                a = static_cast<std::uint32_t>(c);
            } else if (d < d2) {
                d2 = d;
            }
        }
        assign[i] = a;
        upper[i] = d1;
        lower[i] = d2;
    };

    // Moves the farthest node of a multi-member cluster into each empty one.
    auto fill_empty = [&](std::vector<std::vector<std::size_t>>& members) {
        for (std::size_t c = 0; c < q; ++c) {
            if (!members[c].empty()) continue;
            double far = -1.0;
            std::size_t pick = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (members[assign[i]].size() < 2) continue;
                const double d = feature_distance(stats[i].values, centers.stats.data() + assign[i] * dim,
                                                  positions[i], centers.pos[assign[i]]);
                if (d > far) {
                    far = d;
                    pick = i;
                }
            }
            auto& old = members[assign[pick]];
            old.erase(std::find(old.begin(), old.end(), pick));
            assign[pick] = static_cast<std::uint32_t>(c);
            members[c] = {pick};
            upper[pick] = 0.0;
            lower[pick] = 0.0;
        }
    };

    parallel_blocks(n, kNodeBlock, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) full_scan(i);
    });
    auto members = build_members(assign, q);
    fill_empty(members);
    Centers prev_centers = centers;
    compute_means(stats, positions, members, centers);
    double objective = cluster_objective(stats, positions, assign, centers.stats, centers.pos);
    model.objective_trace.push_back(objective);

    std::vector<double> half_sep(q);
    std::vector<double> shift(q);
    auto update_bounds = [&](const Centers& before) {
        double max_shift = 0.0;
        for (std::size_t c = 0; c < q; ++c) {
            shift[c] = center_distance(before.stats.data() + c * dim, centers.stats.data() + c * dim, dim,
                                       before.pos[c], centers.pos[c]);
            max_shift = std::max(max_shift, shift[c]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            upper[i] += shift[assign[i]];
            lower[i] -= max_shift;
        }
    };
    update_bounds(prev_centers);

    int iterations = 0;
    while (iterations < kMaxClusterIterations) {
        ++iterations;
        parallel_blocks(q, 16, [&](std::size_t, std::size_t c0, std::size_t c1) {
            for (std::size_t c = c0; c < c1; ++c) {
                double m = std::numeric_limits<double>::infinity();
                for (std::size_t o = 0; o < q; ++o) {
                    if (o == c) continue;
                    m = std::min(m, center_distance(centers.stats.data() + c * dim, centers.stats.data() + o * dim,
                                                    dim, centers.pos[c], centers.pos[o]));
                }
                half_sep[c] = 0.5 * m;
            }
        });

        const std::vector<std::uint32_t> old_assign = assign;
        const std::vector<double> old_upper = upper;
        const std::vector<double> old_lower = lower;
        parallel_blocks(n, kNodeBlock, [&](std::size_t, std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                const std::uint32_t a = assign[i];
                const double bound = std::max(half_sep[a], lower[i]);
                if (upper[i] <= bound) continue;
                upper[i] = feature_distance(stats[i].values, centers.stats.data() + a * dim, positions[i],
                                            centers.pos[a]);
                if (upper[i] <= bound) continue;
                full_scan(i);
            }
        });

        auto new_members = build_members(assign, q);
        fill_empty(new_members);
        Centers before = centers;
        compute_means(stats, positions, new_members, centers);
        const double new_objective = cluster_objective(stats, positions, assign, centers.stats, centers.pos);
        if (new_objective > objective) {
            // Mean update raised the unsquared objective: keep the previous partition.
            assign = old_assign;
            centers = before;
            upper = old_upper;
            lower = old_lower;
            --iterations;
            break;
        }
        objective = new_objective;
        members = std::move(new_members);
        model.objective_trace.push_back(objective);
        if (assign == old_assign) break;
        update_bounds(before);
    }

    model.assignment = std::move(assign);
    model.members = std::move(members);
    model.centroid_stats = std::move(centers.stats);
    model.centroid_pos = std::move(centers.pos);
    model.objective = objective;
    model.iterations = iterations;
    return model;
}

} // namespace stochcrf
