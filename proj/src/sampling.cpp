#include "stochcrf/cliques.hpp"

#include "stochcrf/error.hpp"
#include "stochcrf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <ostream>
#include <tuple>

namespace stochcrf {

namespace {

// Fixed block size for per-node reductions; capped block count keeps the
// per-block histograms small on large images.
std::size_t reduction_block(std::size_t n) { return std::max<std::size_t>(256, (n + 63) / 64); }

} // namespace

double cluster_connectivity(std::size_t l, std::size_t c, const ClusterModel& model, const DivergenceKind& div) {
    if (l >= model.node_count() || c >= model.q) throw Error(ErrorKind::Domain, "node or cluster out of range");
    return connectivity(divergence(div.type, (*model.stats)[l], model.centroid(c)), div.tau, div.mode);
}

AbstractedConnectivity::AbstractedConnectivity(const ClusterModel& model, const DivergenceKind& div)
    : model_(model), div_(div), dim_(model.stats->dim()) {
    if (!(div.tau > 0.0)) throw Error(ErrorKind::Domain, "tau must be positive");
    if (model.stats->kind() != div.stats_kind())
        throw Error(ErrorKind::IncompatibleStats, "stats encoding does not match the divergence");
    const std::size_t q = model.q;
    const std::size_t n = model.node_count();
    const StatsField& stats = *model.stats;
    switch (div.type) {
    case DivergenceType::KL:
        // KL = sum p ln p - sum p ln mu
        centroid_terms_.resize(q * dim_);
        for (std::size_t k = 0; k < q * dim_; ++k) {
            if (!(model.centroid_stats[k] > 0.0)) throw Error(ErrorKind::Domain, "KL needs strictly positive bins");
            centroid_terms_[k] = std::log(model.centroid_stats[k]);
        }
        node_self_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double h = 0.0;
            for (double p : stats[i].values) {
                if (!(p > 0.0)) throw Error(ErrorKind::Domain, "KL needs strictly positive bins");
                h += p * std::log(p);
            }
            node_self_[i] = h;
        }
        break;
    case DivergenceType::Hellinger:
        // sum (sqrt mu - sqrt p)^2 = sum p + sum mu - 2 sum sqrt(p mu)
        centroid_terms_.resize(q * dim_);
        centroid_self_.assign(q, 0.0);
        for (std::size_t c = 0; c < q; ++c)
            for (std::size_t k = 0; k < dim_; ++k) {
                const double v = model.centroid_stats[c * dim_ + k];
                centroid_terms_[c * dim_ + k] = std::sqrt(v);
                centroid_self_[c] += v;
            }
        node_terms_.resize(n * dim_);
        node_self_.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto s = stats[i].values;
            for (std::size_t k = 0; k < dim_; ++k) {
                if (s[k] < 0.0) throw Error(ErrorKind::Domain, "negative histogram bin");
                node_terms_[i * dim_ + k] = std::sqrt(s[k]);
                node_self_[i] += s[k];
            }
        }
        break;
    case DivergenceType::BregmanSqNorm:
        break;
    }
}

void AbstractedConnectivity::row(std::size_t l, std::span<double> out) const {
    const std::size_t q = model_.q;
    auto s = (*model_.stats)[l].values;
    for (std::size_t c = 0; c < q; ++c) {
        double d = 0.0;
        switch (div_.type) {
        case DivergenceType::KL: {
            const double* lg = centroid_terms_.data() + c * dim_;
            double cross = 0.0;
            for (std::size_t k = 0; k < dim_; ++k) cross += s[k] * lg[k];
            d = std::max(0.0, node_self_[l] - cross);
            break;
        }
        case DivergenceType::Hellinger: {
            const double* sq = centroid_terms_.data() + c * dim_;
            const double* ns = node_terms_.data() + l * dim_;
            double dot = 0.0;
            for (std::size_t k = 0; k < dim_; ++k) dot += ns[k] * sq[k];
            d = std::max(0.0, node_self_[l] + centroid_self_[c] - 2.0 * dot) / std::numbers::sqrt2;
            break;
        }
        case DivergenceType::BregmanSqNorm: {
            const double* mu = model_.centroid_stats.data() + c * dim_;
            for (std::size_t k = 0; k < dim_; ++k) {
                const double e = s[k] - mu[k];
                d += e * e;
            }
            break;
        }
        }
        out[c] = connectivity(d, div_.tau, div_.mode);
    }
}

double AbstractedConnectivity::operator()(std::size_t l, std::size_t c) const {
    std::vector<double> r(model_.q);
    row(l, r);
    return r[c];
}

namespace {

// Candidate counts for every cluster of owner l.
void candidate_row(const ClusterModel& model, std::size_t l, std::span<std::size_t> out) {
    for (std::size_t c = 0; c < model.q; ++c) {
        const auto& m = model.members[c];
        out[c] = static_cast<std::size_t>(m.end() - std::upper_bound(m.begin(), m.end(), l));
    }
    const auto w = static_cast<std::size_t>(model.grid_width);
    if (w == 0) return;
    const std::size_t n = model.node_count();
    if ((l % w) + 1 < w) --out[model.assignment[l + 1]];
    if (l + w < n) --out[model.assignment[l + w]];
}

// Visits (F, weight) for every (owner, cluster) with candidates; weight is
// 2 * candidates / n so the weighted sum of connection probabilities equals
// the expected mean degree.
template <typename Visitor>
void for_each_weighted(const ClusterModel& model, const AbstractedConnectivity& conn, std::size_t block,
                       Visitor&& visit) {
    const std::size_t n = model.node_count();
    const double scale = 2.0 / static_cast<double>(n);
    parallel_blocks(n, block, [&](std::size_t blk, std::size_t b, std::size_t e) {
        std::vector<double> f(model.q);
        std::vector<std::size_t> cnt(model.q);
        for (std::size_t l = b; l < e; ++l) {
            candidate_row(model, l, cnt);
            conn.row(l, f);
            for (std::size_t c = 0; c < model.q; ++c)
                if (cnt[c] > 0) visit(blk, f[c], scale * static_cast<double>(cnt[c]));
        }
    });
}

} // namespace

std::size_t candidate_count(const ClusterModel& model, std::size_t l, std::size_t c) {
    std::vector<std::size_t> cnt(model.q);
    candidate_row(model, l, cnt);
    return cnt[c];
}

double expected_mean_degree(const ClusterModel& model, const DivergenceKind& div, double gamma) {
    if (!(gamma > 0.0)) throw Error(ErrorKind::Domain, "gamma must be positive");
    const AbstractedConnectivity conn(model, div);
    const std::size_t block = reduction_block(model.node_count());
    std::vector<double> partial(block_count(model.node_count(), block), 0.0);
    for_each_weighted(model, conn, block, [&](std::size_t blk, double f, double w) {
        partial[blk] += w * connection_probability(f, gamma);
    });
    return std::accumulate(partial.begin(), partial.end(), 0.0);
}

double calibrate_gamma(const ClusterModel& model, const DivergenceKind& div, double target_degree) {
    const std::size_t n = model.node_count();
    if (!(target_degree > 0.0) || target_degree > static_cast<double>(n) - 1.0)
        throw Error(ErrorKind::Domain, "target degree must lie in (0, n-1]");
    const AbstractedConnectivity conn(model, div);
    const std::size_t block = reduction_block(n);
    const std::size_t blocks = block_count(n, block);

    // Pass 1: range of positive connectivities and reachable degree.
    struct Range {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        double weight = 0.0;
    };
    std::vector<Range> ranges(blocks);
    for_each_weighted(model, conn, block, [&](std::size_t blk, double f, double w) {
        if (!(f > 0.0)) return;
        Range& r = ranges[blk];
        r.lo = std::min(r.lo, f);
        r.hi = std::max(r.hi, f);
        r.weight += w;
    });
    Range all;
    for (const auto& r : ranges) {
        all.lo = std::min(all.lo, r.lo);
        all.hi = std::max(all.hi, r.hi);
        all.weight += r.weight;
    }
    if (all.weight <= 0.0) throw Error(ErrorKind::Calibration, "no pair has positive connectivity");
    constexpr double kRel = 1e-12;
    if (target_degree > all.weight * (1.0 + kRel))
        throw Error(ErrorKind::Calibration, "target degree exceeds the reachable mean degree");
    if (target_degree >= all.weight * (1.0 - kRel)) return all.lo;  // saturation: every candidate connects

    // Pass 2: log-spaced histogram of (weight, weight*F). At a bucket
    // boundary gamma every bucket is entirely saturated or entirely linear,
    // so the expected degree there is exact.
    constexpr std::size_t kBuckets = 4096;
    const double log_lo = std::log(all.lo);
    const double span = std::log(all.hi) - log_lo;
    auto bucket_of = [&](double f) -> std::size_t {
        if (span <= 0.0) return 0;
        const double x = (std::log(f) - log_lo) / span * static_cast<double>(kBuckets);
        return std::min<std::size_t>(kBuckets - 1, static_cast<std::size_t>(std::max(0.0, x)));
    };
    auto boundary = [&](std::size_t k) {
        if (k == 0) return all.lo;
        if (k >= kBuckets) return all.hi;
        return std::exp(log_lo + span * static_cast<double>(k) / static_cast<double>(kBuckets));
    };

    std::vector<double> w_part(blocks * kBuckets, 0.0);
    std::vector<double> wf_part(blocks * kBuckets, 0.0);
    for_each_weighted(model, conn, block, [&](std::size_t blk, double f, double w) {
        if (!(f > 0.0)) return;
        const std::size_t k = bucket_of(f);
        w_part[blk * kBuckets + k] += w;
        wf_part[blk * kBuckets + k] += w * f;
    });
    std::vector<double> bw(kBuckets, 0.0);
    std::vector<double> bwf(kBuckets, 0.0);
    for (std::size_t blk = 0; blk < blocks; ++blk)
        for (std::size_t k = 0; k < kBuckets; ++k) {
            bw[k] += w_part[blk * kBuckets + k];
            bwf[k] += wf_part[blk * kBuckets + k];
        }

    double total_wf = std::accumulate(bwf.begin(), bwf.end(), 0.0);
    // Above the largest connectivity every probability is F/gamma.
    if (target_degree <= total_wf / all.hi) return total_wf / target_degree;

    // suffix_w[k] = weight in buckets >= k; prefix_wf[k] = weight*F in buckets < k.
    std::vector<double> suffix_w(kBuckets + 1, 0.0);
    std::vector<double> prefix_wf(kBuckets + 1, 0.0);
    for (std::size_t k = kBuckets; k-- > 0;) suffix_w[k] = suffix_w[k + 1] + bw[k];
    for (std::size_t k = 0; k < kBuckets; ++k) prefix_wf[k + 1] = prefix_wf[k] + bwf[k];
    auto degree_at_boundary = [&](std::size_t k) { return suffix_w[k] + prefix_wf[k] / boundary(k); };

    // Largest k with degree(boundary k) >= target; the root lies in bucket k.
    std::size_t k = 0;
    while (k + 1 < kBuckets && degree_at_boundary(k + 1) >= target_degree) ++k;

    // Pass 3: exact solve inside bucket k.
    std::vector<std::vector<std::pair<double, double>>> items(blocks);
    for_each_weighted(model, conn, block, [&](std::size_t blk, double f, double w) {
        if (f > 0.0 && bucket_of(f) == k) items[blk].emplace_back(f, w);
    });
    std::vector<std::pair<double, double>> bucket;
    for (auto& v : items) bucket.insert(bucket.end(), v.begin(), v.end());
    std::sort(bucket.begin(), bucket.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    const double saturated_above = suffix_w[k + 1];
    const double linear_below = prefix_wf[k];
    double bucket_wf = 0.0;
    for (const auto& [f, w] : bucket) bucket_wf += w * f;

    // With the first t items saturated, degree(gamma) = A + (B / gamma) on the
    // gamma interval between item t and item t-1.
    double sat_w = 0.0;
    double rest_wf = bucket_wf;
    for (std::size_t t = 0; t <= bucket.size(); ++t) {
        const double hi = t == 0 ? boundary(k + 1) : bucket[t - 1].first;
        const double lo = t == bucket.size() ? boundary(k) : bucket[t].first;
        const double a = saturated_above + sat_w;
        const double b = linear_below + rest_wf;
        if (target_degree > a) {
            const double gamma = b / (target_degree - a);
            if (gamma >= lo * (1.0 - 1e-12) && gamma <= hi * (1.0 + 1e-12)) return gamma;
        }
        if (t < bucket.size()) {
            sat_w += bucket[t].second;
            rest_wf -= bucket[t].second * bucket[t].first;
        }
    }
    // Floating-point edge: fall back to bisection on the exact expectation.
    double lo = boundary(k);
    double hi = boundary(k + 1);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        double deg = saturated_above + linear_below / mid;
        for (const auto& [f, w] : bucket) deg += w * connection_probability(f, mid);
        (deg >= target_degree ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<NodePair> CliqueSet::pairs() const {
    std::vector<NodePair> out;
    out.reserve(long_range.size());
    for (const auto& c : long_range) out.emplace_back(c.i, c.j);
    return out;
}

CliqueSet sample_cliques(const ClusterModel& model, const DivergenceKind& div, double gamma, std::uint64_t seed) {
    if (!(gamma > 0.0)) throw Error(ErrorKind::Domain, "gamma must be positive");
    const std::size_t n = model.node_count();
    const std::size_t q = model.q;
    const AbstractedConnectivity conn(model, div);
    const auto w = static_cast<std::size_t>(model.grid_width);

    std::vector<std::vector<LongRangeClique>> per_owner(n);
    parallel_blocks(n, 256, [&](std::size_t, std::size_t b, std::size_t e) {
        std::vector<double> f(q);
        std::vector<std::size_t> cnt(q);
        std::vector<std::size_t> cand;
        for (std::size_t l = b; l < e; ++l) {
            Rng rng = derived_rng(seed, l);
            candidate_row(model, l, cnt);
            conn.row(l, f);
            auto& out = per_owner[l];
            for (std::size_t c = 0; c < q; ++c) {
                const std::size_t m = cnt[c];
                if (m == 0) continue;
                const double p = connection_probability(f[c], gamma);
                if (p <= 0.0) continue;
                const std::size_t k = p >= 1.0 ? m : std::binomial_distribution<std::size_t>(m, p)(rng);
                if (k == 0) continue;

                const auto& mem = model.members[c];
                cand.clear();
                for (auto it = std::upper_bound(mem.begin(), mem.end(), l); it != mem.end(); ++it) {
                    const std::size_t j = *it;
                    if (w != 0 && are_4_adjacent(l, j, static_cast<int>(w))) continue;
                    cand.push_back(j);
                }
                // Partial Fisher-Yates: first k entries are a uniform k-subset.
                for (std::size_t s = 0; s < k; ++s) {
                    const std::size_t r = std::uniform_int_distribution<std::size_t>(s, cand.size() - 1)(rng);
                    std::swap(cand[s], cand[r]);
                }
                for (std::size_t s = 0; s < k; ++s) out.push_back({l, cand[s], f[c]});
            }
            std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.j < y.j; });
        }
    });

    CliqueSet cs;
    cs.gamma = gamma;
    cs.seed = seed;
    std::size_t total = 0;
    for (const auto& v : per_owner) total += v.size();
    cs.long_range.reserve(total);
    for (auto& v : per_owner) cs.long_range.insert(cs.long_range.end(), v.begin(), v.end());
    cs.expected_degree_target = 0.0;
    return cs;
}

void validate_clique_set(const CliqueSet& cs, std::size_t n, int grid_width) {
    for (std::size_t k = 0; k < cs.long_range.size(); ++k) {
        const auto& c = cs.long_range[k];
        if (c.i >= n || c.j >= n) throw Error(ErrorKind::Construction, "clique endpoint out of range");
        if (c.i >= c.j) throw Error(ErrorKind::Construction, "clique pair not normalized or self-pair");
        if (grid_width > 0 && are_4_adjacent(c.i, c.j, grid_width))
            throw Error(ErrorKind::Construction, "clique duplicates a 4-neighborhood pair");
        if (k > 0) {
            const auto& p = cs.long_range[k - 1];
            if (!(std::tie(p.i, p.j) < std::tie(c.i, c.j))) throw Error(ErrorKind::Construction, "duplicate clique");
        }
    }
}

void write_clique_csv(std::ostream& out, const CliqueSet& cs) {
    out << "i,j,F\n";
    out.precision(17);
    for (const auto& c : cs.long_range) out << c.i << ',' << c.j << ',' << c.connectivity << '\n';
}

DegreeReport degree_report(const CliqueSet& cs, std::size_t n, double epsilon) {
    DegreeReport r;
    r.nodes = n;
    r.edges = cs.long_range.size();
    r.bounds = sparsification_bounds(std::max<std::size_t>(n, 2), epsilon);
    if (n == 0) return r;
    std::vector<std::size_t> deg(n, 0);
    for (const auto& c : cs.long_range) {
        ++deg[c.i];
        ++deg[c.j];
    }
    r.min_degree = *std::min_element(deg.begin(), deg.end());
    r.max_degree = *std::max_element(deg.begin(), deg.end());
    r.mean_degree = 2.0 * static_cast<double>(r.edges) / static_cast<double>(n);
    r.implied_p = n > 1 ? r.mean_degree / static_cast<double>(n - 1) : 0.0;
    r.below_connectedness = r.implied_p < r.bounds.p_lower;
    r.above_cut_bound = r.implied_p > r.bounds.p_upper;
    return r;
}

} // namespace stochcrf
