#include "stochcrf/error.hpp"
#include "stochcrf/random_graph.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace stochcrf;

TEST_CASE("gnp extremes") {
    CHECK(gen_gnp(10, 0.0, 1).edge_count() == 0);
    const auto g = gen_gnp(5, 1.0, 1);
    CHECK(g.edge_count() == 10);
    g.validate();
    CHECK_THROWS_AS(gen_gnp(5, 1.5, 1), Error);
    CHECK_THROWS_AS(gen_gnp(5, -0.1, 1), Error);
}

TEST_CASE("gnp mean edge count matches the binomial expectation") {
    double sum = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto g = gen_gnp(1000, 0.01, s);
        if (s < 3) g.validate();
        sum += static_cast<double>(g.edge_count());
    }
    const double mean = sum / 100.0;
    CHECK(std::abs(mean - 4995.0) <= 0.03 * 4995.0);
}

TEST_CASE("gnp covers the last pair") {
    // p close to 1 exercises the geometric skip near the end of the pair range.
    const auto g = gen_gnp(40, 0.999, 3);
    g.validate();
    CHECK(g.edge_count() > 770);
}

TEST_CASE("gnm exact counts") {
    const auto empty = gen_gnm(7, 0, 2);
    CHECK(empty.edge_count() == 0);
    CHECK(connected_components(empty).size() == 7);
    const auto k4 = gen_gnm(4, 6, 2);
    CHECK(k4.edge_count() == 6);
    k4.validate();
    CHECK_THROWS_AS(gen_gnm(4, 7, 2), Error);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto g = gen_gnm(50, 300, s);
        CHECK(g.edge_count() == 300);
        g.validate();
    }
}

TEST_CASE("gnm near the connectivity threshold is connected in some but not all seeds") {
    int connected = 0;
    for (std::uint64_t s = 0; s < 1000; ++s) connected += is_connected(gen_gnm(100, 230, s));
    CHECK(connected > 0);
    CHECK(connected < 1000);
}

TEST_CASE("gnpij deterministic probabilities") {
    CHECK(gen_gnpij(6, [](auto, auto) { return 0.0; }, 1).edge_count() == 0);
    const auto path = gen_gnpij(6, [](std::size_t i, std::size_t j) { return j == i + 1 ? 1.0 : 0.0; }, 1);
    REQUIRE(path.edge_count() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(path.edges[k].u == k);
        CHECK(path.edges[k].v == k + 1);
    }
    CHECK_THROWS_AS(gen_gnpij(4, [](auto, auto) { return 1.2; }, 1), Error);
}

TEST_CASE("gnpij with constant p matches gnp edge counts") {
    const std::size_t n = 120;
    const double p = 0.05;
    const double pairs = n * (n - 1) / 2.0;
    double a = 0.0, b = 0.0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        a += static_cast<double>(gen_gnp(n, p, s).edge_count());
        b += static_cast<double>(gen_gnpij(n, [p](auto, auto) { return p; }, s + 1000).edge_count());
    }
    a /= 200.0;
    b /= 200.0;
    // Two-sample comparison of means; each sample mean has variance pairs*p*(1-p)/200.
    const double sigma = std::sqrt(2.0 * pairs * p * (1 - p) / 200.0);
    CHECK(std::abs(a - b) < 3.0 * sigma);
}

TEST_CASE("generators are reproducible per seed") {
    auto same = [](const SparseGraph& x, const SparseGraph& y) {
        if (x.edge_count() != y.edge_count()) return false;
        for (std::size_t k = 0; k < x.edge_count(); ++k)
            if (x.edges[k].u != y.edges[k].u || x.edges[k].v != y.edges[k].v) return false;
        return true;
    };
    CHECK(same(gen_gnp(300, 0.02, 9), gen_gnp(300, 0.02, 9)));
    CHECK_FALSE(same(gen_gnp(300, 0.02, 9), gen_gnp(300, 0.02, 10)));
    CHECK(same(gen_gnm(300, 500, 9), gen_gnm(300, 500, 9)));
    auto pij = [](std::size_t i, std::size_t j) { return ((i * 7 + j) % 10) / 10.0; };
    CHECK(same(gen_gnpij(80, pij, 4), gen_gnpij(80, pij, 4)));
}

TEST_CASE("connected components") {
    SparseGraph empty{5, {}};
    const auto singletons = connected_components(empty);
    REQUIRE(singletons.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(singletons[i] == std::vector<std::size_t>{i});

    SparseGraph path{4, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}}};
    CHECK(connected_components(path).size() == 1);

    SparseGraph two{6, {{1, 4, 1}, {0, 5, 1}, {2, 3, 1}}};
    const auto comps = connected_components(two);
    REQUIRE(comps.size() == 3);
    CHECK(comps[0] == std::vector<std::size_t>{0, 5});
    CHECK(comps[1] == std::vector<std::size_t>{1, 4});
    CHECK(comps[2] == std::vector<std::size_t>{2, 3});
}

TEST_CASE("sparsification bounds at n=120000") {
    const auto b = sparsification_bounds(120000, 1.0);
    CHECK(b.p_lower == doctest::Approx(9.7460e-5).epsilon(1e-4));
    CHECK(std::lround(b.degree_lower) == 12);
    CHECK(b.p_upper == b.p_lower);
    const auto e = sparsification_bounds(120000, 0.1);
    CHECK(std::abs(e.max_edges - 1.4034e8) <= 0.01e8);
    CHECK(e.p_upper == doctest::Approx(0.0097).epsilon(0.01));
    CHECK(e.p_lower <= e.p_upper);
    CHECK_THROWS_AS(sparsification_bounds(1, 0.5), Error);
    CHECK_THROWS_AS(sparsification_bounds(10, 0.0), Error);
}

TEST_CASE("graph validation catches broken invariants") {
    CHECK_THROWS_AS((SparseGraph{3, {{0, 0, 1}}}.validate()), Error);
    CHECK_THROWS_AS((SparseGraph{3, {{0, 1, 1}, {0, 1, 1}}}.validate()), Error);
    CHECK_THROWS_AS((SparseGraph{3, {{0, 3, 1}}}.validate()), Error);
}

TEST_CASE("st min cut on a small weighted graph") {
    // Two triangles joined by a single light edge.
    SparseGraph g{6, {{0, 1, 5}, {0, 2, 5}, {1, 2, 5}, {2, 3, 0.5}, {3, 4, 5}, {3, 5, 5}, {4, 5, 5}}};
    CHECK(st_min_cut(g, 0, 5) == doctest::Approx(0.5));
    const auto dense = planted_two_cluster_graph(16, {}, 1);
    dense.validate();
    CHECK(dense.edge_count() == 120);
    const double full = st_min_cut(dense, 0, 15);
    const auto kept = bernoulli_sparsify(dense, 1.0, 1, true);
    CHECK(st_min_cut(kept, 0, 15) == doctest::Approx(full));
}
