#include "oracles.hpp"

#include "stochcrf/error.hpp"
#include "stochcrf/inference.hpp"

#include <doctest.h>

#include <cmath>

using namespace stochcrf;

TEST_CASE("single node takes the cheaper label") {
    EnergyModel em({{0.0, 5.0}}, {}, {});
    FlowNetwork net = build_st_graph(em);
    const auto r = max_flow(net);
    CHECK(r.flow == 0.0);
    CHECK(r.source_side[0] == 0);  // background costs 0
    EnergyModel fg({{5.0, 0.0}}, {}, {});
    CHECK(solve_min_cut(fg).labels[0] == 1);
}

TEST_CASE("opposing hard unaries cut the pairwise arc") {
    EnergyModel em({{kHardConstraint, 0.0}, {0.0, kHardConstraint}}, {{0, 1, 0.3}}, {});
    FlowNetwork net = build_st_graph(em);
    const auto r = max_flow(net);
    CHECK(r.flow == doctest::Approx(0.3));
    CHECK(r.source_side == std::vector<std::uint8_t>{1, 0});
    CHECK(total_energy(em, r.source_side) == doctest::Approx(0.3));
    const auto bf = brute_force_min_energy(em);
    CHECK(bf.energy == doctest::Approx(0.3));
    CHECK(bf.labels == std::vector<std::uint8_t>{1, 0});
}

TEST_CASE("hand network: s->a 3, a->t 2") {
    FlowNetwork net(1);
    net.add_terminal(0, 3.0, 2.0);
    CHECK(max_flow(net).flow == doctest::Approx(2.0));
}

TEST_CASE("no s-t path gives zero flow") {
    FlowNetwork net(3);
    net.add_terminal(0, 4.0, 0.0);
    net.add_terminal(2, 0.0, 4.0);
    net.add_edge(0, 1, 1.0, 0.0);
    const auto r = max_flow(net);
    CHECK(r.flow == 0.0);
    CHECK(r.source_side[2] == 0);
}

TEST_CASE("negative capacity is a construction error") {
    FlowNetwork net(2);
    CHECK_THROWS_AS(net.add_edge(0, 1, -1.0, 0.0), Error);
    CHECK_THROWS_AS(net.add_terminal(0, -1.0, 0.0), Error);
    CHECK_THROWS_AS(EnergyModel({{0, 0}, {0, 0}}, {{0, 1, -0.5}}, {}), Error);
}

TEST_CASE("max flow equals the minimum over all cuts on random 10-node networks") {
    Rng rng = derived_rng(21, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 10;
        std::vector<double> src(n), snk(n);
        std::vector<oracle::Arc> arcs;
        FlowNetwork net(n);
        for (std::size_t i = 0; i < n; ++i) {
            src[i] = u(rng) < 0.4 ? 5.0 * u(rng) : 0.0;
            snk[i] = u(rng) < 0.4 ? 5.0 * u(rng) : 0.0;
            net.add_terminal(i, src[i], snk[i]);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (u(rng) < 0.35) {
                    const double a = 3.0 * u(rng);
                    const double b = u(rng) < 0.5 ? a : 3.0 * u(rng);
                    net.add_edge(i, j, a, b);
                    arcs.push_back({i, j, a});
                    arcs.push_back({j, i, b});
                }
        const double expected = oracle::min_cut_enumeration(n, src, snk, arcs);
        const auto r = max_flow(net);
        CHECK(r.flow == doctest::Approx(expected).epsilon(1e-9));
        CHECK(net.cut_capacity(r.source_side) == doctest::Approx(r.flow).epsilon(1e-9));
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(net.conservation_residual(i)) < 1e-9);
    }
}

TEST_CASE("min cut labeling is optimal on random small energies") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t n = 2 + seed % 15;
        const auto em = oracle::random_energy(n, seed);
        const auto bf = brute_force_min_energy(em);
        const auto mc = solve_min_cut(em);
        FlowNetwork net = build_st_graph(em);
        const auto r = max_flow(net);
        CHECK(mc.energy == doctest::Approx(bf.energy).epsilon(1e-9));
        CHECK(r.flow + net.offset() == doctest::Approx(bf.energy).epsilon(1e-9));
        CHECK(oracle::energy_direct(em, mc.labels) == doctest::Approx(mc.energy).epsilon(1e-12));
    }
}

TEST_CASE("negative unaries shift into the offset") {
    EnergyModel em({{-2.0, 1.0}, {0.5, -1.0}}, {{0, 1, 0.25}}, {});
    FlowNetwork net = build_st_graph(em);
    const auto r = max_flow(net);
    const auto bf = brute_force_min_energy(em);
    CHECK(net.offset() == doctest::Approx(-3.0));
    CHECK(r.flow + net.offset() == doctest::Approx(bf.energy));
}

TEST_CASE("brute force tie-break and refusal") {
    EnergyModel zero(std::vector<UnaryCost>(4), {}, {});
    const auto bf = brute_force_min_energy(zero);
    CHECK(bf.energy == 0.0);
    CHECK(bf.labels == std::vector<std::uint8_t>(4, 0));
    EnergyModel big(std::vector<UnaryCost>(21), {}, {});
    CHECK_THROWS_AS(brute_force_min_energy(big), Error);
}

TEST_CASE("adding a pairwise term never lowers the optimum") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto em = oracle::random_energy(8, seed);
        auto longr = em.long_terms();
        longr.push_back({0, 7, 0.8});
        EnergyModel more(em.unary(), em.local_terms(), longr, em.lambda_local(), em.lambda_long());
        CHECK(solve_min_cut(more).energy >= solve_min_cut(em).energy - 1e-12);
    }
}

TEST_CASE("solver is deterministic for a fixed arc order") {
    const auto em = oracle::random_energy(16, 5, 4);
    FlowNetwork a = build_st_graph(em);
    FlowNetwork b = build_st_graph(em);
    CHECK(max_flow(a).source_side == max_flow(b).source_side);
}

TEST_CASE("extract labels maps source side to foreground and keeps hard constraints") {
    EnergyModel em({{kHardConstraint, 0.0}, {kHardConstraint, 0.0}, {0.0, kHardConstraint}, {1.0, 0.2}},
                   {{0, 1, 1.0}, {2, 3, 1.0}, {0, 2, 1.0}, {1, 3, 1.0}}, {});
    FlowNetwork net = build_st_graph(em);
    const auto mask = extract_labels(max_flow(net), 2, 2);
    CHECK(mask.labels[0] == 1);
    CHECK(mask.labels[1] == 1);
    CHECK(mask.labels[2] == 0);
    EnergyModel all_fg(std::vector<UnaryCost>(6, {kHardConstraint, 0.0}), {}, {});
    FlowNetwork n2 = build_st_graph(all_fg);
    const auto m2 = extract_labels(max_flow(n2), 3, 2);
    CHECK(m2.labels == std::vector<std::uint8_t>(6, 1));
    CHECK_THROWS_AS(extract_labels(max_flow(n2), 2, 2), Error);
}
