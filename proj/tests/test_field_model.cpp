#include "stochcrf/error.hpp"
#include "stochcrf/field_model.hpp"
#include "stochcrf/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace stochcrf;

namespace {

ImageGrid random_image(int w, int h, int ch, std::uint64_t seed) {
    Rng rng = derived_rng(seed, 5);
    std::vector<double> data(static_cast<std::size_t>(w) * h * ch);
    for (auto& v : data) v = uniform_open01(rng);
    return ImageGrid(w, h, ch, std::move(data));
}

} // namespace

TEST_CASE("image grid rejects invalid data") {
    CHECK_THROWS_AS(ImageGrid(2, 2, 1, std::vector<double>(3, 0.5)), Error);
    CHECK_THROWS_AS(ImageGrid(1, 1, 1, std::vector<double>{1.5}), Error);
    CHECK_THROWS_AS(ImageGrid(1, 1, 2, std::vector<double>{0.1, 0.2}), Error);
}

TEST_CASE("constant image histogram stats concentrate in one smoothed bin") {
    ImageGrid img(7, 6, 3, std::vector<double>(7 * 6 * 3, 0.8));
    const StatsField stats = compute_encoded_stats(img, 5, StatsKind::Histogram, 2);
    REQUIRE(stats.size() == 42);
    REQUIRE(stats.dim() == 6);
    for (std::size_t i = 0; i < stats.size(); ++i) {
        auto v = stats[i].values;
        for (int c = 0; c < 3; ++c) {
            CHECK(v[c * 2 + 0] == doctest::Approx(1.0 / 27.0).epsilon(1e-12));
            CHECK(v[c * 2 + 1] == doctest::Approx(26.0 / 27.0).epsilon(1e-12));
        }
    }
    CHECK(26.0 / 27.0 == doctest::Approx(0.9630).epsilon(1e-4));
}

TEST_CASE("dirac stats copy the center pixel exactly") {
    const ImageGrid img = random_image(5, 4, 3, 1);
    const StatsField stats = compute_encoded_stats(img, 5, StatsKind::Dirac);
    for (std::size_t i = 0; i < img.node_count(); ++i) {
        auto s = stats[i].values;
        auto p = img.pixel(i);
        REQUIRE(s.size() == 3);
        for (int c = 0; c < 3; ++c) CHECK(s[c] == p[c]);
    }
}

TEST_CASE("histogram mass is one per channel for every node including borders") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ImageGrid img = random_image(9, 7, seed % 2 ? 3 : 1, seed);
        const StatsField stats = compute_encoded_stats(img, 5, StatsKind::Histogram, 16);
        for (std::size_t i = 0; i < stats.size(); ++i) {
            auto v = stats[i].values;
            for (int c = 0; c < img.channels(); ++c) {
                const double mass = std::accumulate(v.begin() + c * 16, v.begin() + (c + 1) * 16, 0.0);
                CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
                CHECK(std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; }));
            }
        }
    }
}

TEST_CASE("histogram ignores the arrangement of pixels inside the window") {
    // A 5x5 image with window 5 covers the whole image at the center node.
    ImageGrid a = random_image(5, 5, 1, 11);
    std::vector<double> shuffled = a.data();
    Rng rng = derived_rng(3, 3);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    ImageGrid b(5, 5, 1, shuffled);
    const StatsField sa = compute_encoded_stats(a, 5, StatsKind::Histogram, 8);
    const StatsField sb = compute_encoded_stats(b, 5, StatsKind::Histogram, 8);
    auto va = sa[12].values;
    auto vb = sb[12].values;
    for (std::size_t k = 0; k < va.size(); ++k) CHECK(va[k] == vb[k]);
}

TEST_CASE("window validation") {
    const ImageGrid img = random_image(3, 2, 1, 0);
    CHECK_THROWS_AS(compute_encoded_stats(img, 4, StatsKind::Histogram, 4), Error);
    CHECK_NOTHROW(compute_encoded_stats(img, 5, StatsKind::Histogram, 4));
    try {
        compute_encoded_stats(img, 7, StatsKind::Histogram, 4);
        FAIL("expected invalid window");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidWindow);
    }
    CHECK_THROWS_AS(compute_encoded_stats(img, 3, StatsKind::Histogram, 1), Error);
}

TEST_CASE("local pairs count and uniqueness") {
    CHECK(local_pairs(1, 1).empty());
    CHECK(local_pairs(2, 2).size() == 4);
    CHECK(local_pairs(3, 2).size() == 7);
    for (auto [w, h] : {std::pair{5, 4}, std::pair{1, 6}, std::pair{7, 1}}) {
        auto pairs = local_pairs(w, h);
        CHECK(pairs.size() == static_cast<std::size_t>(w * (h - 1) + h * (w - 1)));
        std::sort(pairs.begin(), pairs.end());
        CHECK(std::adjacent_find(pairs.begin(), pairs.end()) == pairs.end());
        for (auto [i, j] : pairs) CHECK(are_4_adjacent(i, j, w));
    }
}

TEST_CASE("4-adjacency does not wrap across rows") {
    CHECK(are_4_adjacent(0, 1, 3));
    CHECK_FALSE(are_4_adjacent(2, 3, 3));
    CHECK(are_4_adjacent(2, 5, 3));
    CHECK_FALSE(are_4_adjacent(0, 4, 3));
}
