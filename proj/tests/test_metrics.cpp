#include "stochcrf/error.hpp"
#include "stochcrf/metrics.hpp"
#include "stochcrf/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace stochcrf;

namespace {

SegmentationMask square(int w, int h, int r0, int c0, int side) {
    SegmentationMask m(w, h);
    for (int r = r0; r < r0 + side; ++r)
        for (int c = c0; c < c0 + side; ++c) m.labels[static_cast<std::size_t>(r) * w + c] = 1;
    return m;
}

SegmentationMask invert(SegmentationMask m) {
    for (auto& v : m.labels) v = !v;
    return m;
}

} // namespace

TEST_CASE("confusion counts") {
    const auto gt = square(4, 4, 0, 0, 3);
    CHECK(confusion_counts(gt, gt).fp == 0);
    CHECK(confusion_counts(gt, gt).fn == 0);
    const auto inv = confusion_counts(invert(gt), gt);
    CHECK(inv.tp == 0);
    CHECK(inv.tn == 0);

    // TP=8, FP=2, FN=2, TN=4 on a 4x4 grid.
    SegmentationMask pred(4, 4), truth(4, 4);
    pred.labels = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
    truth.labels = {1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0};
    const auto c = confusion_counts(pred, truth);
    CHECK(c.tp == 8);
    CHECK(c.fp == 2);
    CHECK(c.fn == 2);
    CHECK(c.tn == 4);
    CHECK(c.total() == 16);
    CHECK(region_f1(c) == doctest::Approx(0.8));
    CHECK(iou(c) == doctest::Approx(0.66667).epsilon(1e-5));
    CHECK_THROWS_AS(confusion_counts(SegmentationMask(3, 4), truth), Error);
}

TEST_CASE("region f1 and iou edge cases") {
    CHECK(region_f1({5, 0, 0, 3}) == 1.0);
    CHECK(iou({5, 0, 0, 3}) == 1.0);
    CHECK(region_f1({0, 4, 0, 3}) == 0.0);
    CHECK(iou({0, 4, 4, 3}) == 0.0);
    CHECK(region_f1({0, 0, 0, 9}) == 1.0);
    CHECK(iou({0, 0, 0, 9}) == 1.0);
}

TEST_CASE("f1 is a monotone transform of iou") {
    Rng rng = derived_rng(1, 1);
    for (int t = 0; t < 1000; ++t) {
        ConfusionCounts c{rng() % 1000, rng() % 1000, rng() % 1000, rng() % 1000};
        if (c.tp + c.fp + c.fn == 0) continue;
        const double j = iou(c);
        CHECK(std::abs(region_f1(c) - 2.0 * j / (1.0 + j)) <= 1e-12);
    }
}

TEST_CASE("boundary map follows 4-neighbor transitions and the frame") {
    const auto b = boundary_map(square(6, 6, 1, 1, 4));
    int count = 0;
    for (auto v : b.labels) count += v;
    CHECK(count == 12);
    const auto full = boundary_map(SegmentationMask(3, 3, 1));
    CHECK(full.at(1, 1) == 0);
    CHECK(full.at(0, 0) == 1);
}

TEST_CASE("boundary f1 on shifted squares") {
    const auto gt = square(10, 10, 3, 1, 4);
    CHECK(boundary_f1(gt, gt) == 1.0);
    CHECK(boundary_f1(square(10, 10, 3, 2, 4), gt) == 1.0);
    // Brute-force nearest-boundary distances give precision = recall = 1/2.
    const auto s = boundary_score(square(10, 10, 3, 5, 4), gt);
    CHECK(s.precision == doctest::Approx(0.5));
    CHECK(s.recall == doctest::Approx(0.5));
    CHECK(s.f1 == doctest::Approx(0.5));
}

TEST_CASE("boundary f1 is symmetric and handles empty masks") {
    Rng rng = derived_rng(6, 6);
    for (int t = 0; t < 30; ++t) {
        SegmentationMask a(12, 9), b(12, 9);
        for (auto& v : a.labels) v = (rng() % 3) == 0;
        for (auto& v : b.labels) v = (rng() % 4) == 0;
        CHECK(boundary_f1(a, b) == doctest::Approx(boundary_f1(b, a)).epsilon(1e-12));
    }
    SegmentationMask empty(5, 5);
    CHECK(boundary_f1(empty, empty) == 1.0);
    CHECK(boundary_f1(square(5, 5, 1, 1, 2), empty) == 0.0);
    CHECK_THROWS_AS(boundary_f1(SegmentationMask(4, 5), empty), Error);
}
