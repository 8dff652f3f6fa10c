#include "stochcrf/metrics.hpp"

#include "stochcrf/error.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace stochcrf {

namespace {

void require_same_size(const SegmentationMask& a, const SegmentationMask& b) {
    if (a.width != b.width || a.height != b.height) throw Error(ErrorKind::DimensionMismatch, "mask sizes differ");
}

// Fraction of `from` boundary pixels with a `to` boundary pixel within tolerance.
double matched_fraction(const SegmentationMask& from, const SegmentationMask& to, double tolerance,
                        std::uint64_t& count) {
    const int radius = static_cast<int>(std::floor(tolerance));
    std::vector<std::pair<int, int>> offsets;
    for (int dr = -radius; dr <= radius; ++dr)
        for (int dc = -radius; dc <= radius; ++dc)
            if (dr * dr + dc * dc <= tolerance * tolerance) offsets.emplace_back(dr, dc);

    std::uint64_t matched = 0;
    count = 0;
    for (int r = 0; r < from.height; ++r) {
        for (int c = 0; c < from.width; ++c) {
            if (!from.at(r, c)) continue;
            ++count;
            for (auto [dr, dc] : offsets) {
                const int rr = r + dr;
                const int cc = c + dc;
                if (rr < 0 || cc < 0 || rr >= to.height || cc >= to.width) continue;
                if (to.at(rr, cc)) {
                    ++matched;
                    break;
                }
            }
        }
    }
    return count == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(count);
}

} // namespace

ConfusionCounts confusion_counts(const SegmentationMask& pred, const SegmentationMask& gt) {
    require_same_size(pred, gt);
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        const bool p = pred.labels[i] != 0;
        const bool g = gt.labels[i] != 0;
        if (p && g)
            ++c.tp;
        else if (p)
            ++c.fp;
        else if (g)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

double region_f1(const ConfusionCounts& c) {
    const std::uint64_t denom = 2 * c.tp + c.fn + c.fp;
    if (denom == 0) return 1.0;
    return static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

double iou(const ConfusionCounts& c) {
    const std::uint64_t denom = c.tp + c.fp + c.fn;
    if (denom == 0) return 1.0;
    return static_cast<double>(c.tp) / static_cast<double>(denom);
}

SegmentationMask boundary_map(const SegmentationMask& mask) {
    SegmentationMask out(mask.width, mask.height);
    auto bg = [&](int r, int c) { return r < 0 || c < 0 || r >= mask.height || c >= mask.width || !mask.at(r, c); };
    for (int r = 0; r < mask.height; ++r)
        for (int c = 0; c < mask.width; ++c)
            if (mask.at(r, c) && (bg(r - 1, c) || bg(r + 1, c) || bg(r, c - 1) || bg(r, c + 1)))
                out.labels[static_cast<std::size_t>(r) * mask.width + c] = 1;
    return out;
}

BoundaryScore boundary_score(const SegmentationMask& pred, const SegmentationMask& gt, double tolerance) {
    require_same_size(pred, gt);
    const SegmentationMask bp = boundary_map(pred);
    const SegmentationMask bg = boundary_map(gt);
    std::uint64_t np = 0;
    std::uint64_t ng = 0;
    BoundaryScore s;
    s.precision = matched_fraction(bp, bg, tolerance, np);
    s.recall = matched_fraction(bg, bp, tolerance, ng);
    if (np == 0 && ng == 0) return {1.0, 1.0, 1.0};
    if (np == 0 || ng == 0) return {np == 0 ? 1.0 : 0.0, ng == 0 ? 1.0 : 0.0, 0.0};
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

} // namespace stochcrf
