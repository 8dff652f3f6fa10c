#pragma once

#include "stochcrf/image.hpp"

#include <cstdint>

namespace stochcrf {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const { return tp + fp + fn + tn; }
};

// Foreground is the positive class.
ConfusionCounts confusion_counts(const SegmentationMask& pred, const SegmentationMask& gt);

// 2TP / (2TP + FN + FP). When there are no positives anywhere (TP = FP = FN = 0)
// the masks agree on an empty foreground and the score is 1.
double region_f1(const ConfusionCounts& c);

// TP / (TP + FP + FN), same empty-mask convention.
double iou(const ConfusionCounts& c);

inline constexpr double kBoundaryTolerance = 2.0;

// Foreground pixels with a 4-neighbor in the background; pixels outside the
// frame count as background, so foreground touching the border is boundary.
SegmentationMask boundary_map(const SegmentationMask& mask);

struct BoundaryScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// A boundary pixel matches when the other mask has a boundary pixel within
// Euclidean distance `tolerance`. Precision over predicted boundary pixels,
// recall over ground-truth boundary pixels. Two empty boundaries score 1.
BoundaryScore boundary_score(const SegmentationMask& pred, const SegmentationMask& gt,
                             double tolerance = kBoundaryTolerance);

inline double boundary_f1(const SegmentationMask& pred, const SegmentationMask& gt,
                          double tolerance = kBoundaryTolerance) {
    return boundary_score(pred, gt, tolerance).f1;
}

} // namespace stochcrf
