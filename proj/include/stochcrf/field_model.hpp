#pragma once

#include "stochcrf/image.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace stochcrf {

enum class StatsKind { Histogram, Dirac };

// Read-only view of one node's encoded neighborhood statistic. For Histogram
// stats `values` holds `channels` consecutive blocks of `bins` entries; for
// Dirac stats it holds the raw channel vector and bins == 1.
struct StatsView {
    StatsKind kind = StatsKind::Histogram;
    int channels = 1;
    int bins = 1;
    std::span<const double> values;
};

struct EncodedStats {
    StatsKind kind = StatsKind::Histogram;
    int channels = 1;
    int bins = 1;
    std::vector<double> values;

    StatsView view() const { return {kind, channels, bins, values}; }
};

// Stats for every node of an image, stored contiguously.
class StatsField {
public:
    StatsField() = default;
    StatsField(StatsKind kind, int channels, int bins, std::size_t nodes);

    StatsKind kind() const { return kind_; }
    int channels() const { return channels_; }
    int bins() const { return bins_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return nodes_; }

    StatsView operator[](std::size_t node) const {
        return {kind_, channels_, bins_, {values_.data() + node * dim_, dim_}};
    }
    std::span<double> mutable_values(std::size_t node) { return {values_.data() + node * dim_, dim_}; }
    EncodedStats node(std::size_t i) const;

private:
    StatsKind kind_ = StatsKind::Histogram;
    int channels_ = 1;
    int bins_ = 1;
    std::size_t dim_ = 0;
    std::size_t nodes_ = 0;
    std::vector<double> values_;
};

inline constexpr int kDefaultStatsWindow = 5;
inline constexpr int kDefaultHistogramBins = 16;

// Bin of an intensity in [0,1] for a K-bin histogram.
int histogram_bin(double v, int bins);

// Histogram: replicate-padded window, add-one smoothing, per-channel
// normalization. Dirac: the pixel's channels.
StatsField compute_encoded_stats(const ImageGrid& img, int window, StatsKind kind, int bins = kDefaultHistogramBins);

using NodePair = std::pair<std::size_t, std::size_t>;

// Horizontal then vertical 4-neighborhood pairs, each once, (i < j).
std::vector<NodePair> local_pairs(int width, int height);
inline std::vector<NodePair> local_pairs(const ImageGrid& img) { return local_pairs(img.width(), img.height()); }

inline bool are_4_adjacent(std::size_t a, std::size_t b, int width) {
    if (a > b) std::swap(a, b);
    return (b == a + 1 && (a % width) + 1 < static_cast<std::size_t>(width)) || b == a + static_cast<std::size_t>(width);
}

} // namespace stochcrf
