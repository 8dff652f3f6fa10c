#include "stochcrf/field_model.hpp"

#include "stochcrf/error.hpp"
#include "stochcrf/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace stochcrf {

StatsField::StatsField(StatsKind kind, int channels, int bins, std::size_t nodes)
    : kind_(kind), channels_(channels), bins_(kind == StatsKind::Dirac ? 1 : bins),
      dim_(static_cast<std::size_t>(channels) * (kind == StatsKind::Dirac ? 1 : bins)), nodes_(nodes),
      values_(dim_ * nodes) {}

EncodedStats StatsField::node(std::size_t i) const {
    auto v = (*this)[i].values;
    return {kind_, channels_, bins_, {v.begin(), v.end()}};
}

int histogram_bin(double v, int bins) {
    return std::clamp(static_cast<int>(std::floor(v * bins)), 0, bins - 1);
}

StatsField compute_encoded_stats(const ImageGrid& img, int window, StatsKind kind, int bins) {
    if (window < 1 || window % 2 == 0) throw Error(ErrorKind::InvalidWindow, "window must be odd and >= 1");
    if (window > 2 * std::min(img.width(), img.height()) + 1)
        throw Error(ErrorKind::InvalidWindow, "window larger than 2*min(width,height)+1");
    if (kind == StatsKind::Histogram && bins < 2) throw Error(ErrorKind::Domain, "histogram needs at least 2 bins");

    const int w = img.width();
    const int h = img.height();
    const int ch = img.channels();
    StatsField field(kind, ch, bins, img.node_count());

    if (kind == StatsKind::Dirac) {
        for (std::size_t i = 0; i < img.node_count(); ++i) {
            auto src = img.pixel(i);
            std::copy(src.begin(), src.end(), field.mutable_values(i).begin());
        }
        return field;
    }

    const int half = window / 2;
    const double norm = 1.0 / (static_cast<double>(window) * window + bins);
    // Precompute bin indices once per pixel.
    std::vector<int> bin_of(img.node_count() * ch);
    for (std::size_t i = 0; i < img.node_count(); ++i)
        for (int c = 0; c < ch; ++c) bin_of[i * ch + c] = histogram_bin(img.pixel(i)[c], bins);

    parallel_blocks(static_cast<std::size_t>(h), 8, [&](std::size_t, std::size_t r0, std::size_t r1) {
        std::vector<int> counts(static_cast<std::size_t>(ch) * bins);
        for (auto r = static_cast<int>(r0); r < static_cast<int>(r1); ++r) {
            for (int c = 0; c < w; ++c) {
                std::fill(counts.begin(), counts.end(), 1);
                for (int dr = -half; dr <= half; ++dr) {
                    const int rr = std::clamp(r + dr, 0, h - 1);
                    for (int dc = -half; dc <= half; ++dc) {
                        const int cc = std::clamp(c + dc, 0, w - 1);
                        const std::size_t src = (static_cast<std::size_t>(rr) * w + cc) * ch;
                        for (int k = 0; k < ch; ++k) ++counts[static_cast<std::size_t>(k) * bins + bin_of[src + k]];
                    }
                }
                auto out = field.mutable_values(static_cast<std::size_t>(r) * w + c);
                for (std::size_t k = 0; k < counts.size(); ++k) out[k] = counts[k] * norm;
            }
        }
    });
    return field;
}

std::vector<NodePair> local_pairs(int width, int height) {
    std::vector<NodePair> pairs;
    if (width < 1 || height < 1) return pairs;
    pairs.reserve(static_cast<std::size_t>(width) * (height - 1) + static_cast<std::size_t>(height) * (width - 1));
    const auto w = static_cast<std::size_t>(width);
    for (std::size_t r = 0; r < static_cast<std::size_t>(height); ++r)
        for (std::size_t c = 0; c + 1 < w; ++c) pairs.emplace_back(r * w + c, r * w + c + 1);
    for (std::size_t r = 0; r + 1 < static_cast<std::size_t>(height); ++r)
        for (std::size_t c = 0; c < w; ++c) pairs.emplace_back(r * w + c, (r + 1) * w + c);
    return pairs;
}

} // namespace stochcrf
