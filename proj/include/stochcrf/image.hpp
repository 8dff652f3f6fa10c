#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace stochcrf {

// Row-major pixel lattice with intensities normalized to [0,1].
class ImageGrid {
public:
    ImageGrid() = default;
    ImageGrid(int width, int height, int channels);
    ImageGrid(int width, int height, int channels, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t node_count() const { return static_cast<std::size_t>(width_) * height_; }

    std::span<const double> pixel(std::size_t node) const {
        return {data_.data() + node * channels_, static_cast<std::size_t>(channels_)};
    }
    std::span<double> pixel(std::size_t node) {
        return {data_.data() + node * channels_, static_cast<std::size_t>(channels_)};
    }
    double at(int row, int col, int ch = 0) const {
        return data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + ch];
    }
    void set(int row, int col, int ch, double v);

    const std::vector<double>& data() const { return data_; }

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    std::vector<double> data_;
};

enum class Scribble : std::uint8_t { Unmarked = 0, Foreground = 1, Background = 2 };

struct ScribbleMask {
    int width = 0;
    int height = 0;
    std::vector<Scribble> labels;

    ScribbleMask() = default;
    ScribbleMask(int w, int h) : width(w), height(h), labels(static_cast<std::size_t>(w) * h, Scribble::Unmarked) {}

    std::size_t count(Scribble s) const;
    bool has_both_classes() const { return count(Scribble::Foreground) > 0 && count(Scribble::Background) > 0; }
};

struct MaskMeta {
    std::uint64_t seed = 0;
    double gamma = 0.0;
    std::string divergence;
    double expected_degree = 0.0;
};

// Binary label field; 1 = foreground.
struct SegmentationMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;
    MaskMeta meta;

    SegmentationMask() = default;
    SegmentationMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t at(int row, int col) const { return labels[static_cast<std::size_t>(row) * width + col]; }
};

// 8-bit grayscale or RGB (PNG, PGM/PPM), normalized by 255.
ImageGrid load_image(const std::string& path);
ImageGrid decode_image(std::span<const std::uint8_t> bytes);

// Pure red = foreground, pure blue = background, anything else unmarked.
ScribbleMask load_scribbles(const std::string& path);
ScribbleMask decode_scribbles(std::span<const std::uint8_t> bytes);

// Any nonzero pixel is foreground.
SegmentationMask load_mask(const std::string& path);

// 0/255 grayscale PNG.
std::vector<std::uint8_t> encode_mask_png(const SegmentationMask& mask);
void save_mask_png(const SegmentationMask& mask, const std::string& path);

std::vector<std::uint8_t> encode_image_png(const ImageGrid& img);
std::vector<std::uint8_t> encode_scribbles_png(const ScribbleMask& scribbles);

} // namespace stochcrf
