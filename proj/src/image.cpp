#include "stochcrf/image.hpp"

#include "stochcrf/error.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace stochcrf {

ImageGrid::ImageGrid(int width, int height, int channels)
    : ImageGrid(width, height, channels,
                std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0) *
                                    std::max(channels, 0))) {}

ImageGrid::ImageGrid(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (width < 1 || height < 1) throw Error(ErrorKind::Domain, "image dimensions must be positive");
    if (channels != 1 && channels != 3) throw Error(ErrorKind::Domain, "image must have 1 or 3 channels");
    if (data_.size() != static_cast<std::size_t>(width) * height * channels)
        throw Error(ErrorKind::DimensionMismatch, "pixel buffer size does not match dimensions");
    for (double v : data_)
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::Domain, "intensity outside [0,1]");
}

void ImageGrid::set(int row, int col, int ch, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::Domain, "intensity outside [0,1]");
    data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + ch] = v;
}

std::size_t ScribbleMask::count(Scribble s) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), s));
}

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw Error(ErrorKind::Io, "cannot read " + path);
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

cv::Mat decode(std::span<const std::uint8_t> bytes, int flags) {
    if (bytes.empty()) throw Error(ErrorKind::Io, "empty image payload");
    cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat img = cv::imdecode(buf, flags);
    if (img.empty()) throw Error(ErrorKind::Io, "undecodable image");
    return img;
}

std::vector<std::uint8_t> encode(const cv::Mat& m) {
    std::vector<std::uint8_t> out;
    if (!cv::imencode(".png", m, out)) throw Error(ErrorKind::Io, "PNG encoding failed");
    return out;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
}

} // namespace

ImageGrid decode_image(std::span<const std::uint8_t> bytes) {
    cv::Mat m = decode(bytes, cv::IMREAD_ANYCOLOR);
    const int ch = m.channels() == 1 ? 1 : 3;
    if (m.channels() != 1 && m.channels() != 3) throw Error(ErrorKind::Io, "unsupported channel count");
    std::vector<double> data(static_cast<std::size_t>(m.rows) * m.cols * ch);
    for (int r = 0; r < m.rows; ++r) {
        const std::uint8_t* row = m.ptr<std::uint8_t>(r);
        for (int c = 0; c < m.cols; ++c) {
            const std::size_t base = (static_cast<std::size_t>(r) * m.cols + c) * ch;
            if (ch == 1) {
                data[base] = row[c] / 255.0;
            } else {
                // OpenCV stores BGR; the grid is RGB.
                data[base + 0] = row[3 * c + 2] / 255.0;
                data[base + 1] = row[3 * c + 1] / 255.0;
                data[base + 2] = row[3 * c + 0] / 255.0;
            }
        }
    }
    return ImageGrid(m.cols, m.rows, ch, std::move(data));
}

ImageGrid load_image(const std::string& path) { return decode_image(read_file(path)); }

ScribbleMask decode_scribbles(std::span<const std::uint8_t> bytes) {
    cv::Mat m = decode(bytes, cv::IMREAD_COLOR);
    ScribbleMask mask(m.cols, m.rows);
    for (int r = 0; r < m.rows; ++r) {
        const auto* row = m.ptr<cv::Vec3b>(r);
        for (int c = 0; c < m.cols; ++c) {
            const cv::Vec3b& bgr = row[c];
            auto& label = mask.labels[static_cast<std::size_t>(r) * m.cols + c];
            if (bgr[2] == 255 && bgr[1] == 0 && bgr[0] == 0)
                label = Scribble::Foreground;
            else if (bgr[0] == 255 && bgr[1] == 0 && bgr[2] == 0)
                label = Scribble::Background;
        }
    }
    return mask;
}

ScribbleMask load_scribbles(const std::string& path) { return decode_scribbles(read_file(path)); }

SegmentationMask load_mask(const std::string& path) {
    cv::Mat m = decode(read_file(path), cv::IMREAD_GRAYSCALE);
    SegmentationMask mask(m.cols, m.rows);
    for (int r = 0; r < m.rows; ++r) {
        const std::uint8_t* row = m.ptr<std::uint8_t>(r);
        for (int c = 0; c < m.cols; ++c) mask.labels[static_cast<std::size_t>(r) * m.cols + c] = row[c] != 0;
    }
    return mask;
}

std::vector<std::uint8_t> encode_mask_png(const SegmentationMask& mask) {
    cv::Mat m(mask.height, mask.width, CV_8UC1);
    for (int r = 0; r < mask.height; ++r)
        for (int c = 0; c < mask.width; ++c) m.at<std::uint8_t>(r, c) = mask.at(r, c) ? 255 : 0;
    return encode(m);
}

void save_mask_png(const SegmentationMask& mask, const std::string& path) { write_file(path, encode_mask_png(mask)); }

std::vector<std::uint8_t> encode_image_png(const ImageGrid& img) {
    cv::Mat m(img.height(), img.width(), img.channels() == 1 ? CV_8UC1 : CV_8UC3);
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            auto q = [&](int ch) { return static_cast<std::uint8_t>(img.at(r, c, ch) * 255.0 + 0.5); };
            if (img.channels() == 1)
                m.at<std::uint8_t>(r, c) = q(0);
            else
                m.at<cv::Vec3b>(r, c) = cv::Vec3b(q(2), q(1), q(0));
        }
    }
    return encode(m);
}

std::vector<std::uint8_t> encode_scribbles_png(const ScribbleMask& scribbles) {
    cv::Mat m(scribbles.height, scribbles.width, CV_8UC3, cv::Scalar(0, 0, 0));
    for (int r = 0; r < scribbles.height; ++r) {
        for (int c = 0; c < scribbles.width; ++c) {
            switch (scribbles.labels[static_cast<std::size_t>(r) * scribbles.width + c]) {
            case Scribble::Foreground: m.at<cv::Vec3b>(r, c) = cv::Vec3b(0, 0, 255); break;
            case Scribble::Background: m.at<cv::Vec3b>(r, c) = cv::Vec3b(255, 0, 0); break;
            case Scribble::Unmarked: break;
            }
        }
    }
    return encode(m);
}

} // namespace stochcrf
