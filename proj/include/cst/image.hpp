#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cst {

/// Row-major grayscale raster with `levels` representable gray levels
/// (256 for 8-bit input, 65536 for 16-bit). Pixels are stored quantized;
/// all intermediate pipeline math happens on RealImage.
class ScanImage {
public:
    ScanImage() = default;

    ScanImage(int rows, int cols, int levels, std::uint16_t fill = 0)
        : rows_(rows), cols_(cols), levels_(levels),
          pixels_(static_cast<std::size_t>(check_dims(rows, cols, levels)) * cols, fill) {
        if (fill > max_value()) {
            throw std::invalid_argument("ScanImage: fill value exceeds level range");
        }
    }

    static ScanImage from_pixels(int rows, int cols, int levels, std::vector<std::uint16_t> px) {
        ScanImage img;
        check_dims(rows, cols, levels);
        if (px.size() != static_cast<std::size_t>(rows) * cols) {
            throw std::invalid_argument("ScanImage: pixel buffer size does not match dimensions");
        }
        img.rows_ = rows;
        img.cols_ = cols;
        img.levels_ = levels;
        img.pixels_ = std::move(px);
        for (std::uint16_t v : img.pixels_) {
            if (v > img.max_value()) {
                throw std::invalid_argument("ScanImage: pixel value exceeds level range");
            }
        }
        return img;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int levels() const { return levels_; }
    std::uint16_t max_value() const { return static_cast<std::uint16_t>(levels_ - 1); }
    bool empty() const { return pixels_.empty(); }
    std::size_t size() const { return pixels_.size(); }

    std::uint16_t at(int r, int c) const { return pixels_[static_cast<std::size_t>(r) * cols_ + c]; }
    std::uint16_t& at(int r, int c) { return pixels_[static_cast<std::size_t>(r) * cols_ + c]; }

    const std::vector<std::uint16_t>& pixels() const { return pixels_; }
    std::vector<std::uint16_t>& pixels() { return pixels_; }

    bool operator==(const ScanImage&) const = default;

private:
    static int check_dims(int rows, int cols, int levels) {
        if (rows < 1 || cols < 1) {
            throw std::invalid_argument("ScanImage: rows and cols must be >= 1");
        }
        if (levels < 2 || levels > 65536) {
            throw std::invalid_argument("ScanImage: levels must be in [2, 65536]");
        }
        return rows;
    }

    int rows_ = 0;
    int cols_ = 0;
    int levels_ = 0;
    std::vector<std::uint16_t> pixels_;
};

/// Double-precision raster used for every intermediate stage.
class RealImage {
public:
    RealImage() = default;

    RealImage(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols) {
        if (rows < 1 || cols < 1) {
            throw std::invalid_argument("RealImage: rows and cols must be >= 1");
        }
        values_.assign(static_cast<std::size_t>(rows) * cols, fill);
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return values_.empty(); }
    std::size_t size() const { return values_.size(); }

    double at(int r, int c) const { return values_[static_cast<std::size_t>(r) * cols_ + c]; }
    double& at(int r, int c) { return values_[static_cast<std::size_t>(r) * cols_ + c]; }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    bool same_dims(const RealImage& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> values_;
};

RealImage to_real(const ScanImage& img);

/// Round to nearest level and clamp into [0, levels-1].
ScanImage quantize(const RealImage& img, int levels);

/// Affine rescale to [0, 1]; a constant image maps to all zeros.
RealImage normalize_min_max(const RealImage& img);

}  // namespace cst
