#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cst/box.hpp"
#include "cst/image.hpp"

namespace cst {

/// Load a grayscale image from PNG or PGM (chosen by extension, case
/// insensitive). 8-bit inputs yield levels = 256, 16-bit inputs 65536.
/// Color PNGs collapse to luminance (0.299 R + 0.587 G + 0.114 B, rounded).
/// Throws std::runtime_error on unreadable or malformed files.
ScanImage load_image(const std::filesystem::path& path);

/// Write a grayscale image as PNG or PGM (chosen by extension). Images with
/// levels <= 256 are written as 8-bit, others as 16-bit.
void save_image(const ScanImage& image, const std::filesystem::path& path);

/// Write a min-max normalized real field as a 16-bit grayscale PNG, for
/// inspecting intermediate pipeline stages.
void save_real_image(const RealImage& image, const std::filesystem::path& path);

struct OverlayBox {
    BoundingBox box;
    std::uint8_t r = 255;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
};

/// Write the image as 8-bit RGB with 1-pixel box outlines drawn over it.
/// Box edges are clipped to the image extent.
void save_overlay(const ScanImage& image, const std::vector<OverlayBox>& boxes,
                  const std::filesystem::path& path);

}  // namespace cst
