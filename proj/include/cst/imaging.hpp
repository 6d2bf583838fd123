#pragma once

#include <utility>
#include <vector>

#include "cst/image.hpp"

namespace cst {

/// I x J grid of rectangular patches tiling an image. Base patch extents are
/// floor(rows/I) x floor(cols/J); the last row/column of patches absorbs the
/// remainder so the tiling is exact.
struct PatchGrid {
    int grid_rows = 8;  // I
    int grid_cols = 8;  // J

    /// Half-open [begin, end) spans of each grid row for an image with
    /// `total` rows (same helper serves columns). Throws if any span would
    /// be empty.
    static std::vector<std::pair<int, int>> spans(int grid_count, int total);
};

struct HistEqOptions {
    /// Use the whole-image pixel count as the normalization denominator
    /// instead of the patch pixel count. Kept for comparison; crushes the
    /// output range when patches are small.
    bool image_area_denominator = false;
    /// > 0 enables contrast-limited equalization: per-patch histogram bins
    /// are clipped at clip_limit * (patch_area / levels) and the excess is
    /// redistributed uniformly. 0 disables clipping.
    double clip_limit = 0.0;
};

/// Per-patch histogram equalization. Each patch's cumulative pixel count is
/// remapped so occupied levels spread across [0, levels-1].
ScanImage enhance_contrast(const ScanImage& img, const PatchGrid& grid,
                           const HistEqOptions& options = {});

struct GradientField {
    double orientation = 0.0;  // radians
    RealImage values;
};

/// Steerable first derivative: cos(theta) * Gx + sin(theta) * Gy with 3x3
/// Sobel kernels and replicated borders. Linear in the image.
GradientField directional_gradient(const RealImage& img, double theta);
GradientField directional_gradient(const ScanImage& img, double theta);

/// {2*pi*k / K : k = 0..K-1}, ascending.
std::vector<double> orientation_set(int k_count);

struct DiffusionParams {
    int iterations = 10;
    double step = 0.2;     // in (0, 0.25] for 4-neighbor stability
    double kappa = 30.0;   // conductance scale, g(s) = exp(-(s/kappa)^2)
};

/// Perona-Malik edge-preserving smoothing on the 4-neighbor stencil.
/// iterations = 0 returns the input unchanged. Preserves global min/max.
RealImage diffuse(const RealImage& field, const DiffusionParams& params);

}  // namespace cst
