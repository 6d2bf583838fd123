#pragma once

#include <cstdint>
#include <vector>

#include "cst/box.hpp"
#include "cst/image.hpp"
#include "cst/tensor.hpp"

namespace cst {

struct Mask {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> values;  // 0 background, 1 foreground

    Mask() = default;
    Mask(int r, int c) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, 0) {}
    std::uint8_t at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
    std::uint8_t& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
    std::int64_t foreground_count() const;
};

struct LabelMap {
    int rows = 0;
    int cols = 0;
    std::vector<std::int32_t> labels;  // 0 background, components numbered 1..count
    int count = 0;

    std::int32_t at(int r, int c) const { return labels[static_cast<std::size_t>(r) * cols + c]; }
};

struct ContourParams {
    int min_blob_area = 32;
    int histogram_bins = 256;
    /// Maps whose dynamic range falls below this are treated as transition-free
    /// (all-zero output) instead of having min-max normalization blow up
    /// numerically flat residue.
    double min_dynamic_range = 1e-6;
};

/// Otsu threshold index over a histogram of counts; foreground is bin > index.
int otsu_threshold_bin(const std::vector<std::int64_t>& histogram);

/// Binarized, morphologically cleaned contour map of a coherent tensor sum:
/// Otsu on the min-max-normalized values, one 3x3 cross opening, then
/// removal of components smaller than min_blob_area.
Mask contour_map(const CoherentMap& coherent, const ContourParams& params = {});

/// 8-connected component labeling; labels are assigned contiguously from 1
/// in raster-scan order of each component's first pixel.
LabelMap label_components(const Mask& binary);

/// Tightest axis-aligned rectangle covering all pixels of `label`.
BoundingBox bounding_box(const LabelMap& labeled, int label);

struct SorParams {
    double omega = 1.9;
    double tolerance = 1e-6;  // max abs residual |4u - sum(neighbors)|
    int sweep_factor = 10;    // sweep cap = max(300, sweep_factor * box area)
};

/// Replaces the pixels inside `box` with the discrete-harmonic function
/// (4-neighbor Laplacian = 0) matching the ring of pixels just outside the
/// box; ring values clamp to the image edge where the box touches it.
/// Gauss-Seidel SOR warm-started from the current contents.
void inpaint_region(RealImage& img, const BoundingBox& box, const SorParams& params = {});

/// Quantized-image wrapper around inpaint_region. Pixels outside the box are
/// bitwise unchanged.
ScanImage inpaint(const ScanImage& img, const BoundingBox& box, const SorParams& params = {});

struct Proposal {
    BoundingBox box;
    ScanImage crop;
    int pass_index = 0;     // 1-based
    int contour_label = 0;  // label within its pass
};

enum class Termination {
    empty_map,   // no labeled contours remained
    max_passes,  // pass cap reached with contours still present
};

struct ExtractionResult {
    std::vector<Proposal> proposals;
    int passes_run = 0;
    Termination terminated_by = Termination::empty_map;
};

struct ExtractParams {
    int k_count = 4;
    int m_count = 2;
    int max_passes = 5;
    DiffusionParams diffusion;
    ContourParams contour;
    SorParams solver;
};

/// Multi-pass proposal extraction: build the tensor family, fuse the coherent
/// tensors, binarize, label, record one proposal per labeled contour, then
/// in-paint every proposal box and repeat until the labeled map is empty or
/// the pass cap is hit. Boxes and crops are taken from the pass-start image;
/// in-painting is applied afterwards in ascending label order, so overlapping
/// boxes re-solve over the earlier fill.
ExtractionResult extract_proposals(const ScanImage& img, const ExtractParams& params);
ExtractionResult extract_proposals(const ScanImage& img, int k_count, int m_count,
                                   int max_passes);

}  // namespace cst
