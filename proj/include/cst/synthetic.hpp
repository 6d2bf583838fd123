#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cst/box.hpp"
#include "cst/image.hpp"
#include "cst/rng.hpp"

namespace cst {

/// Shape kinds the generator can rasterize. Each kind doubles as a class id
/// (square = 1, disk = 2, triangle = 3); class 0 stays reserved for the
/// no-threat background class.
enum class ShapeKind : int {
    square = 1,
    disk = 2,
    triangle = 3,
};

struct ShapeSpec {
    ShapeKind kind = ShapeKind::square;
    int size = 24;           // bounding-square side length in pixels
    double contrast = 60.0;  // intensity offset from the background level
};

struct SceneParams {
    int rows = 128;
    int cols = 128;
    int levels = 256;
    double background = 200.0;
    double noise_sigma = 0.0;  // Gaussian, applied after shapes; 0 = clean
    int margin = 4;            // min distance between a shape and the border
    int min_separation = 4;    // min gap between shape bounding boxes
    /// Box-blur radius softening each shape's silhouette, like the transition
    /// ramps of a physical scanner. Hard steps respond to gradient kernels on
    /// only two pixel columns, which a 3x3 opening erases wholesale. Radius 2
    /// turns each edge into a 5-pixel linear ramp whose interior gradient is
    /// constant, so thresholding keeps the whole 4-pixel response band (not
    /// just its bright core) and the band survives the opening.
    int edge_softness = 2;
    bool allow_overlap = false;
    int placement_attempts = 64;  // retries per shape before giving up
};

struct PlacedShape {
    ShapeSpec spec;
    BoundingBox box;  // tight rasterized extent
};

struct Scene {
    ScanImage image;
    std::vector<PlacedShape> shapes;
};

/// Rasterize shapes at random non-overlapping positions onto a flat
/// background, then add optional Gaussian noise. Returns nullopt when a
/// shape cannot be placed within the attempt budget. Boxes are the exact
/// extents of the rasterized foreground pixels.
std::optional<Scene> generate_scene(const SceneParams& params,
                                    const std::vector<ShapeSpec>& shapes, Rng& rng);

/// Ground truth view of a scene (class id = shape kind).
std::vector<GroundTruth> scene_truths(const Scene& scene);

}  // namespace cst
