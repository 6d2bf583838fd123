#include "cst/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cst {

namespace {

/// Paint one shape silhouette into `layer` with its top-left at (top, left).
void rasterize(std::vector<double>& layer, int rows, int cols, const ShapeSpec& spec, int top,
               int left) {
    const int n = spec.size;
    auto paint = [&](int r, int c) {
        if (r < 0 || r >= rows || c < 0 || c >= cols) {
            return;
        }
        layer[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
              static_cast<std::size_t>(c)] = spec.contrast;
    };

    switch (spec.kind) {
        case ShapeKind::square:
            for (int r = 0; r < n; ++r) {
                for (int c = 0; c < n; ++c) {
                    paint(top + r, left + c);
                }
            }
            break;
        case ShapeKind::disk: {
            const double radius = n / 2.0;
            const double cy = top + radius - 0.5;
            const double cx = left + radius - 0.5;
            for (int r = 0; r < n; ++r) {
                for (int c = 0; c < n; ++c) {
                    const double dy = top + r - cy;
                    const double dx = left + c - cx;
                    if (dy * dy + dx * dx <= radius * radius) {
                        paint(top + r, left + c);
                    }
                }
            }
            break;
        }
        case ShapeKind::triangle: {
            // Isosceles triangle, apex up, scanline fill between the two
            // slanted edges. Row widths grow from 1 pixel to n pixels.
            const double apex_x = left + (n - 1) / 2.0;
            for (int r = 0; r < n; ++r) {
                const double t = n > 1 ? static_cast<double>(r) / (n - 1) : 1.0;
                const double x_left = apex_x + t * (left - apex_x);
                const double x_right = apex_x + t * (left + n - 1 - apex_x);
                const int c0 = static_cast<int>(std::lround(x_left));
                const int c1 = static_cast<int>(std::lround(x_right));
                for (int c = c0; c <= c1; ++c) {
                    paint(top + r, c);
                }
            }
            break;
        }
        default:
            throw std::invalid_argument("rasterize: unknown shape kind");
    }
}

/// Separable box blur with zero padding outside the layer.
void box_blur(std::vector<double>& layer, int rows, int cols, int radius) {
    if (radius <= 0) {
        return;
    }
    const double inv = 1.0 / (2 * radius + 1);
    std::vector<double> tmp(layer.size(), 0.0);
    auto idx = [cols](int r, int c) {
        return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
               static_cast<std::size_t>(c);
    };
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double sum = 0.0;
            for (int dc = -radius; dc <= radius; ++dc) {
                const int cc = c + dc;
                if (cc >= 0 && cc < cols) {
                    sum += layer[idx(r, cc)];
                }
            }
            tmp[idx(r, c)] = sum * inv;
        }
    }
    for (int c = 0; c < cols; ++c) {
        for (int r = 0; r < rows; ++r) {
            double sum = 0.0;
            for (int dr = -radius; dr <= radius; ++dr) {
                const int rr = r + dr;
                if (rr >= 0 && rr < rows) {
                    sum += tmp[idx(rr, c)];
                }
            }
            layer[idx(r, c)] = sum * inv;
        }
    }
}

/// Tight bounding box of the pixels a shape layer actually touched.
BoundingBox support_box(const std::vector<double>& layer, int rows, int cols) {
    int min_r = rows;
    int min_c = cols;
    int max_r = -1;
    int max_c = -1;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double v = layer[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                                   static_cast<std::size_t>(c)];
            if (std::abs(v) > 1e-12) {
                min_r = std::min(min_r, r);
                max_r = std::max(max_r, r);
                min_c = std::min(min_c, c);
                max_c = std::max(max_c, c);
            }
        }
    }
    if (max_r < min_r) {
        return BoundingBox{0, 0, 0, 0};
    }
    return BoundingBox{min_r, min_c, max_r - min_r + 1, max_c - min_c + 1};
}

bool too_close(const BoundingBox& a, const BoundingBox& b, int gap) {
    const BoundingBox grown{a.top - gap, a.left - gap, a.height + 2 * gap, a.width + 2 * gap};
    return intersection_area(grown, b) > 0;
}

}  // namespace

std::optional<Scene> generate_scene(const SceneParams& params,
                                    const std::vector<ShapeSpec>& shapes, Rng& rng) {
    if (params.rows <= 0 || params.cols <= 0) {
        throw std::invalid_argument("generate_scene: image extent must be positive");
    }
    if (params.levels < 2 || params.levels > 65536) {
        throw std::invalid_argument("generate_scene: levels must lie in [2, 65536]");
    }
    if (params.margin < 0 || params.min_separation < 0 || params.placement_attempts < 1) {
        throw std::invalid_argument("generate_scene: negative margin/separation or no attempts");
    }
    if (params.edge_softness < 0) {
        throw std::invalid_argument("generate_scene: edge softness must be non-negative");
    }
    const int soft = params.edge_softness;
    for (const ShapeSpec& s : shapes) {
        if (s.size < 3) {
            throw std::invalid_argument("generate_scene: shape size must be at least 3");
        }
        // The soft skirt extends the footprint by `soft` on every side.
        if (s.size + 2 * (params.margin + soft) > std::min(params.rows, params.cols)) {
            return std::nullopt;  // cannot fit even alone
        }
    }

    std::vector<double> canvas(static_cast<std::size_t>(params.rows) *
                                   static_cast<std::size_t>(params.cols),
                               params.background);
    Scene scene;
    std::vector<double> layer(canvas.size(), 0.0);

    for (const ShapeSpec& spec : shapes) {
        const int footprint = spec.size + 2 * soft;
        const int row_slots = params.rows - footprint - 2 * params.margin + 1;
        const int col_slots = params.cols - footprint - 2 * params.margin + 1;
        if (row_slots <= 0 || col_slots <= 0) {
            return std::nullopt;
        }
        bool placed = false;
        for (int attempt = 0; attempt < params.placement_attempts && !placed; ++attempt) {
            const int top = params.margin + soft +
                            static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(row_slots)));
            const int left = params.margin + soft +
                             static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(col_slots)));
            const BoundingBox candidate{top - soft, left - soft, footprint, footprint};
            if (!params.allow_overlap) {
                bool collides = false;
                for (const PlacedShape& prev : scene.shapes) {
                    if (too_close(candidate, prev.box, params.min_separation)) {
                        collides = true;
                        break;
                    }
                }
                if (collides) {
                    continue;
                }
            }
            std::fill(layer.begin(), layer.end(), 0.0);
            rasterize(layer, params.rows, params.cols, spec, top, left);
            box_blur(layer, params.rows, params.cols, soft);
            const BoundingBox tight = support_box(layer, params.rows, params.cols);
            if (!tight.valid()) {
                return std::nullopt;
            }
            for (std::size_t i = 0; i < canvas.size(); ++i) {
                canvas[i] += layer[i];
            }
            scene.shapes.push_back(PlacedShape{spec, tight});
            placed = true;
        }
        if (!placed) {
            return std::nullopt;
        }
    }

    if (params.noise_sigma > 0.0) {
        for (double& v : canvas) {
            v += params.noise_sigma * rng.gaussian();
        }
    }

    RealImage real(params.rows, params.cols);
    real.values() = std::move(canvas);
    scene.image = quantize(real, params.levels);
    return scene;
}

std::vector<GroundTruth> scene_truths(const Scene& scene) {
    std::vector<GroundTruth> truths;
    truths.reserve(scene.shapes.size());
    for (const PlacedShape& s : scene.shapes) {
        truths.push_back(GroundTruth{static_cast<int>(s.spec.kind), s.box});
    }
    return truths;
}

}  // namespace cst
