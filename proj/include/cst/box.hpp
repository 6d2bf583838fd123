#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>

namespace cst {

/// Axis-aligned pixel rectangle. `top`/`left` index the first covered pixel,
/// `height`/`width` count covered pixels.
struct BoundingBox {
    int top = 0;
    int left = 0;
    int height = 0;
    int width = 0;

    int bottom() const { return top + height; }  // one past last row
    int right() const { return left + width; }   // one past last col
    std::int64_t area() const { return static_cast<std::int64_t>(height) * width; }

    bool valid() const { return height >= 1 && width >= 1; }

    bool fits_within(int rows, int cols) const {
        return valid() && top >= 0 && left >= 0 && bottom() <= rows && right() <= cols;
    }

    bool operator==(const BoundingBox&) const = default;
};

inline std::int64_t intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const int h = std::min(a.bottom(), b.bottom()) - std::max(a.top, b.top);
    const int w = std::min(a.right(), b.right()) - std::max(a.left, b.left);
    if (h <= 0 || w <= 0) {
        return 0;
    }
    return static_cast<std::int64_t>(h) * w;
}

/// Annotated ground-truth region. Class ids come from a ClassRegistry where
/// id 0 is reserved for "normal" (no suspicious item).
struct GroundTruth {
    int class_id = 0;
    BoundingBox box;
};

}  // namespace cst
