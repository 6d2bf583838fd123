#include "cst/image.hpp"

#include <algorithm>
#include <cmath>

namespace cst {

RealImage to_real(const ScanImage& img) {
    RealImage out(img.rows(), img.cols());
    const auto& px = img.pixels();
    auto& v = out.values();
    for (std::size_t i = 0; i < px.size(); ++i) {
        v[i] = static_cast<double>(px[i]);
    }
    return out;
}

ScanImage quantize(const RealImage& img, int levels) {
    ScanImage out(img.rows(), img.cols(), levels);
    const double hi = static_cast<double>(levels - 1);
    const auto& v = img.values();
    auto& px = out.pixels();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double r = std::round(v[i]);
        px[i] = static_cast<std::uint16_t>(std::clamp(r, 0.0, hi));
    }
    return out;
}

RealImage normalize_min_max(const RealImage& img) {
    const auto [lo_it, hi_it] = std::minmax_element(img.values().begin(), img.values().end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    RealImage out(img.rows(), img.cols());
    if (hi <= lo) {
        return out;
    }
    const double scale = 1.0 / (hi - lo);
    auto& v = out.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = (img.values()[i] - lo) * scale;
    }
    return out;
}

}  // namespace cst
