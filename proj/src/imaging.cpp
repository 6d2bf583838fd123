#include "cst/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cst {

std::vector<std::pair<int, int>> PatchGrid::spans(int grid_count, int total) {
    if (grid_count < 1) {
        throw std::invalid_argument("PatchGrid: grid dimensions must be >= 1");
    }
    const int base = total / grid_count;
    if (base < 1) {
        throw std::invalid_argument("PatchGrid: grid produces empty patches");
    }
    std::vector<std::pair<int, int>> out;
    out.reserve(grid_count);
    for (int g = 0; g < grid_count; ++g) {
        const int begin = g * base;
        const int end = (g == grid_count - 1) ? total : begin + base;
        out.emplace_back(begin, end);
    }
    return out;
}

namespace {

void equalize_patch(const ScanImage& src, ScanImage& dst, int r0, int r1, int c0, int c1,
                    const HistEqOptions& options) {
    const int levels = src.levels();
    const double patch_area = static_cast<double>(r1 - r0) * (c1 - c0);

    std::vector<double> hist(static_cast<std::size_t>(levels), 0.0);
    for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
            hist[src.at(r, c)] += 1.0;
        }
    }

    if (options.clip_limit > 0.0) {
        const double limit = std::max(1.0, options.clip_limit * patch_area / levels);
        double excess = 0.0;
        for (double& h : hist) {
            if (h > limit) {
                excess += h - limit;
                h = limit;
            }
        }
        const double share = excess / levels;
        for (double& h : hist) {
            h += share;
        }
    }

    // Cumulative count and its minimum over occupied levels.
    std::vector<double> cdf(hist.size());
    double running = 0.0;
    double cdf_min = 0.0;
    bool seen = false;
    for (std::size_t v = 0; v < hist.size(); ++v) {
        running += hist[v];
        cdf[v] = running;
        if (!seen && hist[v] > 0.0) {
            cdf_min = running;
            seen = true;
        }
    }

    const double total = options.image_area_denominator
                             ? static_cast<double>(src.rows()) * src.cols()
                             : running;
    const double denom = total - cdf_min;
    const double hi = static_cast<double>(levels - 1);

    std::vector<std::uint16_t> lut(hist.size(), 0);
    for (std::size_t v = 0; v < hist.size(); ++v) {
        if (hist[v] <= 0.0) {
            continue;
        }
        double mapped = 0.0;
        if (denom > 0.0) {
            mapped = std::round((cdf[v] - cdf_min) / denom * hi);
        }
        lut[v] = static_cast<std::uint16_t>(std::clamp(mapped, 0.0, hi));
    }

    for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
            dst.at(r, c) = lut[src.at(r, c)];
        }
    }
}

}  // namespace

ScanImage enhance_contrast(const ScanImage& img, const PatchGrid& grid,
                           const HistEqOptions& options) {
    if (img.empty()) {
        throw std::invalid_argument("enhance_contrast: empty image");
    }
    const auto row_spans = PatchGrid::spans(grid.grid_rows, img.rows());
    const auto col_spans = PatchGrid::spans(grid.grid_cols, img.cols());

    ScanImage out(img.rows(), img.cols(), img.levels());
    for (const auto& [r0, r1] : row_spans) {
        for (const auto& [c0, c1] : col_spans) {
            equalize_patch(img, out, r0, r1, c0, c1, options);
        }
    }
    return out;
}

namespace {

// 3x3 correlation with replicated borders.
RealImage convolve3(const RealImage& img, const std::array<double, 9>& k) {
    const int rows = img.rows();
    const int cols = img.cols();
    RealImage out(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const int rm = std::max(r - 1, 0);
        const int rp = std::min(r + 1, rows - 1);
        for (int c = 0; c < cols; ++c) {
            const int cm = std::max(c - 1, 0);
            const int cp = std::min(c + 1, cols - 1);
            out.at(r, c) = k[0] * img.at(rm, cm) + k[1] * img.at(rm, c) + k[2] * img.at(rm, cp) +
                           k[3] * img.at(r, cm) + k[4] * img.at(r, c) + k[5] * img.at(r, cp) +
                           k[6] * img.at(rp, cm) + k[7] * img.at(rp, c) + k[8] * img.at(rp, cp);
        }
    }
    return out;
}

constexpr std::array<double, 9> kSobelX = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
constexpr std::array<double, 9> kSobelY = {-1, -2, -1, 0, 0, 0, 1, 2, 1};

}  // namespace

GradientField directional_gradient(const RealImage& img, double theta) {
    if (img.empty()) {
        throw std::invalid_argument("directional_gradient: empty image");
    }
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    std::array<double, 9> k{};
    for (int i = 0; i < 9; ++i) {
        k[i] = ct * kSobelX[i] + st * kSobelY[i];
    }
    return GradientField{theta, convolve3(img, k)};
}

GradientField directional_gradient(const ScanImage& img, double theta) {
    return directional_gradient(to_real(img), theta);
}

std::vector<double> orientation_set(int k_count) {
    if (k_count < 1) {
        throw std::invalid_argument("orientation_set: k_count must be >= 1");
    }
    std::vector<double> out(static_cast<std::size_t>(k_count));
    for (int k = 0; k < k_count; ++k) {
        out[k] = 2.0 * std::numbers::pi * k / k_count;
    }
    return out;
}

RealImage diffuse(const RealImage& field, const DiffusionParams& params) {
    if (field.empty()) {
        throw std::invalid_argument("diffuse: empty field");
    }
    if (params.iterations < 0) {
        throw std::invalid_argument("diffuse: iterations must be >= 0");
    }
    if (!(params.step > 0.0) || params.step > 0.25) {
        throw std::invalid_argument("diffuse: step must be in (0, 0.25]");
    }
    if (!(params.kappa > 0.0)) {
        throw std::invalid_argument("diffuse: conductance scale must be positive");
    }

    const int rows = field.rows();
    const int cols = field.cols();
    const double inv_k2 = 1.0 / (params.kappa * params.kappa);
    auto g = [inv_k2](double s) { return std::exp(-s * s * inv_k2); };

    RealImage cur = field;
    RealImage next(rows, cols);
    for (int it = 0; it < params.iterations; ++it) {
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                const double u = cur.at(r, c);
                double flux = 0.0;
                if (r > 0) {
                    const double d = cur.at(r - 1, c) - u;
                    flux += g(d) * d;
                }
                if (r + 1 < rows) {
                    const double d = cur.at(r + 1, c) - u;
                    flux += g(d) * d;
                }
                if (c > 0) {
                    const double d = cur.at(r, c - 1) - u;
                    flux += g(d) * d;
                }
                if (c + 1 < cols) {
                    const double d = cur.at(r, c + 1) - u;
                    flux += g(d) * d;
                }
                next.at(r, c) = u + params.step * flux;
            }
        }
        std::swap(cur, next);
    }
    return cur;
}

}  // namespace cst
