#include "cst/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cst {

std::int64_t Mask::foreground_count() const {
    std::int64_t n = 0;
    for (std::uint8_t v : values) {
        n += v != 0;
    }
    return n;
}

int otsu_threshold_bin(const std::vector<std::int64_t>& histogram) {
    if (histogram.empty()) {
        throw std::invalid_argument("otsu_threshold_bin: empty histogram");
    }
    std::int64_t total = 0;
    double weighted_sum = 0.0;
    for (std::size_t b = 0; b < histogram.size(); ++b) {
        total += histogram[b];
        weighted_sum += static_cast<double>(b) * histogram[b];
    }
    if (total == 0) {
        return 0;
    }

    // Maximize between-class variance; keep the first bin achieving it.
    std::int64_t w0 = 0;
    double sum0 = 0.0;
    double best_var = -1.0;
    int best_bin = 0;
    for (std::size_t b = 0; b + 1 < histogram.size(); ++b) {
        w0 += histogram[b];
        sum0 += static_cast<double>(b) * histogram[b];
        const std::int64_t w1 = total - w0;
        if (w0 == 0 || w1 == 0) {
            continue;
        }
        const double mu0 = sum0 / w0;
        const double mu1 = (weighted_sum - sum0) / w1;
        const double var = static_cast<double>(w0) * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_bin = static_cast<int>(b);
        }
    }
    return best_bin;
}

namespace {

// One 3x3 cross opening. Pixels outside the image count as background for
// the erosion, so 1-pixel specks and hairlines vanish.
Mask open_cross(const Mask& in) {
    const int rows = in.rows;
    const int cols = in.cols;
    Mask eroded(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const bool keep = in.at(r, c) && r > 0 && in.at(r - 1, c) && r + 1 < rows &&
                              in.at(r + 1, c) && c > 0 && in.at(r, c - 1) && c + 1 < cols &&
                              in.at(r, c + 1);
            eroded.at(r, c) = keep ? 1 : 0;
        }
    }
    Mask dilated(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const bool set = eroded.at(r, c) || (r > 0 && eroded.at(r - 1, c)) ||
                             (r + 1 < rows && eroded.at(r + 1, c)) ||
                             (c > 0 && eroded.at(r, c - 1)) || (c + 1 < cols && eroded.at(r, c + 1));
            dilated.at(r, c) = set ? 1 : 0;
        }
    }
    return dilated;
}

}  // namespace

Mask contour_map(const CoherentMap& coherent, const ContourParams& params) {
    const RealImage& src = coherent.values;
    if (src.empty()) {
        throw std::invalid_argument("contour_map: empty coherent map");
    }
    for (double v : src.values()) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("contour_map: coherent map contains non-finite values");
        }
    }

    Mask mask(src.rows(), src.cols());
    const auto [lo_it, hi_it] = std::minmax_element(src.values().begin(), src.values().end());
    if (*hi_it - *lo_it < params.min_dynamic_range) {
        return mask;  // numerically flat: no transitions to pick
    }

    const RealImage norm = normalize_min_max(src);
    const int bins = params.histogram_bins;
    std::vector<std::int64_t> hist(static_cast<std::size_t>(bins), 0);
    std::vector<std::int32_t> bin_of(norm.size());
    for (std::size_t i = 0; i < norm.size(); ++i) {
        const int b = std::min(bins - 1, static_cast<int>(norm.values()[i] * bins));
        bin_of[i] = b;
        ++hist[static_cast<std::size_t>(b)];
    }
    const int threshold = otsu_threshold_bin(hist);
    for (std::size_t i = 0; i < norm.size(); ++i) {
        mask.values[i] = bin_of[i] > threshold ? 1 : 0;
    }

    mask = open_cross(mask);

    if (params.min_blob_area > 1) {
        const LabelMap labels = label_components(mask);
        if (labels.count > 0) {
            std::vector<std::int64_t> area(static_cast<std::size_t>(labels.count) + 1, 0);
            for (std::int32_t l : labels.labels) {
                ++area[static_cast<std::size_t>(l)];
            }
            for (std::size_t i = 0; i < mask.values.size(); ++i) {
                const std::int32_t l = labels.labels[i];
                if (l > 0 && area[static_cast<std::size_t>(l)] < params.min_blob_area) {
                    mask.values[i] = 0;
                }
            }
        }
    }
    return mask;
}

LabelMap label_components(const Mask& binary) {
    LabelMap out;
    out.rows = binary.rows;
    out.cols = binary.cols;
    out.labels.assign(binary.values.size(), 0);

    std::vector<std::size_t> stack;
    for (int r = 0; r < binary.rows; ++r) {
        for (int c = 0; c < binary.cols; ++c) {
            const std::size_t start = static_cast<std::size_t>(r) * binary.cols + c;
            if (!binary.values[start] || out.labels[start] != 0) {
                continue;
            }
            const std::int32_t label = ++out.count;
            out.labels[start] = label;
            stack.assign(1, start);
            while (!stack.empty()) {
                const std::size_t p = stack.back();
                stack.pop_back();
                const int pr = static_cast<int>(p / binary.cols);
                const int pc = static_cast<int>(p % binary.cols);
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (dr == 0 && dc == 0) {
                            continue;
                        }
                        const int nr = pr + dr;
                        const int nc = pc + dc;
                        if (nr < 0 || nr >= binary.rows || nc < 0 || nc >= binary.cols) {
                            continue;
                        }
                        const std::size_t q = static_cast<std::size_t>(nr) * binary.cols + nc;
                        if (binary.values[q] && out.labels[q] == 0) {
                            out.labels[q] = label;
                            stack.push_back(q);
                        }
                    }
                }
            }
        }
    }
    return out;
}

BoundingBox bounding_box(const LabelMap& labeled, int label) {
    if (label < 1 || label > labeled.count) {
        throw std::invalid_argument("bounding_box: label not present in map");
    }
    int top = std::numeric_limits<int>::max();
    int left = std::numeric_limits<int>::max();
    int bottom = -1;
    int right = -1;
    for (int r = 0; r < labeled.rows; ++r) {
        for (int c = 0; c < labeled.cols; ++c) {
            if (labeled.at(r, c) == label) {
                top = std::min(top, r);
                left = std::min(left, c);
                bottom = std::max(bottom, r);
                right = std::max(right, c);
            }
        }
    }
    if (bottom < 0) {
        throw std::invalid_argument("bounding_box: label not present in map");
    }
    return BoundingBox{top, left, bottom - top + 1, right - left + 1};
}

void inpaint_region(RealImage& img, const BoundingBox& box, const SorParams& params) {
    if (box.height <= 0 || box.width <= 0) {
        return;  // zero-area interior
    }
    if (!box.fits_within(img.rows(), img.cols())) {
        throw std::invalid_argument("inpaint_region: box does not fit inside image");
    }
    if (!(params.omega > 0.0) || params.omega >= 2.0) {
        throw std::invalid_argument("inpaint_region: omega must be in (0, 2)");
    }

    const int h = box.height;
    const int w = box.width;

    // Dirichlet data: ring one pixel outside the box, clamped to the image
    // edge where no outside pixel exists.
    auto ring = [&](int r, int c) {
        const int rr = std::clamp(r, 0, img.rows() - 1);
        const int cc = std::clamp(c, 0, img.cols() - 1);
        return img.at(rr, cc);
    };

    // Solve on (h+2) x (w+2) with the ring fixed; warm start from contents.
    const int sh = h + 2;
    const int sw = w + 2;
    std::vector<double> u(static_cast<std::size_t>(sh) * sw);
    for (int r = 0; r < sh; ++r) {
        for (int c = 0; c < sw; ++c) {
            u[static_cast<std::size_t>(r) * sw + c] = ring(box.top - 1 + r, box.left - 1 + c);
        }
    }

    // Floor of 300 sweeps: the area-proportional cap is ample for large
    // boxes, but tiny systems converge geometrically at rate |omega - 1| per
    // sweep and need a fixed number of sweeps to reach the tolerance.
    const std::int64_t max_sweeps =
        std::max<std::int64_t>(300, static_cast<std::int64_t>(params.sweep_factor) * h * w);
    for (std::int64_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_residual = 0.0;
        for (int r = 1; r <= h; ++r) {
            double* row = u.data() + static_cast<std::size_t>(r) * sw;
            const double* up = row - sw;
            const double* down = row + sw;
            for (int c = 1; c <= w; ++c) {
                const double residual = up[c] + down[c] + row[c - 1] + row[c + 1] - 4.0 * row[c];
                row[c] += params.omega * 0.25 * residual;
                max_residual = std::max(max_residual, std::abs(residual));
            }
        }
        if (max_residual <= params.tolerance) {
            break;
        }
    }

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            img.at(box.top + r, box.left + c) = u[static_cast<std::size_t>(r + 1) * sw + (c + 1)];
        }
    }
}

ScanImage inpaint(const ScanImage& img, const BoundingBox& box, const SorParams& params) {
    RealImage real = to_real(img);
    inpaint_region(real, box, params);
    ScanImage out = img;
    const double hi = static_cast<double>(img.levels() - 1);
    for (int r = box.top; r < box.bottom(); ++r) {
        for (int c = box.left; c < box.right(); ++c) {
            out.at(r, c) = static_cast<std::uint16_t>(std::clamp(std::round(real.at(r, c)), 0.0, hi));
        }
    }
    return out;
}

namespace {

ScanImage crop_quantized(const RealImage& img, const BoundingBox& box, int levels) {
    ScanImage crop(box.height, box.width, levels);
    const double hi = static_cast<double>(levels - 1);
    for (int r = 0; r < box.height; ++r) {
        for (int c = 0; c < box.width; ++c) {
            const double v = std::round(img.at(box.top + r, box.left + c));
            crop.at(r, c) = static_cast<std::uint16_t>(std::clamp(v, 0.0, hi));
        }
    }
    return crop;
}

}  // namespace

ExtractionResult extract_proposals(const ScanImage& img, const ExtractParams& params) {
    if (params.k_count < 1) {
        throw std::invalid_argument("extract_proposals: k_count must be >= 1");
    }
    const int family_size = params.k_count * (params.k_count + 1) / 2;
    if (params.m_count < 1 || params.m_count > family_size) {
        throw std::invalid_argument("extract_proposals: m_count must be in [1, K(K+1)/2]");
    }
    if (params.max_passes < 1) {
        throw std::invalid_argument("extract_proposals: max_passes must be >= 1");
    }

    RealImage working = to_real(img);
    ExtractionResult result;
    for (int pass = 1; pass <= params.max_passes; ++pass) {
        result.passes_run = pass;
        const TensorFamily family = build_family(working, params.k_count, params.diffusion);
        const CoherentMap coherent = select_coherent(family, params.m_count);
        const Mask mask = contour_map(coherent, params.contour);
        const LabelMap labels = label_components(mask);
        if (labels.count == 0) {
            result.terminated_by = Termination::empty_map;
            return result;
        }
        std::vector<BoundingBox> boxes;
        boxes.reserve(static_cast<std::size_t>(labels.count));
        for (int label = 1; label <= labels.count; ++label) {
            const BoundingBox box = bounding_box(labels, label);
            boxes.push_back(box);
            result.proposals.push_back(
                Proposal{box, crop_quantized(working, box, img.levels()), pass, label});
        }
        for (const BoundingBox& box : boxes) {
            inpaint_region(working, box, params.solver);
        }
    }
    result.terminated_by = Termination::max_passes;
    return result;
}

ExtractionResult extract_proposals(const ScanImage& img, int k_count, int m_count,
                                   int max_passes) {
    ExtractParams params;
    params.k_count = k_count;
    params.m_count = m_count;
    params.max_passes = max_passes;
    return extract_proposals(img, params);
}

}  // namespace cst
