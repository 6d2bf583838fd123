#pragma once

// Brute-force reference implementations used only by tests. Each oracle is
// written independently of the library code it checks: dense linear algebra
// instead of iterative solvers, exhaustive threshold sweeps instead of
// incremental curves, pairwise rank statistics instead of integration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cst/box.hpp"
#include "cst/evaluation.hpp"
#include "cst/image.hpp"

namespace oracle {

/// Dirichlet in-painting by direct dense solve: unknowns are the box pixels,
/// each satisfying 4u(p) = sum of 4-neighbors, where neighbors outside the
/// box take the original image value at coordinates clamped to the image
/// edge. Returns the full image with the box interior replaced.
inline cst::RealImage dense_inpaint(const cst::RealImage& img, const cst::BoundingBox& box) {
    const int h = box.height;
    const int w = box.width;
    if (h <= 0 || w <= 0) {
        return img;
    }
    const int n = h * w;
    auto index_of = [&](int r, int c) { return (r - box.top) * w + (c - box.left); };
    auto inside = [&](int r, int c) {
        return r >= box.top && r < box.top + h && c >= box.left && c < box.left + w;
    };
    auto boundary_value = [&](int r, int c) {
        const int rr = std::clamp(r, 0, img.rows() - 1);
        const int cc = std::clamp(c, 0, img.cols() - 1);
        return img.at(rr, cc);
    };

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    const int dr[4] = {-1, 1, 0, 0};
    const int dc[4] = {0, 0, -1, 1};
    for (int r = box.top; r < box.top + h; ++r) {
        for (int c = box.left; c < box.left + w; ++c) {
            const int i = index_of(r, c);
            a(i, i) = 4.0;
            for (int k = 0; k < 4; ++k) {
                const int nr = r + dr[k];
                const int nc = c + dc[k];
                if (inside(nr, nc)) {
                    a(i, index_of(nr, nc)) -= 1.0;
                } else {
                    b(i) += boundary_value(nr, nc);
                }
            }
        }
    }
    const Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);

    cst::RealImage out = img;
    for (int r = box.top; r < box.top + h; ++r) {
        for (int c = box.left; c < box.left + w; ++c) {
            out.at(r, c) = x(index_of(r, c));
        }
    }
    return out;
}

/// Pixel-rectangle IoU by literally rasterizing both boxes and counting.
inline double rasterized_iou(const cst::BoundingBox& a, const cst::BoundingBox& b) {
    const int top = std::min(a.top, b.top);
    const int left = std::min(a.left, b.left);
    const int bottom = std::max(a.top + a.height, b.top + b.height);
    const int right = std::max(a.left + a.width, b.left + b.width);
    std::int64_t inter = 0;
    std::int64_t uni = 0;
    for (int r = top; r < bottom; ++r) {
        for (int c = left; c < right; ++c) {
            const bool in_a = r >= a.top && r < a.top + a.height && c >= a.left &&
                              c < a.left + a.width;
            const bool in_b = r >= b.top && r < b.top + b.height && c >= b.left &&
                              c < b.left + b.width;
            inter += in_a && in_b;
            uni += in_a || in_b;
        }
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Greedy confidence-ordered matching, re-derived from scratch: walk
/// predictions in confidence order (stable), match each to its best
/// still-free truth of the same class and image with IoU >= iou_min.
inline std::vector<bool> greedy_tp_flags(std::vector<cst::ScoredBox> preds,
                                         const std::vector<cst::TruthBox>& truths,
                                         double iou_min) {
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return preds[x].confidence > preds[y].confidence;
    });
    std::vector<bool> used(truths.size(), false);
    std::vector<bool> flags_by_rank;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const cst::ScoredBox& p = preds[order[rank]];
        double best = -1.0;
        std::size_t best_t = truths.size();
        for (std::size_t t = 0; t < truths.size(); ++t) {
            if (used[t] || truths[t].class_id != p.class_id ||
                truths[t].image_index != p.image_index) {
                continue;
            }
            const double overlap = rasterized_iou(p.box, truths[t].box);
            if (overlap > best) {
                best = overlap;
                best_t = t;
            }
        }
        if (best_t < truths.size() && best >= iou_min) {
            used[best_t] = true;
            flags_by_rank.push_back(true);
        } else {
            flags_by_rank.push_back(false);
        }
    }
    return flags_by_rank;
}

/// Average precision by exhaustive threshold sweep: every distinct
/// confidence becomes a threshold; precision/recall evaluated on the subset
/// above it; interpolated precision maximized over recalls >= r; integral
/// accumulated over recall increments. Assumes distinct confidences (the
/// per-point curve is threshold-grouped otherwise).
inline double threshold_sweep_ap(const std::vector<cst::ScoredBox>& preds,
                                 const std::vector<cst::TruthBox>& truths, double iou_min) {
    if (truths.empty()) {
        throw std::invalid_argument("threshold_sweep_ap: needs at least one truth");
    }
    if (preds.empty()) {
        return 0.0;
    }
    const std::vector<bool> flags = greedy_tp_flags(preds, truths, iou_min);

    std::vector<double> confidences;
    for (const cst::ScoredBox& p : preds) {
        confidences.push_back(p.confidence);
    }
    std::sort(confidences.begin(), confidences.end(), std::greater<>());
    confidences.erase(std::unique(confidences.begin(), confidences.end()), confidences.end());

    // flags are in confidence-descending rank order; prefix k of the ranked
    // list corresponds to threshold = k-th distinct confidence.
    std::vector<double> sorted_conf;
    for (const cst::ScoredBox& p : preds) {
        sorted_conf.push_back(p.confidence);
    }
    std::sort(sorted_conf.begin(), sorted_conf.end(), std::greater<>());

    struct Point {
        double recall;
        double precision;
    };
    std::vector<Point> points;
    for (double threshold : confidences) {
        std::int64_t tp = 0;
        std::int64_t total = 0;
        for (std::size_t rank = 0; rank < flags.size(); ++rank) {
            if (sorted_conf[rank] >= threshold) {
                total += 1;
                tp += flags[rank] ? 1 : 0;
            }
        }
        points.push_back(Point{static_cast<double>(tp) / static_cast<double>(truths.size()),
                               static_cast<double>(tp) / static_cast<double>(total)});
    }
    std::sort(points.begin(), points.end(),
              [](const Point& x, const Point& y) { return x.recall < y.recall; });

    auto interp = [&](double recall) {
        double best = 0.0;
        for (const Point& p : points) {
            if (p.recall >= recall - 1e-15) {
                best = std::max(best, p.precision);
            }
        }
        return best;
    };

    double ap = 0.0;
    double prev_recall = 0.0;
    for (const Point& p : points) {
        if (p.recall > prev_recall) {
            ap += (p.recall - prev_recall) * interp(p.recall);
            prev_recall = p.recall;
        }
    }
    return ap;
}

/// AUC as the Mann–Whitney U statistic: fraction of (positive, negative)
/// pairs ranked correctly, ties counted half.
inline double mann_whitney_auc(const std::vector<std::pair<double, bool>>& scores) {
    std::vector<double> pos;
    std::vector<double> neg;
    for (const auto& [score, positive] : scores) {
        (positive ? pos : neg).push_back(score);
    }
    if (pos.empty() || neg.empty()) {
        throw std::invalid_argument("mann_whitney_auc: needs both classes");
    }
    double u = 0.0;
    for (double p : pos) {
        for (double q : neg) {
            if (p > q) {
                u += 1.0;
            } else if (p == q) {
                u += 0.5;
            }
        }
    }
    return u / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

/// Histogram-equalization mapping computed the slow way: explicit cumulative
/// count table over the patch, then the affine formula with rounding.
inline std::vector<int> hand_equalize(const std::vector<int>& patch, int levels) {
    std::vector<int> hist(static_cast<std::size_t>(levels), 0);
    for (int v : patch) {
        hist[static_cast<std::size_t>(v)]++;
    }
    std::vector<int> cumulative(static_cast<std::size_t>(levels), 0);
    int running = 0;
    for (int v = 0; v < levels; ++v) {
        running += hist[static_cast<std::size_t>(v)];
        cumulative[static_cast<std::size_t>(v)] = running;
    }
    int cdf_min = 0;
    for (int v = 0; v < levels; ++v) {
        if (hist[static_cast<std::size_t>(v)] > 0) {
            cdf_min = cumulative[static_cast<std::size_t>(v)];
            break;
        }
    }
    const int total = static_cast<int>(patch.size());
    std::vector<int> out;
    for (int v : patch) {
        const int num = cumulative[static_cast<std::size_t>(v)] - cdf_min;
        const int den = total - cdf_min;
        double mapped = 0.0;
        if (den > 0) {
            mapped = static_cast<double>(num) / den * (levels - 1);
        }
        out.push_back(std::clamp(static_cast<int>(std::lround(mapped)), 0, levels - 1));
    }
    return out;
}

inline double variance(const std::vector<double>& values) {
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                        static_cast<double>(values.size());
    double acc = 0.0;
    for (double v : values) {
        acc += (v - mean) * (v - mean);
    }
    return acc / static_cast<double>(values.size());
}

}  // namespace oracle
