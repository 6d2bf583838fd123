#include "cst/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace cst {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("classic_tensor: sigma must be positive");
    }
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (i / sigma) * (i / sigma));
        k[static_cast<std::size_t>(i + radius)] = w;
        sum += w;
    }
    for (double& w : k) {
        w /= sum;
    }
    return k;
}

// Separable smoothing with replicated borders. Weights are nonnegative, so
// smoothing the (xx, xy, yy) planes jointly preserves per-pixel PSD.
RealImage smooth_separable(const RealImage& img, const std::vector<double>& k) {
    const int rows = img.rows();
    const int cols = img.cols();
    const int radius = static_cast<int>(k.size() / 2);

    RealImage tmp(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                const int cc = std::clamp(c + d, 0, cols - 1);
                acc += k[static_cast<std::size_t>(d + radius)] * img.at(r, cc);
            }
            tmp.at(r, c) = acc;
        }
    }
    RealImage out(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                const int rr = std::clamp(r + d, 0, rows - 1);
                acc += k[static_cast<std::size_t>(d + radius)] * tmp.at(rr, c);
            }
            out.at(r, c) = acc;
        }
    }
    return out;
}

double frobenius_norm(const RealImage& img) {
    double acc = 0.0;
    for (double v : img.values()) {
        acc += v * v;
    }
    return std::sqrt(acc);
}

}  // namespace

StructureTensorImage classic_tensor(const ScanImage& img, const GaussianWindow& window) {
    if (img.empty()) {
        throw std::invalid_argument("classic_tensor: empty image");
    }
    const RealImage real = to_real(img);
    const RealImage gx = directional_gradient(real, 0.0).values;
    const RealImage gy = directional_gradient(real, std::numbers::pi / 2.0).values;

    const int rows = real.rows();
    const int cols = real.cols();
    RealImage xx(rows, cols);
    RealImage xy(rows, cols);
    RealImage yy(rows, cols);
    for (std::size_t i = 0; i < xx.size(); ++i) {
        const double a = gx.values()[i];
        const double b = gy.values()[i];
        xx.values()[i] = a * a;
        xy.values()[i] = a * b;
        yy.values()[i] = b * b;
    }

    const auto kernel = gaussian_kernel(window.sigma);
    return StructureTensorImage{smooth_separable(xx, kernel), smooth_separable(xy, kernel),
                                smooth_separable(yy, kernel)};
}

std::pair<double, double> tensor_eigenvalues(double xx, double xy, double yy) {
    const double half_trace = 0.5 * (xx + yy);
    const double half_diff = 0.5 * (xx - yy);
    const double radical = std::sqrt(half_diff * half_diff + xy * xy);
    return {half_trace + radical, half_trace - radical};
}

double coherence(double lambda1, double lambda2) {
    const double sum = lambda1 + lambda2;
    if (sum == 0.0) {
        return 0.0;
    }
    const double ratio = (lambda1 - lambda2) / sum;
    return ratio * ratio;
}

TensorFamily build_family(const RealImage& img, int k_count, const DiffusionParams& smoothing) {
    if (img.empty()) {
        throw std::invalid_argument("build_family: empty image");
    }
    if (k_count < 1) {
        throw std::invalid_argument("build_family: k_count must be >= 1");
    }

    const auto thetas = orientation_set(k_count);
    std::vector<RealImage> gradients;
    gradients.reserve(thetas.size());
    for (double theta : thetas) {
        gradients.push_back(directional_gradient(img, theta).values);
    }

    TensorFamily family;
    family.k_count = k_count;
    family.unique_fields.reserve(family.expected_size());
    for (int i = 0; i < k_count; ++i) {
        for (int j = i; j < k_count; ++j) {
            RealImage product(img.rows(), img.cols());
            for (std::size_t p = 0; p < product.size(); ++p) {
                product.values()[p] = gradients[i].values()[p] * gradients[j].values()[p];
            }
            TensorField field;
            field.i_orient = i;
            field.j_orient = j;
            field.values = diffuse(product, smoothing);
            field.norm = frobenius_norm(field.values);
            family.unique_fields.push_back(std::move(field));
        }
    }
    return family;
}

TensorFamily build_family(const ScanImage& img, int k_count, const DiffusionParams& smoothing) {
    return build_family(to_real(img), k_count, smoothing);
}

CoherentMap select_coherent(const TensorFamily& family, int m_count) {
    const int family_size = static_cast<int>(family.unique_fields.size());
    if (m_count < 1 || m_count > family_size) {
        throw std::invalid_argument("select_coherent: m_count must be in [1, K(K+1)/2]");
    }

    std::vector<int> order(family.unique_fields.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const TensorField& fa = family.unique_fields[static_cast<std::size_t>(a)];
        const TensorField& fb = family.unique_fields[static_cast<std::size_t>(b)];
        if (fa.norm != fb.norm) {
            return fa.norm > fb.norm;
        }
        return std::pair{fa.i_orient, fa.j_orient} < std::pair{fb.i_orient, fb.j_orient};
    });

    const TensorField& first = family.unique_fields[static_cast<std::size_t>(order[0])];
    CoherentMap map;
    map.m_count = m_count;
    map.values = RealImage(first.values.rows(), first.values.cols());
    for (int s = 0; s < m_count; ++s) {
        const TensorField& f = family.unique_fields[static_cast<std::size_t>(order[s])];
        map.contributing.emplace_back(f.i_orient, f.j_orient);
        for (std::size_t p = 0; p < map.values.size(); ++p) {
            map.values.values()[p] += f.values.values()[p];
        }
    }
    return map;
}

}  // namespace cst
