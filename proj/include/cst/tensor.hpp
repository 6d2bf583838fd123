#pragma once

#include <utility>
#include <vector>

#include "cst/image.hpp"
#include "cst/imaging.hpp"

namespace cst {

/// One member of the K x K tensor family: the smoothed elementwise product
/// of the gradients at orientations i and j. Only i <= j is materialized;
/// the (j, i) entry is identical by commutativity.
struct TensorField {
    int i_orient = 0;
    int j_orient = 0;
    RealImage values;
    double norm = 0.0;  // Frobenius norm of values
};

struct TensorFamily {
    int k_count = 0;
    std::vector<TensorField> unique_fields;  // lexicographic (i, j), i <= j

    std::size_t expected_size() const {
        return static_cast<std::size_t>(k_count) * (k_count + 1) / 2;
    }
};

/// Sum of the M largest-norm family members.
struct CoherentMap {
    RealImage values;
    std::vector<std::pair<int, int>> contributing;  // selection order, norm non-increasing
    int m_count = 0;
};

/// Per-pixel symmetric 2x2 second-moment matrix (xx, xy, yy planes).
struct StructureTensorImage {
    RealImage xx;
    RealImage xy;
    RealImage yy;
};

struct GaussianWindow {
    double sigma = 2.0;
};

/// Conventional structure tensor: Gaussian-weighted second moments of the
/// Sobel gradient pair. Every per-pixel matrix is positive semidefinite.
StructureTensorImage classic_tensor(const ScanImage& img, const GaussianWindow& window);

/// Eigenvalues of a symmetric 2x2 matrix, returned (lambda1, lambda2) with
/// lambda1 >= lambda2.
std::pair<double, double> tensor_eigenvalues(double xx, double xy, double yy);

/// Anisotropy measure ((l1 - l2) / (l1 + l2))^2 in [0, 1]. A null matrix
/// (l1 + l2 == 0) carries no orientation evidence and maps to 0.
double coherence(double lambda1, double lambda2);

/// The K(K+1)/2 unique oriented-gradient-product maps, each smoothed by
/// anisotropic diffusion.
TensorFamily build_family(const RealImage& img, int k_count, const DiffusionParams& smoothing);
TensorFamily build_family(const ScanImage& img, int k_count, const DiffusionParams& smoothing);

/// Picks the m_count largest-norm members (ties broken by lexicographic
/// (i, j)) and sums them elementwise in selection order.
CoherentMap select_coherent(const TensorFamily& family, int m_count);

}  // namespace cst
