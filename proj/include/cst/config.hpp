#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "cst/imaging.hpp"
#include "cst/proposals.hpp"

namespace cst {

/// Every tunable of the pipeline with its default. Loaded from JSON; any
/// field absent from the file keeps its default.
struct PipelineConfig {
    int k_count = 4;     // gradient orientations
    int m_count = 2;     // coherent tensors summed
    int max_passes = 5;  // multi-pass extraction bound

    /// Per-patch contrast enhancement before extraction. Worth disabling on
    /// inputs that are already well exposed: equalizing a nearly flat patch
    /// stretches its residual texture into spurious transitions.
    bool use_enhancement = true;
    PatchGrid grid;                  // contrast-enhancement patches (8x8)
    HistEqOptions hist_eq;           // denominator choice, optional clip limit
    DiffusionParams diffusion;       // iterations 10, step 0.2, kappa 30
    ContourParams contour;           // min blob area 32
    SorParams sor;                   // omega 1.9, tolerance 1e-6
    double min_overlap_fraction = 0.0;  // labeling threshold
    double iou_min = 0.5;               // evaluation match threshold
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument naming the violated bound, e.g.
    /// "m_count must satisfy 1 <= M <= K(K+1)/2".
    void validate() const;

    /// Number of unique tensor fields for the configured K.
    int family_size() const { return k_count * (k_count + 1) / 2; }
};

PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

}  // namespace cst
