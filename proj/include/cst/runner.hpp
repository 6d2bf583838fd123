#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cst/config.hpp"
#include "cst/evaluation.hpp"
#include "cst/manifest.hpp"
#include "cst/proposals.hpp"
#include "cst/recognition.hpp"
#include "cst/synthetic.hpp"

namespace cst {

/// Per-file failures collected during a run; the run continues past them.
struct FileError {
    std::string image_id;
    std::string message;
};

struct ExtractOutputs {
    bool overlays = false;
    bool crops = false;
};

struct PerImageExtraction {
    std::string id;
    ExtractionResult extraction;
};

struct ExtractRun {
    std::vector<PerImageExtraction> images;  // sorted by image id
    std::vector<FileError> errors;
};

/// Enhance, extract, and (optionally) write overlays/crops for every image
/// in the manifest. Unreadable images become FileError entries. Work is
/// distributed over a bounded worker pool; results are aggregated in image-id
/// order regardless of schedule.
ExtractRun run_extract(const PipelineConfig& config, const DatasetManifest& manifest,
                       const std::filesystem::path& out_dir, const ExtractOutputs& outputs,
                       int workers = 0);

/// The proposal list as deterministic JSON: one record per proposal,
/// {image_id, pass, label, box:{top,left,height,width}}, ordered by
/// image id, then pass, then label.
std::string proposals_to_json(const ExtractRun& run);

struct TrainRun {
    ClassifierModel model;
    std::vector<double> loss_curve;
    int pool_size = 0;     // labeled proposals before balancing
    int trained_on = 0;    // after balancing
    std::vector<FileError> errors;
};

/// Extract proposals over the manifest, label them against the ground truth,
/// balance the no-threat class down to the suspicious count, and fit the
/// baseline classifier.
TrainRun run_train(const PipelineConfig& config, const DatasetManifest& manifest,
                   int workers = 0);

struct PredictionRecord {
    std::string image_id;
    int pass = 0;
    int label = 0;
    BoundingBox box;
    int class_id = 0;
    double confidence = 0.0;
};

struct ClassifyRun {
    std::vector<PredictionRecord> predictions;  // image id, pass, label order
    std::vector<FileError> errors;
};

/// Extract proposals and classify each crop with the model.
ClassifyRun run_classify(const PipelineConfig& config, const DatasetManifest& manifest,
                         const ClassifierModel& model, int workers = 0);

std::string predictions_to_json(const ClassifyRun& run, const ClassRegistry& registry);

/// Parse a predictions JSON file written by predictions_to_json.
ClassifyRun load_predictions(const std::filesystem::path& path, const ClassRegistry& registry);

/// Score predictions against the manifest ground truth. Predictions of the
/// no-threat class are not detections and are dropped before matching.
EvalReport run_evaluate(const ClassifyRun& run, const DatasetManifest& manifest, double iou_min);

struct AblationCell {
    int k = 0;
    int m = 0;
    bool feasible = true;
    std::optional<double> map;
    double mean_image_seconds = 0.0;  // mean over images of median-of-3 extraction time
};

struct AblationRun {
    std::vector<AblationCell> cells;  // row-major over (m_values x k_values)
};

/// Sweep the (K, M) grid: each feasible cell trains on train_manifest (or on
/// eval_manifest when absent), extracts + classifies + evaluates on
/// eval_manifest, and times extraction per image (median of 3 runs).
/// Cells with M > K(K+1)/2 are marked infeasible and skipped.
AblationRun run_ablation(const PipelineConfig& base_config, const DatasetManifest& eval_manifest,
                         const DatasetManifest* train_manifest, const std::vector<int>& k_values,
                         const std::vector<int>& m_values, int workers = 0);

/// mAP pivot table: one row per M, one column per K, "-" for infeasible.
std::string ablation_map_csv(const AblationRun& run, const std::vector<int>& k_values,
                             const std::vector<int>& m_values);
/// Same layout for mean per-image extraction seconds.
std::string ablation_time_csv(const AblationRun& run, const std::vector<int>& k_values,
                              const std::vector<int>& m_values);

struct SynthSpec {
    int scene_count = 10;
    SceneParams scene;
    std::vector<ShapeSpec> shapes;  // shapes per scene
};

/// Generate seeded scenes as PNGs plus a manifest.json describing them.
/// Returns the manifest; throws when a scene cannot be placed.
DatasetManifest run_synth(const SynthSpec& spec, std::uint64_t seed,
                          const std::filesystem::path& out_dir);

}  // namespace cst
