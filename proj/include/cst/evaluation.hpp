#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cst/box.hpp"

namespace cst {

/// Jaccard index of two pixel rectangles.
double iou(const BoundingBox& a, const BoundingBox& b);

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;
};

/// Metrics with zero denominators are reported as nullopt, never as 0.
struct ConfusionMetrics {
    std::optional<double> accuracy;
    std::optional<double> recall;       // true positive rate
    std::optional<double> precision;
    std::optional<double> specificity;  // true negative rate
    std::optional<double> fpr;
};

ConfusionMetrics confusion_metrics(const ConfusionCounts& c);

/// One ranked prediction. image_index scopes matching: predictions only match
/// truths with the same index (single-pool callers can leave it 0).
struct ScoredBox {
    double confidence = 0.0;
    BoundingBox box;
    int class_id = 0;
    int image_index = 0;
};

struct TruthBox {
    BoundingBox box;
    int class_id = 0;
    int image_index = 0;
};

struct PRPoint {
    double recall = 0.0;
    double precision = 0.0;
    double threshold = 0.0;  // confidence of the prediction producing this point
};

/// PR points after greedy confidence-ordered matching (one truth matches at
/// most one prediction; a prediction is positive when its best unmatched
/// same-class truth reaches iou_min). One point per prediction, ranked order.
std::vector<PRPoint> precision_recall_curve(std::vector<ScoredBox> preds,
                                            const std::vector<TruthBox>& truths, double iou_min);

/// Interpolated average precision: sum of P_i(r) * dr over the PR points,
/// where P_i(r) is the running max precision at recall >= r. nullopt when no
/// truths exist.
std::optional<double> average_precision(const std::vector<ScoredBox>& preds,
                                        const std::vector<TruthBox>& truths, double iou_min = 0.5);

/// Arithmetic mean of defined per-class APs; nullopt for an empty list.
std::optional<double> mean_ap(const std::vector<double>& per_class);

/// Harmonic mean of precision and recall; nullopt when both are zero.
std::optional<double> f1(double precision, double recall);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

struct RocResult {
    std::vector<RocPoint> points;  // threshold sweep, (0,0) .. (1,1)
    double auc = 0.0;              // trapezoidal
};

/// ROC by descending sweep over distinct scores. Requires at least one
/// positive and one negative sample; nullopt otherwise.
std::optional<RocResult> roc_auc(const std::vector<std::pair<double, bool>>& scores);

struct ClassReport {
    std::optional<double> ap;
    std::optional<double> auc;
    std::optional<double> mean_iou;  // over true-positive matches
    std::vector<RocPoint> roc;
    std::vector<PRPoint> pr;
};

struct EvalReport {
    std::map<int, ClassReport> per_class;
    std::optional<double> map;  // mean of defined per-class APs
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    ConfusionCounts detection_counts;  // tn unused at detection level
};

/// Full detection-metric suite over a pooled set of predictions and truths.
EvalReport evaluate_detections(const std::vector<ScoredBox>& preds,
                               const std::vector<TruthBox>& truths, double iou_min = 0.5);

std::string report_to_json(const EvalReport& report, const std::vector<std::string>& class_names);
std::string pr_points_csv(const EvalReport& report);
std::string roc_points_csv(const EvalReport& report);

}  // namespace cst
