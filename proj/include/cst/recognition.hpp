#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cst/box.hpp"
#include "cst/proposals.hpp"

namespace cst {

/// Class names for a dataset. Index 0 is always the reserved "normal" class
/// (proposals that overlap no annotated item); suspicious classes follow.
struct ClassRegistry {
    std::vector<std::string> names;

    static ClassRegistry with_normal(std::vector<std::string> suspicious);
    int id_of(const std::string& name) const;  // -1 if absent
    const std::string& name_of(int id) const;
    int size() const { return static_cast<int>(names.size()); }
};

inline constexpr int kNormalClass = 0;

enum class LabelSource {
    single_item,      // overlapped exactly one truth box
    largest_overlap,  // overlapped several; largest intersection won
    normal,           // overlapped none
};

struct LabeledProposal {
    Proposal proposal;
    int class_id = kNormalClass;
    LabelSource source_rule = LabelSource::normal;
};

/// Training label for one proposal: "normal" when it overlaps no truth box,
/// otherwise the class with the largest intersection area (ties to the
/// smaller class index). An overlap only counts when the intersection
/// exceeds min_overlap_fraction of the proposal box area.
LabeledProposal assign_label(const Proposal& proposal, const std::vector<GroundTruth>& truths,
                             double min_overlap_fraction = 0.0);

struct BalanceResult {
    std::vector<LabeledProposal> kept;
    bool no_suspicious = false;  // pool had no suspicious proposals; returned unchanged
};

/// Keeps every suspicious proposal and a seeded uniform subsample of the
/// "normal" ones sized to match the suspicious count. Output preserves the
/// pool order of the survivors.
BalanceResult balance_classes(const std::vector<LabeledProposal>& pool, std::uint64_t seed);

struct CrossEntropyResult {
    double value = 0.0;
    bool clamped = false;  // a true-class probability hit the 1e-12 floor
};

/// -sum_i sum_j y_ij * log(p_ij) over per-sample distributions. Each row of
/// probs must sum to 1 within 1e-9.
CrossEntropyResult cross_entropy(const std::vector<std::vector<double>>& probs,
                                 const std::vector<std::vector<double>>& onehot);

struct FeatureSpec {
    int resize_dim = 32;     // crop resampled to resize_dim x resize_dim
    int gradient_bins = 16;  // gradient-magnitude histogram bins

    int dimension() const { return resize_dim * resize_dim + gradient_bins; }
};

/// Fixed feature vector: bilinearly resampled intensities in [0, 1] followed
/// by a normalized gradient-magnitude histogram.
std::vector<double> extract_features(const ScanImage& crop, const FeatureSpec& spec);

/// Multinomial logistic regression over the fixed features. Weights are laid
/// out row-major per class, each row dimension()+1 long (bias last).
struct ClassifierModel {
    FeatureSpec features;
    ClassRegistry classes;
    std::vector<double> weights;

    std::vector<double> probabilities(const std::vector<double>& features_in) const;
};

struct Detection {
    Proposal proposal;
    int class_id = kNormalClass;
    double score = 0.0;  // probability of the argmax class
};

struct TrainConfig {
    int epochs = 200;
    double learning_rate = 0.5;
    double l2 = 1e-4;
    std::uint64_t seed = 0;
};

struct TrainResult {
    ClassifierModel model;
    std::vector<double> loss_curve;  // mean cross-entropy after each epoch
};

/// Mean cross-entropy (plus L2 on non-bias weights) of a weight vector over
/// an encoded dataset, and its analytic gradient. Exposed so the gradient
/// can be checked against finite differences.
double training_loss(const std::vector<double>& weights,
                     const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels, int n_classes, double l2);
std::vector<double> training_gradient(const std::vector<double>& weights,
                                      const std::vector<std::vector<double>>& features,
                                      const std::vector<int>& labels, int n_classes, double l2);

/// Full-batch gradient descent on the mean cross-entropy. The step is halved
/// within an epoch until the loss does not increase, so the recorded curve is
/// non-increasing. Deterministic given the config seed.
TrainResult train_baseline(const std::vector<LabeledProposal>& data, const ClassRegistry& classes,
                           const TrainConfig& config = {});

/// Argmax class and its probability for one proposal crop.
Detection classify(const ClassifierModel& model, const Proposal& proposal);

/// Versioned little-endian binary model files ("CSTMODEL" magic).
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

}  // namespace cst
