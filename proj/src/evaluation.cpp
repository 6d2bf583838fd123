#include "cst/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

namespace cst {

double iou(const BoundingBox& a, const BoundingBox& b) {
    if (!a.valid() || !b.valid()) {
        throw std::invalid_argument("iou: boxes must have positive extent");
    }
    const std::int64_t inter = intersection_area(a, b);
    const std::int64_t uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

ConfusionMetrics confusion_metrics(const ConfusionCounts& c) {
    if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0) {
        throw std::invalid_argument("confusion_metrics: counts must be nonnegative");
    }
    auto ratio = [](std::int64_t num, std::int64_t den) -> std::optional<double> {
        if (den == 0) {
            return std::nullopt;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    ConfusionMetrics m;
    m.accuracy = ratio(c.tp + c.tn, c.tp + c.fn + c.tn + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.specificity = ratio(c.tn, c.tn + c.fp);
    m.fpr = ratio(c.fp, c.tn + c.fp);
    return m;
}

namespace {

struct MatchOutcome {
    std::vector<ScoredBox> ranked;    // confidence-descending, stable on ties
    std::vector<char> is_tp;          // aligned with ranked
    std::vector<double> matched_iou;  // IoU of each TP's match, 0 for FP
    std::int64_t truth_count = 0;
};

MatchOutcome match_greedy(std::vector<ScoredBox> preds, const std::vector<TruthBox>& truths,
                          double iou_min) {
    if (!(iou_min > 0.0) || iou_min > 1.0) {
        throw std::invalid_argument("match_greedy: iou_min must be in (0, 1]");
    }
    std::stable_sort(preds.begin(), preds.end(),
                     [](const ScoredBox& a, const ScoredBox& b) { return a.confidence > b.confidence; });

    MatchOutcome out;
    out.truth_count = static_cast<std::int64_t>(truths.size());
    out.is_tp.assign(preds.size(), 0);
    out.matched_iou.assign(preds.size(), 0.0);
    std::vector<char> taken(truths.size(), 0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        double best = 0.0;
        std::size_t best_t = truths.size();
        for (std::size_t t = 0; t < truths.size(); ++t) {
            if (taken[t] || truths[t].class_id != preds[i].class_id ||
                truths[t].image_index != preds[i].image_index) {
                continue;
            }
            const double overlap = iou(preds[i].box, truths[t].box);
            if (overlap > best) {
                best = overlap;
                best_t = t;
            }
        }
        if (best_t < truths.size() && best >= iou_min) {
            out.is_tp[i] = 1;
            out.matched_iou[i] = best;
            taken[best_t] = 1;
        }
    }
    out.ranked = std::move(preds);
    return out;
}

double interpolated_ap(const std::vector<PRPoint>& points) {
    // Right-to-left running max of precision, integrated over recall.
    double ap = 0.0;
    double max_precision = 0.0;
    for (std::size_t i = points.size(); i > 0; --i) {
        const PRPoint& p = points[i - 1];
        max_precision = std::max(max_precision, p.precision);
        const double prev_recall = i >= 2 ? points[i - 2].recall : 0.0;
        ap += (p.recall - prev_recall) * max_precision;
    }
    return ap;
}

}  // namespace

std::vector<PRPoint> precision_recall_curve(std::vector<ScoredBox> preds,
                                            const std::vector<TruthBox>& truths, double iou_min) {
    const MatchOutcome m = match_greedy(std::move(preds), truths, iou_min);
    std::vector<PRPoint> points;
    points.reserve(m.ranked.size());
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    for (std::size_t i = 0; i < m.ranked.size(); ++i) {
        (m.is_tp[i] ? tp : fp) += 1;
        PRPoint p;
        p.threshold = m.ranked[i].confidence;
        p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        p.recall = m.truth_count > 0
                       ? static_cast<double>(tp) / static_cast<double>(m.truth_count)
                       : 0.0;
        points.push_back(p);
    }
    return points;
}

std::optional<double> average_precision(const std::vector<ScoredBox>& preds,
                                        const std::vector<TruthBox>& truths, double iou_min) {
    if (truths.empty()) {
        return std::nullopt;
    }
    if (preds.empty()) {
        return 0.0;
    }
    return interpolated_ap(precision_recall_curve(preds, truths, iou_min));
}

std::optional<double> mean_ap(const std::vector<double>& per_class) {
    if (per_class.empty()) {
        return std::nullopt;
    }
    const double sum = std::accumulate(per_class.begin(), per_class.end(), 0.0);
    return sum / static_cast<double>(per_class.size());
}

std::optional<double> f1(double precision, double recall) {
    if (precision + recall <= 0.0) {
        return std::nullopt;
    }
    return 2.0 * precision * recall / (precision + recall);
}

std::optional<RocResult> roc_auc(const std::vector<std::pair<double, bool>>& scores) {
    std::int64_t n_pos = 0;
    std::int64_t n_neg = 0;
    for (const auto& [score, positive] : scores) {
        (positive ? n_pos : n_neg) += 1;
    }
    if (n_pos == 0 || n_neg == 0) {
        return std::nullopt;
    }

    std::vector<std::pair<double, bool>> sorted = scores;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    RocResult result;
    result.points.push_back(RocPoint{0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        const double threshold = sorted[i].first;
        while (i < sorted.size() && sorted[i].first == threshold) {
            (sorted[i].second ? tp : fp) += 1;
            ++i;
        }
        result.points.push_back(RocPoint{static_cast<double>(fp) / static_cast<double>(n_neg),
                                         static_cast<double>(tp) / static_cast<double>(n_pos),
                                         threshold});
    }

    double auc = 0.0;
    for (std::size_t k = 1; k < result.points.size(); ++k) {
        const RocPoint& a = result.points[k - 1];
        const RocPoint& b = result.points[k];
        auc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
    }
    result.auc = auc;
    return result;
}

EvalReport evaluate_detections(const std::vector<ScoredBox>& preds,
                               const std::vector<TruthBox>& truths, double iou_min) {
    EvalReport report;

    std::vector<int> class_ids;
    for (const auto& t : truths) {
        class_ids.push_back(t.class_id);
    }
    std::sort(class_ids.begin(), class_ids.end());
    class_ids.erase(std::unique(class_ids.begin(), class_ids.end()), class_ids.end());

    std::vector<double> defined_aps;
    for (int cls : class_ids) {
        std::vector<ScoredBox> cls_preds;
        std::vector<TruthBox> cls_truths;
        for (const auto& p : preds) {
            if (p.class_id == cls) {
                cls_preds.push_back(p);
            }
        }
        for (const auto& t : truths) {
            if (t.class_id == cls) {
                cls_truths.push_back(t);
            }
        }

        ClassReport cls_report;
        cls_report.pr = precision_recall_curve(cls_preds, cls_truths, iou_min);
        cls_report.ap = average_precision(cls_preds, cls_truths, iou_min);
        if (cls_report.ap.has_value()) {
            defined_aps.push_back(*cls_report.ap);
        }

        const MatchOutcome m = match_greedy(cls_preds, cls_truths, iou_min);
        std::vector<std::pair<double, bool>> scores;
        double iou_sum = 0.0;
        std::int64_t tp_count = 0;
        for (std::size_t i = 0; i < m.ranked.size(); ++i) {
            scores.emplace_back(m.ranked[i].confidence, m.is_tp[i] != 0);
            if (m.is_tp[i]) {
                iou_sum += m.matched_iou[i];
                ++tp_count;
            }
        }
        if (const auto roc = roc_auc(scores)) {
            cls_report.auc = roc->auc;
            cls_report.roc = roc->points;
        }
        if (tp_count > 0) {
            cls_report.mean_iou = iou_sum / static_cast<double>(tp_count);
        }
        report.per_class.emplace(cls, std::move(cls_report));
    }

    report.map = mean_ap(defined_aps);

    const MatchOutcome pooled = match_greedy(preds, truths, iou_min);
    std::int64_t tp = 0;
    for (char flag : pooled.is_tp) {
        tp += flag != 0;
    }
    report.detection_counts.tp = tp;
    report.detection_counts.fp = static_cast<std::int64_t>(pooled.is_tp.size()) - tp;
    report.detection_counts.fn = pooled.truth_count - tp;
    const ConfusionMetrics metrics = confusion_metrics(report.detection_counts);
    report.precision = metrics.precision;
    report.recall = metrics.recall;
    if (report.precision && report.recall) {
        report.f1 = f1(*report.precision, *report.recall);
    }
    return report;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) {
    if (v.has_value()) {
        return *v;
    }
    return "undefined";
}

}  // namespace

std::string report_to_json(const EvalReport& report, const std::vector<std::string>& class_names) {
    nlohmann::json j;
    j["map"] = optional_json(report.map);
    j["precision"] = optional_json(report.precision);
    j["recall"] = optional_json(report.recall);
    j["f1"] = optional_json(report.f1);
    j["counts"] = {{"tp", report.detection_counts.tp},
                   {"fp", report.detection_counts.fp},
                   {"fn", report.detection_counts.fn}};
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [cls, cr] : report.per_class) {
        const std::string key = cls >= 0 && cls < static_cast<int>(class_names.size())
                                    ? class_names[static_cast<std::size_t>(cls)]
                                    : std::to_string(cls);
        per_class[key] = {{"ap", optional_json(cr.ap)},
                          {"auc", optional_json(cr.auc)},
                          {"mean_iou", optional_json(cr.mean_iou)}};
    }
    j["per_class"] = per_class;
    return j.dump(2) + "\n";
}

std::string pr_points_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "class,threshold,recall,precision\n";
    for (const auto& [cls, cr] : report.per_class) {
        for (const PRPoint& p : cr.pr) {
            out << cls << ',' << p.threshold << ',' << p.recall << ',' << p.precision << '\n';
        }
    }
    return out.str();
}

std::string roc_points_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "class,threshold,fpr,tpr\n";
    for (const auto& [cls, cr] : report.per_class) {
        for (const RocPoint& p : cr.roc) {
            out << cls << ',' << p.threshold << ',' << p.fpr << ',' << p.tpr << '\n';
        }
    }
    return out.str();
}

}  // namespace cst
