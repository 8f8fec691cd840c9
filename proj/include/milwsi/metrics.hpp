#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace milwsi {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

// points[0] = (0,0) at threshold +inf; point i > 0 is the operating point
// after admitting every score >= thresholds[i].
struct RocCurve {
    std::vector<RocPoint> points;
    std::vector<double> thresholds;
};

struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct MetricSet {
    double auroc = 0.0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double specificity = 0.0;
    double threshold = 0.5;
    // Set when the corresponding ratio was 0/0 and reported as 0.
    bool precision_undefined = false;
    bool recall_undefined = false;
    bool specificity_undefined = false;
    bool f1_undefined = false;
};

// Sweep over distinct scores, highest first; tied scores move the curve in
// one diagonal step. Requires at least one label of each class.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

// Trapezoidal area under roc_curve.
double auroc(std::span<const double> scores, std::span<const int> labels);
double auroc(const RocCurve& curve);

// Predict positive iff score >= threshold.
ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold);

MetricSet classification_metrics(const ConfusionMatrix& cm, double auroc_value, double threshold = 0.5);

// auroc + confusion + classification_metrics in one call.
MetricSet evaluate_scores(std::span<const double> scores, std::span<const int> labels, double threshold);

// Two whitespace-separated columns "fpr tpr", one point per line.
void write_roc_text(const RocCurve& curve, const std::filesystem::path& path);

} // namespace milwsi
