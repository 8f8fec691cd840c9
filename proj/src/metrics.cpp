#include <milwsi/metrics.hpp>

#include <milwsi/error.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace milwsi {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels)
{
    if (scores.size() != labels.size())
        throw ValidationError("scores and labels differ in length");
    std::size_t pos = 0;
    for (int l : labels) {
        if (l != 0 && l != 1)
            throw ValidationError("labels must be 0 or 1");
        pos += static_cast<std::size_t>(l);
    }
    if (pos == 0 || pos == labels.size())
        throw ValidationError("ROC analysis needs at least one positive and one negative label");
}

double ratio(std::size_t num, std::size_t den, bool& undefined)
{
    undefined = den == 0;
    return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels)
{
    check_inputs(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const auto n_neg = labels.size() - n_pos;

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});
    curve.thresholds.push_back(std::numeric_limits<double>::infinity());
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]] == 1)
                ++tp;
            else
                ++fp;
            ++i;
        }
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                                static_cast<double>(tp) / static_cast<double>(n_pos)});
        curve.thresholds.push_back(s);
    }
    return curve;
}

double auroc(const RocCurve& curve)
{
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    return area;
}

double auroc(std::span<const double> scores, std::span<const int> labels)
{
    return auroc(roc_curve(scores, labels));
}

ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold)
{
    if (scores.size() != labels.size())
        throw ValidationError("scores and labels differ in length");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i] == 1)
            ++(predicted ? cm.tp : cm.fn);
        else
            ++(predicted ? cm.fp : cm.tn);
    }
    return cm;
}

MetricSet classification_metrics(const ConfusionMatrix& cm, double auroc_value, double threshold)
{
    if (cm.total() == 0)
        throw ValidationError("confusion matrix is empty");
    MetricSet m;
    m.auroc = auroc_value;
    m.threshold = threshold;
    m.precision = ratio(cm.tp, cm.tp + cm.fp, m.precision_undefined);
    m.recall = ratio(cm.tp, cm.tp + cm.fn, m.recall_undefined);
    m.specificity = ratio(cm.tn, cm.tn + cm.fp, m.specificity_undefined);
    const double denom = m.precision + m.recall;
    m.f1_undefined = denom == 0.0;
    m.f1 = m.f1_undefined ? 0.0 : 2.0 * m.precision * m.recall / denom;
    return m;
}

MetricSet evaluate_scores(std::span<const double> scores, std::span<const int> labels, double threshold)
{
    return classification_metrics(confusion(scores, labels, threshold), auroc(scores, labels), threshold);
}

void write_roc_text(const RocCurve& curve, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    char line[64];
    for (const auto& p : curve.points) {
        std::snprintf(line, sizeof line, "%.17g %.17g\n", p.fpr, p.tpr);
        out << line;
    }
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

} // namespace milwsi
