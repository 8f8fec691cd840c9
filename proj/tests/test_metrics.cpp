#include <milwsi/error.hpp>
#include <milwsi/metrics.hpp>
#include <milwsi/rng.hpp>

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace milwsi;

namespace {

bool same_points(const RocCurve& c, std::vector<RocPoint> expected)
{
    if (c.points.size() != expected.size())
        return false;
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (c.points[i].fpr != expected[i].fpr || c.points[i].tpr != expected[i].tpr)
            return false;
    return true;
}

} // namespace

TEST_CASE("roc_curve on small inputs")
{
    const std::vector<int> labels{1, 0};
    CHECK(same_points(roc_curve(std::vector<double>{0.9, 0.1}, labels), {{0, 0}, {0, 1}, {1, 1}}));
    CHECK(same_points(roc_curve(std::vector<double>{0.5, 0.5}, labels), {{0, 0}, {1, 1}}));

    const std::vector<double> scores{0.1, 0.4, 0.35, 0.8};
    const std::vector<int> l4{0, 0, 1, 1};
    const auto curve = roc_curve(scores, l4);
    CHECK(same_points(curve, {{0, 0}, {0, 0.5}, {0.5, 0.5}, {0.5, 1}, {1, 1}}));
    CHECK(auroc(curve) == 0.75);
    CHECK(oracle::pair_count_auroc(scores, l4) == 0.75);
}

TEST_CASE("auroc edge values")
{
    const std::vector<int> labels{1, 1, 0, 0, 0};
    CHECK(auroc(std::vector<double>{0.9, 0.8, 0.3, 0.2, 0.1}, labels) == 1.0);
    CHECK(auroc(std::vector<double>{0.4, 0.4, 0.4, 0.4, 0.4}, labels) == 0.5);
    CHECK_THROWS_AS(auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), ValidationError);
    CHECK_THROWS_AS(auroc(std::vector<double>{0.1}, std::vector<int>{1, 0}), ValidationError);
}

TEST_CASE("trapezoidal auroc equals the pair statistic with ties")
{
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = 2 + rng.below(199);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng.below(20)) / 20.0; // coarse grid forces ties
            labels[i] = static_cast<int>(rng.below(2));
        }
        labels[0] = 1;
        labels[1] = 0;
        CHECK(std::abs(auroc(scores, labels) - oracle::pair_count_auroc(scores, labels)) <= 1e-12);
    }
}

TEST_CASE("roc curve is monotone and within the unit square")
{
    Rng rng(22);
    std::vector<double> scores(150);
    std::vector<int> labels(150);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = std::round(rng.normal() * 4.0);
        labels[i] = static_cast<int>(rng.below(2));
    }
    const auto c = roc_curve(scores, labels);
    CHECK(c.points.front().fpr == 0.0);
    CHECK(c.points.front().tpr == 0.0);
    CHECK(c.points.back().fpr == 1.0);
    CHECK(c.points.back().tpr == 1.0);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
        CHECK(c.points[i].fpr >= c.points[i - 1].fpr);
        CHECK(c.points[i].tpr >= c.points[i - 1].tpr);
        CHECK(c.thresholds[i] < c.thresholds[i - 1]);
    }
}

TEST_CASE("auroc symmetry and rank invariance")
{
    Rng rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        const auto n = 4 + rng.below(100);
        std::vector<double> scores(n), negated(n), transformed(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.normal();
            negated[i] = -scores[i];
            transformed[i] = std::exp(3.0 * scores[i]) + 7.0;
            labels[i] = static_cast<int>(i % 2);
        }
        const double a = auroc(scores, labels);
        CHECK(std::abs(a - (1.0 - auroc(negated, labels))) <= 1e-12);
        CHECK(std::abs(a - auroc(transformed, labels)) <= 1e-12);

        // permuting pairs changes nothing
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(perm));
        std::vector<double> ps(n);
        std::vector<int> pl(n);
        for (std::size_t i = 0; i < n; ++i) {
            ps[i] = scores[perm[i]];
            pl[i] = labels[perm[i]];
        }
        CHECK(std::abs(a - auroc(ps, pl)) <= 1e-12);
        CHECK(confusion(ps, pl, 0.0) == confusion(scores, labels, 0.0));
    }
}

TEST_CASE("confusion counts")
{
    CHECK(confusion(std::vector<double>{0.6, 0.4}, std::vector<int>{1, 0}, 0.5) == ConfusionMatrix{1, 0, 1, 0});
    const auto all = confusion(std::vector<double>{0.6, 0.4, 0.0}, std::vector<int>{1, 0, 1}, 0.0);
    CHECK(all.tn == 0);
    CHECK(all.fn == 0);
    CHECK(all.tp == 2);
    CHECK(all.fp == 1);
    // 0.7>=t pos TP, 0.2 neg TN, 0.6 neg FP, 0.4 pos FN
    const auto cm = confusion(std::vector<double>{0.7, 0.2, 0.6, 0.4}, std::vector<int>{1, 0, 0, 1}, 0.5);
    CHECK(cm == ConfusionMatrix{1, 1, 1, 1});
    CHECK(cm.total() == 4);
}

TEST_CASE("classification metrics")
{
    const auto perfect = classification_metrics({1, 0, 1, 0}, 1.0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);
    CHECK(perfect.specificity == 1.0);

    const auto m = classification_metrics({3, 1, 4, 2}, 0.5);
    CHECK(m.precision == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(m.recall == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(m.f1 == doctest::Approx(2.0 * 0.45 / 1.35).epsilon(1e-15));
    CHECK(m.specificity == doctest::Approx(0.8).epsilon(1e-15));

    // F1 is the harmonic mean: precision 0.9 and recall 0.88 give 0.8899
    const double p = 0.90, r = 0.88;
    CHECK(2 * p * r / (p + r) == doctest::Approx(0.88989).epsilon(1e-5));

    const auto degenerate = classification_metrics({0, 0, 5, 5}, 0.5);
    CHECK(degenerate.precision == 0.0);
    CHECK(degenerate.precision_undefined);
    CHECK(degenerate.f1_undefined);
    CHECK_FALSE(degenerate.recall_undefined);
    CHECK_FALSE(degenerate.specificity_undefined);
    CHECK_THROWS_AS(classification_metrics({0, 0, 0, 0}, 0.5), ValidationError);
}
