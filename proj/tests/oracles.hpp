#pragma once

// Independent reference computations for tests. Nothing here calls the
// code path it is used to check.

#include <milwsi/mil_model.hpp>
#include <milwsi/mil_net.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace oracle {

// (#concordant + 0.5 #tied) / (#pos * #neg) over all positive/negative pairs.
inline double pair_count_auroc(std::span<const double> scores, std::span<const int> labels)
{
    double concordant = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1)
            continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0)
                continue;
            pairs += 1.0;
            if (scores[i] > scores[j])
                concordant += 1.0;
            else if (scores[i] == scores[j])
                concordant += 0.5;
        }
    }
    return concordant / pairs;
}

// Otsu by exhaustive search over cut points, computing class variances
// directly from the raw values.
inline int brute_force_otsu(const std::vector<int>& values)
{
    double best = -1.0;
    int best_t = -1;
    for (int t = 0; t < 255; ++t) {
        std::vector<int> lo, hi;
        for (int v : values)
            (v <= t ? lo : hi).push_back(v);
        if (lo.empty() || hi.empty())
            continue;
        auto mean = [](const std::vector<int>& xs) {
            double s = 0;
            for (int x : xs)
                s += x;
            return s / static_cast<double>(xs.size());
        };
        const double n = static_cast<double>(values.size());
        const double w0 = static_cast<double>(lo.size()) / n;
        const double w1 = static_cast<double>(hi.size()) / n;
        const double d = mean(lo) - mean(hi);
        const double between = w0 * w1 * d * d;
        if (between > best + 1e-12) {
            best = between;
            best_t = t;
        }
    }
    return best_t;
}

// Scalar loop evaluation of the network's bag logits.
inline std::array<double, 2> scalar_logits(const milwsi::MilModel& m, const Eigen::MatrixXd& x,
                                           std::vector<double>* attention_out = nullptr)
{
    const auto n = x.rows(), d = x.cols(), h = m.dims.hidden, a = m.dims.attention;
    std::vector<std::vector<double>> hid(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(h)));
    std::vector<double> score(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < h; ++k) {
            double s = m.proj_b(k);
            for (Eigen::Index j = 0; j < d; ++j)
                s += m.proj_w(k, j) * x(i, j);
            hid[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = s > 0 ? s : 0.0;
        }
        double sc = m.attn_b(0);
        for (Eigen::Index q = 0; q < a; ++q) {
            double v = m.attn_v_b(q), u = m.attn_u_b(q);
            for (Eigen::Index k = 0; k < h; ++k) {
                v += m.attn_v_w(q, k) * hid[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
                u += m.attn_u_w(q, k) * hid[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
            }
            sc += m.attn_w(0, q) * std::tanh(v) * (1.0 / (1.0 + std::exp(-u)));
        }
        score[static_cast<std::size_t>(i)] = sc;
    }
    const double mx = *std::max_element(score.begin(), score.end());
    double z = 0.0;
    std::vector<double> att(score.size());
    for (std::size_t i = 0; i < score.size(); ++i)
        z += att[i] = std::exp(score[i] - mx);
    for (auto& v : att)
        v /= z;
    if (attention_out)
        *attention_out = att;
    std::array<double, 2> logits{m.cls_b(0), m.cls_b(1)};
    for (Eigen::Index k = 0; k < h; ++k) {
        double emb = 0.0;
        for (std::size_t i = 0; i < att.size(); ++i)
            emb += att[i] * hid[i][static_cast<std::size_t>(k)];
        logits[0] += m.cls_w(0, k) * emb;
        logits[1] += m.cls_w(1, k) * emb;
    }
    return logits;
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::string worst;
    std::size_t checked = 0;
};

// Central differences of milwsi::objective against analytic gradients,
// relative error |a - n| / max(|a|, |n|, floor). Entries below floor are
// structurally zero (the attention bias under softmax) and are compared on an
// absolute scale instead.
inline GradCheck finite_difference_check(const milwsi::MilModel& model, const Eigen::MatrixXd& x, int label,
                                         const milwsi::LossOptions& opts, double eps = 1e-5, double floor = 1e-6)
{
    const auto analytic = milwsi::loss_and_backward(model, x, label, opts).grads;
    GradCheck res;
    auto probe = model;
    milwsi::MilModel::zip(
        [&](const milwsi::TensorInfo& info, auto& p, const auto& g) {
            for (Eigen::Index r = 0; r < p.rows(); ++r)
                for (Eigen::Index c = 0; c < p.cols(); ++c) {
                    const double saved = p(r, c);
                    p(r, c) = saved + eps;
                    const double up = milwsi::objective(probe, x, label, opts);
                    p(r, c) = saved - eps;
                    const double down = milwsi::objective(probe, x, label, opts);
                    p(r, c) = saved;
                    const double numeric = (up - down) / (2 * eps);
                    const double a = g(r, c);
                    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
                    ++res.checked;
                    if (rel > res.max_rel_error) {
                        res.max_rel_error = rel;
                        res.worst = std::string(info.name) + "(" + std::to_string(r) + "," + std::to_string(c) + ")";
                    }
                }
        },
        probe, analytic);
    return res;
}

// Reference Adam on one scalar.
struct ScalarAdam {
    double lr, b1, b2, eps;
    double m = 0, v = 0;
    int t = 0;
    double step(double theta, double g)
    {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        return theta - lr * mh / (std::sqrt(vh) + eps);
    }
};

} // namespace oracle
