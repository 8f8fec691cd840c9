#pragma once

#include <milwsi/error.hpp>
#include <milwsi/feature_bag.hpp>
#include <milwsi/mil_model.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace milwsi {

template <typename Scalar>
struct BagOutputT {
    using Matrix = typename MilParams<Scalar>::Matrix;
    using Vector = typename MilParams<Scalar>::Vector;

    Eigen::Matrix<Scalar, 2, 1> logits;
    Eigen::Matrix<Scalar, 2, 1> probs;
    Vector attention; // N, softmax over instances
    Vector scores;    // N, pre-softmax attention scores
    Matrix hidden;    // N x H, relu(proj)
    Vector embedding; // H, attention-pooled hidden
    Matrix gate_tanh; // N x A
    Matrix gate_sig;  // N x A

    Scalar positive_prob() const { return probs(1); }
};

using BagOutput = BagOutputT<double>;

namespace detail {

template <typename Derived>
auto softmax(const Eigen::MatrixBase<Derived>& x)
{
    using Scalar = typename Derived::Scalar;
    const Scalar mx = x.maxCoeff();
    typename Derived::PlainObject e = (x.array() - mx).exp().matrix();
    return typename Derived::PlainObject(e / e.sum());
}

template <typename Scalar>
Scalar sigmoid(Scalar v)
{
    return Scalar(1) / (Scalar(1) + std::exp(-v));
}

} // namespace detail

// Forward pass over one bag, rows of `features` are instances.
template <typename Scalar, typename Derived>
BagOutputT<Scalar> forward(const MilParams<Scalar>& model, const Eigen::MatrixBase<Derived>& features)
{
    if (features.rows() < 1)
        throw ValidationError("forward: bag has no instances");
    if (features.cols() != model.dims.input)
        throw ValidationError("forward: bag dimension " + std::to_string(features.cols()) +
                              " does not match model input dimension " + std::to_string(model.dims.input));
    if (!features.allFinite())
        throw ValidationError("forward: non-finite feature value");

    BagOutputT<Scalar> out;
    out.hidden = ((features * model.proj_w.transpose()).rowwise() + model.proj_b.transpose()).cwiseMax(Scalar(0));
    out.gate_tanh = ((out.hidden * model.attn_v_w.transpose()).rowwise() + model.attn_v_b.transpose()).array().tanh();
    out.gate_sig = ((out.hidden * model.attn_u_w.transpose()).rowwise() + model.attn_u_b.transpose())
                       .unaryExpr([](Scalar v) { return detail::sigmoid(v); });
    out.scores = (out.gate_tanh.cwiseProduct(out.gate_sig) * model.attn_w.transpose()).array() + model.attn_b(0);
    out.attention = detail::softmax(out.scores);
    out.embedding = out.hidden.transpose() * out.attention;
    out.logits = model.cls_w * out.embedding + model.cls_b;
    out.probs = detail::softmax(out.logits);
    return out;
}

template <typename Scalar>
BagOutputT<Scalar> forward(const MilParams<Scalar>& model, const FeatureBag& bag)
{
    return forward(model, bag.features.template cast<Scalar>());
}

// Top-k / bottom-k instance selection by attention, ties broken by index.
// k is clamped to [1, N/2]; the result is empty when N < 2.
struct InstanceSelection {
    std::vector<Eigen::Index> top;
    std::vector<Eigen::Index> bottom;
};

template <typename Vector>
InstanceSelection select_instances(const Vector& attention, int k)
{
    const Eigen::Index n = attention.size();
    const Eigen::Index kk = std::min<Eigen::Index>(std::max(k, 1), n / 2);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return attention(a) > attention(b); });
    InstanceSelection sel;
    sel.top.assign(order.begin(), order.begin() + kk);
    sel.bottom.assign(order.end() - kk, order.end());
    return sel;
}

template <typename Scalar>
struct InstanceLossT {
    Scalar loss = 0;                            // mean cross-entropy over sampled instances
    typename MilParams<Scalar>::Matrix d_hidden; // N x H, d loss / d hidden
    typename MilParams<Scalar>::Matrix d_inst_w;
    typename MilParams<Scalar>::Vector d_inst_b;
    InstanceSelection selection;
};

// Per-instance linear classifier on hidden rows of the k highest- and k
// lowest-attention instances. Positive bags: top-k target 1, bottom-k
// target 0. Negative bags: all sampled target 0. Selection is treated as
// constant, so no gradient flows through attention.
template <typename Scalar>
InstanceLossT<Scalar> instance_loss(const MilParams<Scalar>& model, const BagOutputT<Scalar>& output, int label, int k)
{
    InstanceLossT<Scalar> res;
    res.d_hidden = MilParams<Scalar>::Matrix::Zero(output.hidden.rows(), output.hidden.cols());
    res.d_inst_w = MilParams<Scalar>::Matrix::Zero(model.inst_w.rows(), model.inst_w.cols());
    res.d_inst_b = MilParams<Scalar>::Vector::Zero(model.inst_b.size());
    res.selection = select_instances(output.attention, k);

    const auto m = res.selection.top.size() + res.selection.bottom.size();
    if (m == 0)
        return res;
    const Scalar inv_m = Scalar(1) / static_cast<Scalar>(m);
    auto visit = [&](Eigen::Index i, int target) {
        const Eigen::Matrix<Scalar, 2, 1> logit = model.inst_w * output.hidden.row(i).transpose() + model.inst_b;
        Eigen::Matrix<Scalar, 2, 1> q = detail::softmax(logit);
        res.loss -= std::log(q(target)) * inv_m;
        q(target) -= Scalar(1);
        q *= inv_m;
        res.d_inst_w.noalias() += q * output.hidden.row(i);
        res.d_inst_b += q;
        res.d_hidden.row(i).noalias() += (model.inst_w.transpose() * q).transpose();
    };
    for (auto i : res.selection.top)
        visit(i, label == 1 ? 1 : 0);
    for (auto i : res.selection.bottom)
        visit(i, 0);
    return res;
}

struct LossOptions {
    double weight_decay = 0.0;
    bool instance_loss = false;
    double instance_weight = 0.3; // lambda
    int instance_k = 8;
};

template <typename Scalar>
struct LossResultT {
    Scalar loss = 0;          // total objective
    Scalar cross_entropy = 0; // -log p[label]
    Scalar decay = 0;         // weight_decay * 0.5 * ||W||^2
    Scalar instance = 0;      // unweighted instance loss
    MilParams<Scalar> grads;
    BagOutputT<Scalar> output;
};

using LossResult = LossResultT<double>;

// Objective = -log p[label] + weight_decay/2 * sum ||W||^2 (weights only;
// the instance head is decayed only while the instance loss is active)
// + instance_weight * instance loss (when enabled). Gradients are exact.
template <typename Scalar, typename Derived>
LossResultT<Scalar> loss_and_backward(const MilParams<Scalar>& model, const Eigen::MatrixBase<Derived>& features,
                                      int label, const LossOptions& opts)
{
    if (label != 0 && label != 1)
        throw ValidationError("label must be 0 or 1");
    using Matrix = typename MilParams<Scalar>::Matrix;

    LossResultT<Scalar> res;
    res.output = forward(model, features);
    const auto& out = res.output;
    auto& g = res.grads;
    g = model.zeros_like();

    res.cross_entropy = -std::log(out.probs(label));

    Eigen::Matrix<Scalar, 2, 1> d_logits = out.probs;
    d_logits(label) -= Scalar(1);
    g.cls_w.noalias() = d_logits * out.embedding.transpose();
    g.cls_b = d_logits;
    const typename MilParams<Scalar>::Vector d_embed = model.cls_w.transpose() * d_logits;

    // z = H^T a
    Matrix d_hidden = out.attention * d_embed.transpose();
    const typename MilParams<Scalar>::Vector d_attn = out.hidden * d_embed;
    const Scalar centre = out.attention.dot(d_attn);
    const typename MilParams<Scalar>::Vector d_scores = out.attention.cwiseProduct((d_attn.array() - centre).matrix());

    const Matrix gated = out.gate_tanh.cwiseProduct(out.gate_sig);
    g.attn_w.noalias() = d_scores.transpose() * gated;
    g.attn_b(0) = d_scores.sum();
    const Matrix d_gated = d_scores * model.attn_w;
    const Matrix d_v_pre =
        d_gated.cwiseProduct(out.gate_sig).cwiseProduct((Scalar(1) - out.gate_tanh.array().square()).matrix());
    const Matrix d_u_pre =
        d_gated.cwiseProduct(out.gate_tanh).cwiseProduct((out.gate_sig.array() * (Scalar(1) - out.gate_sig.array())).matrix());
    g.attn_v_w.noalias() = d_v_pre.transpose() * out.hidden;
    g.attn_v_b = d_v_pre.colwise().sum().transpose();
    g.attn_u_w.noalias() = d_u_pre.transpose() * out.hidden;
    g.attn_u_b = d_u_pre.colwise().sum().transpose();
    d_hidden.noalias() += d_v_pre * model.attn_v_w;
    d_hidden.noalias() += d_u_pre * model.attn_u_w;

    if (opts.instance_loss) {
        const auto inst = instance_loss(model, out, label, opts.instance_k);
        const auto lambda = static_cast<Scalar>(opts.instance_weight);
        res.instance = inst.loss;
        d_hidden.noalias() += lambda * inst.d_hidden;
        g.inst_w = lambda * inst.d_inst_w;
        g.inst_b = lambda * inst.d_inst_b;
    }

    // relu'(pre) = [hidden > 0]
    const Matrix d_pre = d_hidden.cwiseProduct((out.hidden.array() > Scalar(0)).matrix().template cast<Scalar>());
    g.proj_w.noalias() = d_pre.transpose() * features.template cast<Scalar>();
    g.proj_b = d_pre.colwise().sum().transpose();

    const auto wd = static_cast<Scalar>(opts.weight_decay);
    if (wd != Scalar(0)) {
        MilParams<Scalar>::zip(
            [&](const TensorInfo& info, const auto& w, auto& gw) {
                if (!info.weight || (!info.persisted && !opts.instance_loss))
                    return;
                res.decay += wd * Scalar(0.5) * w.squaredNorm();
                gw += wd * w;
            },
            model, g);
    }

    res.loss = res.cross_entropy + res.decay;
    if (opts.instance_loss)
        res.loss += static_cast<Scalar>(opts.instance_weight) * res.instance;
    return res;
}

template <typename Scalar>
LossResultT<Scalar> loss_and_backward(const MilParams<Scalar>& model, const FeatureBag& bag, int label,
                                      const LossOptions& opts)
{
    return loss_and_backward(model, bag.features.template cast<Scalar>(), label, opts);
}

// Objective value only, matching loss_and_backward().loss. Used by
// finite-difference checks and validation.
template <typename Scalar, typename Derived>
Scalar objective(const MilParams<Scalar>& model, const Eigen::MatrixBase<Derived>& features, int label,
                 const LossOptions& opts)
{
    const auto out = forward(model, features);
    Scalar loss = -std::log(out.probs(label));
    const auto wd = static_cast<Scalar>(opts.weight_decay);
    if (wd != Scalar(0)) {
        MilParams<Scalar>::zip(
            [&](const TensorInfo& info, const auto& w) {
                if (info.weight && (info.persisted || opts.instance_loss))
                    loss += wd * Scalar(0.5) * w.squaredNorm();
            },
            model);
    }
    if (opts.instance_loss)
        loss += static_cast<Scalar>(opts.instance_weight) * instance_loss(model, out, label, opts.instance_k).loss;
    return loss;
}

} // namespace milwsi
