#pragma once

#include <milwsi/error.hpp>
#include <milwsi/rng.hpp>

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace milwsi {

struct MilDims {
    Eigen::Index input = 0;      // D, feature dimension
    Eigen::Index hidden = 512;   // H
    Eigen::Index attention = 256; // A

    friend bool operator==(const MilDims&, const MilDims&) = default;
};

struct TensorInfo {
    std::string_view name;
    bool weight;    // L2-decayed and Xavier-initialised; biases are neither
    bool persisted; // written to checkpoints
};

// Parameters of the gated-attention MIL network. The same layout holds
// gradients and Adam moments.
//
//   h_i   = relu(proj_w x_i + proj_b)
//   s_i   = attn_w (tanh(attn_v_w h_i + attn_v_b) * sigmoid(attn_u_w h_i + attn_u_b)) + attn_b
//   a     = softmax_i(s_i)
//   z     = sum_i a_i h_i
//   logit = cls_w z + cls_b
//
// inst_w/inst_b form the auxiliary per-instance classifier used only by the
// optional instance loss; they are not part of the checkpoint.
template <typename Scalar>
struct MilParams {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    MilDims dims;
    std::uint64_t seed = 0;

    Matrix proj_w;   // H x D
    Vector proj_b;   // H
    Matrix attn_v_w; // A x H, tanh branch
    Vector attn_v_b;
    Matrix attn_u_w; // A x H, sigmoid gate
    Vector attn_u_b;
    Matrix attn_w;   // 1 x A
    Vector attn_b;   // 1
    Matrix cls_w;    // 2 x H
    Vector cls_b;    // 2
    Matrix inst_w;   // 2 x H
    Vector inst_b;   // 2

    // Calls f(info, tensor_of_p0, tensor_of_p1, ...) for every tensor, in
    // checkpoint order followed by the instance head.
    template <typename F, typename... Ps>
    static void zip(F&& f, Ps&... ps)
    {
        f(TensorInfo{"proj_w", true, true}, ps.proj_w...);
        f(TensorInfo{"proj_b", false, true}, ps.proj_b...);
        f(TensorInfo{"attn_v_w", true, true}, ps.attn_v_w...);
        f(TensorInfo{"attn_v_b", false, true}, ps.attn_v_b...);
        f(TensorInfo{"attn_u_w", true, true}, ps.attn_u_w...);
        f(TensorInfo{"attn_u_b", false, true}, ps.attn_u_b...);
        f(TensorInfo{"attn_w", true, true}, ps.attn_w...);
        f(TensorInfo{"attn_b", false, true}, ps.attn_b...);
        f(TensorInfo{"cls_w", true, true}, ps.cls_w...);
        f(TensorInfo{"cls_b", false, true}, ps.cls_b...);
        f(TensorInfo{"inst_w", true, false}, ps.inst_w...);
        f(TensorInfo{"inst_b", false, false}, ps.inst_b...);
    }

    static MilParams zeros(const MilDims& d)
    {
        MilParams p;
        p.dims = d;
        p.proj_w = Matrix::Zero(d.hidden, d.input);
        p.proj_b = Vector::Zero(d.hidden);
        p.attn_v_w = Matrix::Zero(d.attention, d.hidden);
        p.attn_v_b = Vector::Zero(d.attention);
        p.attn_u_w = Matrix::Zero(d.attention, d.hidden);
        p.attn_u_b = Vector::Zero(d.attention);
        p.attn_w = Matrix::Zero(1, d.attention);
        p.attn_b = Vector::Zero(1);
        p.cls_w = Matrix::Zero(2, d.hidden);
        p.cls_b = Vector::Zero(2);
        p.inst_w = Matrix::Zero(2, d.hidden);
        p.inst_b = Vector::Zero(2);
        return p;
    }

    MilParams zeros_like() const
    {
        auto z = zeros(dims);
        z.seed = seed;
        return z;
    }

    bool all_finite() const
    {
        bool ok = true;
        zip([&](const TensorInfo&, const auto& t) { ok = ok && t.allFinite(); }, *this);
        return ok;
    }

    bool same_shape(const MilParams& other) const
    {
        bool ok = dims == other.dims;
        zip([&](const TensorInfo&, const auto& a, const auto& b) { ok = ok && a.rows() == b.rows() && a.cols() == b.cols(); },
            *this, other);
        return ok;
    }

    template <typename NewScalar>
    MilParams<NewScalar> cast() const
    {
        MilParams<NewScalar> out = MilParams<NewScalar>::zeros(dims);
        out.seed = seed;
        MilParams<NewScalar>::zip(
            [](const TensorInfo&, auto& dst, const auto& src) { dst = src.template cast<NewScalar>(); }, out, *this);
        return out;
    }

    friend bool operator==(const MilParams& a, const MilParams& b)
    {
        if (a.dims != b.dims || a.seed != b.seed)
            return false;
        bool eq = true;
        zip([&](const TensorInfo&, const auto& x, const auto& y) { eq = eq && x == y; }, a, b);
        return eq;
    }
};

using MilModel = MilParams<double>;
using MilGrads = MilParams<double>;

inline double xavier_bound(Eigen::Index fan_in, Eigen::Index fan_out)
{
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// Xavier-uniform weights, bound sqrt(6 / (fan_in + fan_out)) with fan_in the
// column count and fan_out the row count; zero biases. Tensors are drawn in
// zip() order, row-major, from one mt19937_64 stream seeded with seed.
template <typename Scalar = double>
MilParams<Scalar> init_model(Eigen::Index input_dim, Eigen::Index hidden_dim, Eigen::Index attention_dim,
                             std::uint64_t seed)
{
    if (input_dim < 1 || hidden_dim < 1 || attention_dim < 1)
        throw ValidationError("model dimensions must be at least 1");
    auto p = MilParams<Scalar>::zeros({input_dim, hidden_dim, attention_dim});
    p.seed = seed;
    Rng rng(seed);
    MilParams<Scalar>::zip(
        [&](const TensorInfo& info, auto& t) {
            if (!info.weight)
                return;
            const double bound = xavier_bound(t.cols(), t.rows());
            for (Eigen::Index r = 0; r < t.rows(); ++r)
                for (Eigen::Index c = 0; c < t.cols(); ++c)
                    t(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
        },
        p);
    return p;
}

} // namespace milwsi
