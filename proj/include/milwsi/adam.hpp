#pragma once

#include <milwsi/error.hpp>
#include <milwsi/mil_model.hpp>

#include <cmath>
#include <cstdint>

namespace milwsi {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // Applied as an L2 term inside the loss, not decoupled.
    double weight_decay = 1e-5;
};

template <typename Scalar>
struct AdamStateT {
    AdamConfig config;
    std::uint64_t step = 0;
    MilParams<Scalar> first_moment;
    MilParams<Scalar> second_moment;

    static AdamStateT for_model(const MilParams<Scalar>& model, const AdamConfig& config)
    {
        return {config, 0, model.zeros_like(), model.zeros_like()};
    }
};

using AdamState = AdamStateT<double>;

// One bias-corrected Adam update of every tensor.
template <typename Scalar>
void adam_step(MilParams<Scalar>& model, const MilParams<Scalar>& grads, AdamStateT<Scalar>& state)
{
    if (!model.same_shape(grads) || !model.same_shape(state.first_moment) || !model.same_shape(state.second_moment))
        throw ValidationError("adam_step: gradient or moment shapes do not match the model");

    ++state.step;
    const auto& c = state.config;
    const auto b1 = static_cast<Scalar>(c.beta1);
    const auto b2 = static_cast<Scalar>(c.beta2);
    const auto t = static_cast<Scalar>(state.step);
    const Scalar correction1 = Scalar(1) - std::pow(b1, t);
    const Scalar correction2 = Scalar(1) - std::pow(b2, t);
    const auto lr = static_cast<Scalar>(c.lr);
    const auto eps = static_cast<Scalar>(c.eps);

    MilParams<Scalar>::zip(
        [&](const TensorInfo&, auto& theta, const auto& g, auto& m, auto& v) {
            m = b1 * m + (Scalar(1) - b1) * g;
            v = b2 * v + (Scalar(1) - b2) * g.cwiseAbs2();
            theta.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
        },
        model, grads, state.first_moment, state.second_moment);
}

} // namespace milwsi
