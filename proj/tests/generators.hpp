#pragma once

#include <milwsi/feature_bag.hpp>
#include <milwsi/mil_model.hpp>
#include <milwsi/rng.hpp>

#include <string>

namespace gen {

using namespace milwsi;

inline Eigen::MatrixXd random_features(Rng& rng, Eigen::Index n, Eigen::Index d)
{
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            x(i, j) = rng.normal();
    return x;
}

// Small model with non-zero biases so bias gradients are exercised.
inline MilModel random_model(Rng& rng, Eigen::Index d, Eigen::Index h, Eigen::Index a)
{
    auto m = init_model(d, h, a, rng.next());
    MilModel::zip(
        [&](const TensorInfo& info, auto& t) {
            if (info.weight)
                t *= 2.0;
            else
                for (Eigen::Index i = 0; i < t.size(); ++i)
                    t.data()[i] = 0.2 * rng.normal();
        },
        m);
    return m;
}

inline FeatureBag random_bag(Rng& rng)
{
    FeatureBag bag;
    bag.slide_id = "slide_" + std::to_string(rng.below(100000));
    bag.patch_size = rng.below(2) ? 224 : 256;
    const auto n = 1 + static_cast<Eigen::Index>(rng.below(40));
    const auto d = 1 + static_cast<Eigen::Index>(rng.below(24));
    bag.features.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        bag.coords.push_back({static_cast<std::int32_t>(rng.below(1 << 20)), static_cast<std::int32_t>(rng.below(1 << 20)),
                              bag.patch_size});
        for (Eigen::Index j = 0; j < d; ++j)
            bag.features(i, j) = rng.normal() * 10.0;
    }
    return bag;
}

} // namespace gen
