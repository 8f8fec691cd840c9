#include <milwsi/features.hpp>

#include <milwsi/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace milwsi {

HandcraftedVector extract_handcrafted(const RasterImage& patch)
{
    if (patch.empty() || patch.width() != patch.height())
        throw ValidationError("handcrafted features need a square RGB patch");

    const int w = patch.width();
    const int h = patch.height();
    const double n = static_cast<double>(w) * static_cast<double>(h);

    HandcraftedVector f = HandcraftedVector::Zero();
    std::array<double, 3> sum{};
    std::array<double, 3> sum_sq{};
    std::vector<double> luma(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto p = patch.at(x, y);
            const std::array<double, 3> c{double(p.r), double(p.g), double(p.b)};
            for (int ch = 0; ch < 3; ++ch) {
                f(ch * 8 + static_cast<int>(c[static_cast<std::size_t>(ch)]) / 32) += 1.0;
                sum[static_cast<std::size_t>(ch)] += c[static_cast<std::size_t>(ch)];
                sum_sq[static_cast<std::size_t>(ch)] += c[static_cast<std::size_t>(ch)] * c[static_cast<std::size_t>(ch)];
            }
            luma[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] =
                0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
        }
    f.head<24>() /= n;

    for (std::size_t ch = 0; ch < 3; ++ch) {
        const double mean = sum[ch] / n;
        const double var = std::max(0.0, sum_sq[ch] / n - mean * mean);
        f(24 + 2 * static_cast<int>(ch)) = mean / 255.0;
        f(25 + 2 * static_cast<int>(ch)) = std::sqrt(var) / 255.0;
    }

    auto L = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return luma[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
    };
    double g_sum = 0.0;
    double g_sq = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double gx = 0.5 * (L(x + 1, y) - L(x - 1, y));
            const double gy = 0.5 * (L(x, y + 1) - L(x, y - 1));
            const double mag = std::sqrt(gx * gx + gy * gy) / 255.0;
            g_sum += mag;
            g_sq += mag * mag;
        }
    const double g_mean = g_sum / n;
    f(30) = g_mean;
    f(31) = std::sqrt(std::max(0.0, g_sq / n - g_mean * g_mean));
    return f;
}

FeatureBag extract_bag(const RasterImage& image, std::string slide_id, std::span<const PatchCoord> coords)
{
    if (coords.empty())
        throw ValidationError("slide '" + slide_id + "': no patches to extract");
    FeatureBag bag;
    bag.slide_id = std::move(slide_id);
    bag.patch_size = coords.front().patch_size;
    bag.coords.assign(coords.begin(), coords.end());
    bag.features.resize(static_cast<Eigen::Index>(coords.size()), kHandcraftedDim);
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (coords[i].patch_size != bag.patch_size)
            throw ValidationError("slide '" + bag.slide_id + "': mixed patch sizes");
        bag.features.row(static_cast<Eigen::Index>(i)) = extract_handcrafted(crop_patch(image, coords[i])).transpose();
    }
    return bag;
}

} // namespace milwsi
