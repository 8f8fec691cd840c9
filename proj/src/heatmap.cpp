#include <milwsi/heatmap.hpp>

#include <milwsi/error.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace milwsi {

void HeatmapParams::validate() const
{
    if (!(clip_lo >= 0.0 && clip_hi <= 100.0 && clip_lo < clip_hi))
        throw ValidationError("heatmap clip percentiles must satisfy 0 <= lo < hi <= 100");
    if (!(max_alpha >= 0.0 && max_alpha <= 1.0))
        throw ValidationError("heatmap max_alpha must lie in [0, 1]");
    if (thumbnail_scale < 1)
        throw ValidationError("heatmap thumbnail scale must be at least 1");
}

double nearest_rank_percentile(std::span<const double> values, double percentile)
{
    if (values.empty())
        throw ValidationError("percentile of an empty list");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

std::vector<double> normalize_attention(std::span<const double> attention, const HeatmapParams& params)
{
    params.validate();
    if (attention.empty())
        throw ValidationError("attention list is empty");
    const double lo = nearest_rank_percentile(attention, params.clip_lo);
    const double hi = nearest_rank_percentile(attention, params.clip_hi);
    std::vector<double> out(attention.size(), 0.5);
    if (!(hi > lo))
        return out;
    for (std::size_t i = 0; i < attention.size(); ++i)
        out[i] = (std::clamp(attention[i], lo, hi) - lo) / (hi - lo);
    return out;
}

Rgb blend_red(Rgb pixel, double alpha)
{
    auto mix = [alpha](std::uint8_t c, double target) {
        const double v = (1.0 - alpha) * c + alpha * target;
        // Snap to 1e-9 so exact halves written in decimal round up.
        const double snapped = std::round(v * 1e9) / 1e9;
        return static_cast<std::uint8_t>(std::clamp(std::floor(snapped + 0.5), 0.0, 255.0));
    };
    return {mix(pixel.r, 255.0), mix(pixel.g, 0.0), mix(pixel.b, 0.0)};
}

RasterImage render_heatmap(const RasterImage& thumbnail, std::span<const PatchCoord> coords,
                           std::span<const double> values, const HeatmapParams& params)
{
    params.validate();
    if (coords.size() != values.size())
        throw ValidationError("heatmap: " + std::to_string(coords.size()) + " coordinates but " +
                              std::to_string(values.size()) + " values");
    RasterImage out = thumbnail;
    const int s = params.thumbnail_scale;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const auto& c = coords[i];
        const int x0 = c.x / s;
        const int y0 = c.y / s;
        const int x1 = (c.x + c.patch_size) / s;
        const int y1 = (c.y + c.patch_size) / s;
        if (c.x < 0 || c.y < 0 || c.patch_size < 1 || x1 > thumbnail.width() || y1 > thumbnail.height())
            throw ValidationError("heatmap: patch (" + std::to_string(c.x) + "," + std::to_string(c.y) +
                                  ") falls outside the thumbnail at scale " + std::to_string(s));
        const double alpha = std::clamp(values[i], 0.0, 1.0) * params.max_alpha;
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x)
                out.set(x, y, blend_red(thumbnail.at(x, y), alpha));
    }
    return out;
}

} // namespace milwsi
