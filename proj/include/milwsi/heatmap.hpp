#pragma once

#include <milwsi/image.hpp>
#include <milwsi/tiler.hpp>

#include <span>
#include <vector>

namespace milwsi {

struct HeatmapParams {
    double clip_lo = 1.0;  // percentile
    double clip_hi = 99.0; // percentile
    double max_alpha = 0.6;
    int thumbnail_scale = 1; // full-resolution pixels per thumbnail pixel

    void validate() const;
};

// Nearest-rank percentile: sorted[max(1, ceil(p/100 * n)) - 1].
double nearest_rank_percentile(std::span<const double> values, double percentile);

// Clip to the [clip_lo, clip_hi] percentile range and min-max scale to
// [0, 1]. A degenerate range maps everything to 0.5.
std::vector<double> normalize_attention(std::span<const double> attention, const HeatmapParams& params);

// c' = round((1 - a) c + a * red) per channel, a = value * max_alpha.
Rgb blend_red(Rgb pixel, double alpha);

// Blends each patch's thumbnail rectangle with pure red. Rectangle of a
// patch at (x, y, p): [floor(x/s), floor((x+p)/s)) on each axis, so
// adjacent grid patches never share thumbnail pixels.
RasterImage render_heatmap(const RasterImage& thumbnail, std::span<const PatchCoord> coords,
                           std::span<const double> values, const HeatmapParams& params);

} // namespace milwsi
