#pragma once

#include <milwsi/image.hpp>

#include <array>
#include <cstdint>
#include <vector>

namespace milwsi {

struct PatchCoord {
    std::int32_t x = 0;
    std::int32_t y = 0;
    std::int32_t patch_size = 0;
    friend bool operator==(const PatchCoord&, const PatchCoord&) = default;
};

// Thumbnail-scale foreground mask. Mask pixel (i, j) summarises the
// full-resolution block [i*scale, (i+1)*scale) x [j*scale, (j+1)*scale),
// clipped to the image.
struct TissueMask {
    int width = 0;
    int height = 0;
    int scale = 1;
    std::vector<std::uint8_t> bits;
    // Saturation cut: a mask pixel is set iff its saturation byte > threshold.
    int threshold = 0;
    // Set when the saturation histogram has a single populated bin.
    bool degenerate = false;

    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] != 0; }
    std::size_t count() const;

    static TissueMask filled(int image_w, int image_h, int scale, bool value);
};

inline constexpr int kDefaultPatchSize = 256;
inline constexpr int kResNetPatchSize = 224;
inline constexpr double kDefaultMinTissueFrac = 0.5;

// HSV saturation of an 8-bit colour mapped to 0..255.
std::uint8_t saturation_byte(double r, double g, double b);

// Otsu cut over a 256-bin histogram: the largest between-class variance,
// first maximiser wins. Class 0 is bins <= threshold. Returns -1 when
// fewer than two bins are populated.
int otsu_threshold(const std::array<std::uint64_t, 256>& histogram);

TissueMask build_tissue_mask(const RasterImage& image, int scale);

// Non-overlapping grid with stride patch_size anchored at the origin. A cell
// is kept when the fraction of set mask pixels it touches is at least
// min_tissue_frac. Sorted by (y, x).
std::vector<PatchCoord> tile_grid(int image_w, int image_h, int patch_size, const TissueMask& mask,
                                  double min_tissue_frac);

RasterImage crop_patch(const RasterImage& image, const PatchCoord& coord);

} // namespace milwsi
