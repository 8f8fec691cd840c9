#include <milwsi/tiler.hpp>

#include <milwsi/error.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace milwsi {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

} // namespace

std::size_t TissueMask::count() const
{
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

TissueMask TissueMask::filled(int image_w, int image_h, int scale, bool value)
{
    if (scale < 1 || image_w < 1 || image_h < 1)
        throw ValidationError("mask scale and image dimensions must be positive");
    TissueMask m;
    m.scale = scale;
    m.width = ceil_div(image_w, scale);
    m.height = ceil_div(image_h, scale);
    m.bits.assign(static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.height), value ? 1 : 0);
    return m;
}

std::uint8_t saturation_byte(double r, double g, double b)
{
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    if (mx <= 0.0)
        return 0;
    return static_cast<std::uint8_t>(std::lround(255.0 * (mx - mn) / mx));
}

int otsu_threshold(const std::array<std::uint64_t, 256>& histogram)
{
    int populated = 0;
    double total = 0.0;
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) {
        const auto c = static_cast<double>(histogram[static_cast<std::size_t>(i)]);
        populated += c > 0 ? 1 : 0;
        total += c;
        sum_all += c * i;
    }
    if (populated < 2)
        return -1;

    double w0 = 0.0;
    double sum0 = 0.0;
    double best = -1.0;
    int best_t = -1;
    for (int t = 0; t < 255; ++t) {
        const auto c = static_cast<double>(histogram[static_cast<std::size_t>(t)]);
        w0 += c;
        sum0 += c * t;
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0)
            continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (between > best) {
            best = between;
            best_t = t;
        }
    }
    return best_t;
}

TissueMask build_tissue_mask(const RasterImage& image, int scale)
{
    if (image.empty())
        throw ValidationError("cannot build a tissue mask for an empty image");
    if (scale < 1 || scale > std::min(image.width(), image.height()))
        throw ValidationError("mask scale must be in [1, min(width, height)], got " + std::to_string(scale));

    TissueMask mask = TissueMask::filled(image.width(), image.height(), scale, false);
    std::vector<std::uint8_t> sat(mask.bits.size());
    std::array<std::uint64_t, 256> hist{};
    for (int my = 0; my < mask.height; ++my) {
        const int y0 = my * scale;
        const int y1 = std::min(y0 + scale, image.height());
        for (int mx = 0; mx < mask.width; ++mx) {
            const int x0 = mx * scale;
            const int x1 = std::min(x0 + scale, image.width());
            double r = 0, g = 0, b = 0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) {
                    const auto p = image.at(x, y);
                    r += p.r;
                    g += p.g;
                    b += p.b;
                }
            const double n = static_cast<double>((x1 - x0) * (y1 - y0));
            const auto s = saturation_byte(r / n, g / n, b / n);
            sat[static_cast<std::size_t>(my) * static_cast<std::size_t>(mask.width) + static_cast<std::size_t>(mx)] = s;
            ++hist[s];
        }
    }

    const int t = otsu_threshold(hist);
    if (t < 0) {
        mask.degenerate = true;
        mask.threshold = 255;
        return mask;
    }
    mask.threshold = t;
    for (std::size_t i = 0; i < sat.size(); ++i)
        mask.bits[i] = sat[i] > t ? 1 : 0;
    return mask;
}

std::vector<PatchCoord> tile_grid(int image_w, int image_h, int patch_size, const TissueMask& mask,
                                  double min_tissue_frac)
{
    if (patch_size < 1 || patch_size > std::min(image_w, image_h))
        throw ValidationError("patch size " + std::to_string(patch_size) + " does not fit a " +
                              std::to_string(image_w) + "x" + std::to_string(image_h) + " image");
    if (!(min_tissue_frac >= 0.0 && min_tissue_frac <= 1.0))
        throw ValidationError("min_tissue_frac must lie in [0, 1]");
    if (mask.scale < 1 || mask.width != ceil_div(image_w, mask.scale) || mask.height != ceil_div(image_h, mask.scale))
        throw ValidationError("tissue mask dimensions are inconsistent with the image size and mask scale");

    std::vector<PatchCoord> out;
    const int s = mask.scale;
    for (int y = 0; y + patch_size <= image_h; y += patch_size) {
        const int my0 = y / s;
        const int my1 = ceil_div(y + patch_size, s);
        for (int x = 0; x + patch_size <= image_w; x += patch_size) {
            const int mx0 = x / s;
            const int mx1 = ceil_div(x + patch_size, s);
            std::size_t on = 0;
            for (int my = my0; my < my1; ++my)
                for (int mx = mx0; mx < mx1; ++mx)
                    on += mask.at(mx, my) ? 1 : 0;
            const auto cells = static_cast<std::size_t>(my1 - my0) * static_cast<std::size_t>(mx1 - mx0);
            if (static_cast<double>(on) >= min_tissue_frac * static_cast<double>(cells))
                out.push_back({x, y, patch_size});
        }
    }
    return out;
}

RasterImage crop_patch(const RasterImage& image, const PatchCoord& coord)
{
    if (coord.patch_size < 1 || coord.x < 0 || coord.y < 0 || coord.x + coord.patch_size > image.width() ||
        coord.y + coord.patch_size > image.height())
        throw ValidationError("patch (" + std::to_string(coord.x) + "," + std::to_string(coord.y) + "," +
                              std::to_string(coord.patch_size) + ") lies outside the " +
                              std::to_string(image.width()) + "x" + std::to_string(image.height()) + " image");
    const int p = coord.patch_size;
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(p) * static_cast<std::size_t>(p) * 3);
    const auto& src = image.pixels();
    const auto row_bytes = static_cast<std::size_t>(p) * 3;
    for (int y = 0; y < p; ++y) {
        const auto from = (static_cast<std::size_t>(coord.y + y) * static_cast<std::size_t>(image.width()) +
                           static_cast<std::size_t>(coord.x)) * 3;
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(from), row_bytes,
                    pixels.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(y) * row_bytes));
    }
    return RasterImage(p, p, std::move(pixels));
}

} // namespace milwsi
