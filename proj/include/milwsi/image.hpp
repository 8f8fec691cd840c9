#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace milwsi {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit RGB raster, row-major, interleaved.
class RasterImage {
public:
    RasterImage() = default;
    RasterImage(int width, int height, Rgb fill = {});
    RasterImage(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return width_ == 0; }

    Rgb at(int x, int y) const
    {
        const auto* p = &pixels_[offset(x, y)];
        return {p[0], p[1], p[2]};
    }
    void set(int x, int y, Rgb c)
    {
        auto* p = &pixels_[offset(x, y)];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    }

    const std::vector<std::uint8_t>& pixels() const { return pixels_; }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
    std::size_t offset(int x, int y) const
    {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

// PNG (.png) or binary PPM (.ppm); chosen by extension. PNG input with
// alpha, palette or grey is converted to 8-bit RGB.
RasterImage read_image(const std::filesystem::path& path);
void write_image(const RasterImage& image, const std::filesystem::path& path);

} // namespace milwsi
