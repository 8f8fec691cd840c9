#include <milwsi/image.hpp>

#include <milwsi/error.hpp>

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

namespace milwsi {

RasterImage::RasterImage(int width, int height, Rgb fill) : width_(width), height_(height)
{
    if (width < 1 || height < 1)
        throw ValidationError("image dimensions must be positive");
    pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
        pixels_[i] = fill.r;
        pixels_[i + 1] = fill.g;
        pixels_[i + 2] = fill.b;
    }
}

RasterImage::RasterImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels))
{
    if (width < 1 || height < 1)
        throw ValidationError("image dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3)
        throw ValidationError("pixel buffer length does not match width*height*3");
}

namespace {

std::string lower_ext(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg)
{
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    *err = msg;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

RasterImage read_png(const std::filesystem::path& path)
{
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        throw IoError("cannot open image '" + path.string() + "'");

    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialisation failed");
    }

    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("invalid PNG '" + path.string() + "': " + err);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);

    if (depth == 16)
        png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    pixels.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    rows.resize(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y)
        rows[static_cast<std::size_t>(y)] = pixels.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width) * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return RasterImage(width, height, std::move(pixels));
}

void write_png(const RasterImage& image, const std::filesystem::path& path)
{
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        throw IoError("cannot write image '" + path.string() + "'");

    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(image.height()));
    auto* base = const_cast<std::uint8_t*>(image.pixels().data());
    for (int y = 0; y < image.height(); ++y)
        rows[static_cast<std::size_t>(y)] = base + static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width()) * 3;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing PNG '" + path.string() + "': " + err);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Binary P6, maxval 255. Comments are skipped.
RasterImage read_ppm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open image '" + path.string() + "'");
    auto token = [&]() {
        std::string t;
        char c = 0;
        while (in.get(c)) {
            if (c == '#') {
                std::string skip;
                std::getline(in, skip);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!t.empty())
                    break;
                continue;
            }
            t.push_back(c);
        }
        return t;
    };
    if (token() != "P6")
        throw FormatError("'" + path.string() + "' is not a binary PPM (P6)");
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(token());
        height = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw FormatError("malformed PPM header in '" + path.string() + "'");
    }
    if (width < 1 || height < 1 || maxval != 255)
        throw FormatError("unsupported PPM dimensions or maxval in '" + path.string() + "'");
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    in.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(pixels.size()))
        throw FormatError("truncated PPM '" + path.string() + "'");
    return RasterImage(width, height, std::move(pixels));
}

void write_ppm(const RasterImage& image, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write image '" + path.string() + "'");
    out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels().data()), static_cast<std::streamsize>(image.pixels().size()));
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

} // namespace

RasterImage read_image(const std::filesystem::path& path)
{
    const auto ext = lower_ext(path);
    if (ext == ".ppm")
        return read_ppm(path);
    if (ext == ".png")
        return read_png(path);
    throw ValidationError("unsupported image extension '" + ext + "' (expected .png or .ppm)");
}

void write_image(const RasterImage& image, const std::filesystem::path& path)
{
    if (image.empty())
        throw ValidationError("cannot write an empty image");
    const auto ext = lower_ext(path);
    if (ext == ".ppm")
        return write_ppm(image, path);
    if (ext == ".png")
        return write_png(image, path);
    throw ValidationError("unsupported image extension '" + ext + "' (expected .png or .ppm)");
}

} // namespace milwsi
