#include <milwsi/error.hpp>
#include <milwsi/heatmap.hpp>
#include <milwsi/rng.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace milwsi;

TEST_CASE("uniform attention normalises to 0.5")
{
    const std::vector<double> att(4, 0.25);
    CHECK(normalize_attention(att, HeatmapParams{}) == std::vector<double>(4, 0.5));
}

TEST_CASE("min-max endpoints without clipping")
{
    HeatmapParams p;
    p.clip_lo = 0;
    p.clip_hi = 100;
    CHECK(normalize_attention(std::vector<double>{0.9, 0.1}, p) == std::vector<double>{1.0, 0.0});
}

TEST_CASE("percentile clipping against a sort-based oracle")
{
    Rng rng(31);
    std::vector<double> att(100);
    for (auto& a : att)
        a = 0.001 + 0.01 * rng.uniform();
    att[37] = 0.5; // outlier
    const auto out = normalize_attention(att, HeatmapParams{});

    auto sorted = att;
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted[0];  // ceil(0.01 * 100) = 1st value
    const double hi = sorted[98]; // ceil(0.99 * 100) = 99th value
    CHECK(nearest_rank_percentile(att, 1.0) == lo);
    CHECK(nearest_rank_percentile(att, 99.0) == hi);
    CHECK(out[37] == 1.0);
    for (std::size_t i = 0; i < att.size(); ++i) {
        const double expected = (std::clamp(att[i], lo, hi) - lo) / (hi - lo);
        CHECK(std::abs(out[i] - expected) <= 1e-15);
    }
    CHECK(nearest_rank_percentile(att, 0.0) == lo);
    CHECK(nearest_rank_percentile(att, 100.0) == sorted[99]);
}

TEST_CASE("blend formula")
{
    CHECK(blend_red({255, 255, 255}, 1.0) == Rgb{255, 0, 0});
    CHECK(blend_red({255, 255, 255}, 0.0) == Rgb{255, 255, 255});
    // alpha = 0.5 * 0.6 = 0.3: 0.7 * 255 = 178.5 -> 179
    CHECK(blend_red({255, 255, 255}, 0.5 * 0.6) == Rgb{255, 179, 179});
    // 0.7 * 100 + 0.3 * 255 = 146.5 -> 147; 0.7 * 10 = 7
    CHECK(blend_red({100, 10, 0}, 0.3) == Rgb{147, 7, 0});
}

TEST_CASE("render_heatmap with no patches is a no-op")
{
    RasterImage thumb(20, 10, Rgb{12, 34, 56});
    thumb.set(3, 4, {1, 2, 3});
    CHECK(render_heatmap(thumb, {}, {}, HeatmapParams{}) == thumb);
}

TEST_CASE("render_heatmap paints exactly the patch rectangle")
{
    const RasterImage thumb(64, 64, Rgb{255, 255, 255});
    HeatmapParams p;
    p.max_alpha = 1.0;
    p.thumbnail_scale = 8;
    const std::vector<PatchCoord> coords{{256, 128, 256}};
    const auto out = render_heatmap(thumb, coords, std::vector<double>{1.0}, p);
    CHECK(out.width() == 64);
    CHECK(out.height() == 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const bool inside = x >= 32 && x < 64 && y >= 16 && y < 48;
            CHECK(out.at(x, y) == (inside ? Rgb{255, 0, 0} : Rgb{255, 255, 255}));
        }

    p.max_alpha = 0.6;
    const auto half = render_heatmap(thumb, coords, std::vector<double>{0.5}, p);
    CHECK(half.at(40, 20) == Rgb{255, 179, 179});
}

TEST_CASE("render_heatmap laws on random layouts")
{
    Rng rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const int scale = 1 + static_cast<int>(rng.below(5));
        const int patch = 8 + static_cast<int>(rng.below(24));
        const int cols = 2 + static_cast<int>(rng.below(5));
        const int rows = 2 + static_cast<int>(rng.below(5));
        const int tw = (cols * patch + scale - 1) / scale + static_cast<int>(rng.below(4));
        const int th = (rows * patch + scale - 1) / scale + static_cast<int>(rng.below(4));
        std::vector<std::uint8_t> px(static_cast<std::size_t>(tw * th * 3));
        for (auto& v : px)
            v = static_cast<std::uint8_t>(rng.below(256));
        const RasterImage thumb(tw, th, px);
        const RasterImage white(tw, th, Rgb{255, 255, 255});

        std::vector<PatchCoord> coords;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                if (rng.below(3) != 0)
                    coords.push_back({c * patch, r * patch, patch});
        HeatmapParams p;
        p.thumbnail_scale = scale;
        const std::vector<double> uniform(coords.size(), 0.5);
        const auto out = render_heatmap(thumb, coords, uniform, p);
        CHECK(out.width() == tw);
        CHECK(out.height() == th);

        std::vector<std::uint8_t> covered(static_cast<std::size_t>(tw * th), 0);
        for (const auto& c : coords)
            for (int y = c.y / scale; y < (c.y + patch) / scale; ++y)
                for (int x = c.x / scale; x < (c.x + patch) / scale; ++x)
                    covered[static_cast<std::size_t>(y * tw + x)] = 1;
        bool outside_same = true;
        for (int y = 0; y < th; ++y)
            for (int x = 0; x < tw; ++x)
                if (!covered[static_cast<std::size_t>(y * tw + x)])
                    outside_same = outside_same && out.at(x, y) == thumb.at(x, y);
        CHECK(outside_same);

        // uniform values on a flat thumbnail give one overlay colour
        const auto flat = render_heatmap(white, coords, uniform, p);
        bool uniform_overlay = true;
        for (int y = 0; y < th; ++y)
            for (int x = 0; x < tw; ++x)
                if (covered[static_cast<std::size_t>(y * tw + x)])
                    uniform_overlay = uniform_overlay && flat.at(x, y) == blend_red({255, 255, 255}, 0.5 * p.max_alpha);
        CHECK(uniform_overlay);

        // higher value never raises green or blue
        for (double v = 0.0; v < 1.0; v += 0.05) {
            const auto a = blend_red(thumb.at(0, 0), v * p.max_alpha);
            const auto b = blend_red(thumb.at(0, 0), (v + 0.05) * p.max_alpha);
            CHECK(b.g <= a.g);
            CHECK(b.b <= a.b);
        }
    }
}

TEST_CASE("render_heatmap rejects out-of-range patches and bad params")
{
    const RasterImage thumb(10, 10);
    HeatmapParams p;
    p.thumbnail_scale = 2;
    CHECK_THROWS_AS(render_heatmap(thumb, std::vector<PatchCoord>{{16, 0, 8}}, std::vector<double>{1.0}, p),
                    ValidationError);
    CHECK_THROWS_AS(render_heatmap(thumb, std::vector<PatchCoord>{{0, 0, 8}}, std::vector<double>{}, p),
                    ValidationError);
    HeatmapParams bad;
    bad.clip_lo = 50;
    bad.clip_hi = 40;
    CHECK_THROWS_AS(normalize_attention(std::vector<double>{1.0}, bad), ValidationError);
}
