#pragma once

#include <milwsi/feature_bag.hpp>
#include <milwsi/image.hpp>
#include <milwsi/tiler.hpp>

#include <Eigen/Core>

#include <span>
#include <string>

namespace milwsi {

inline constexpr int kHandcraftedDim = 32;

using HandcraftedVector = Eigen::Matrix<double, kHandcraftedDim, 1>;

// Fixed 32-value patch descriptor:
//   [0, 24)  8-bin histograms of R, G, B (bin = value / 32), normalised by pixel count
//   [24, 30) mean/255 and population std/255 for R, G, B, interleaved (mean_r, std_r, ...)
//   [30, 32) mean and population std of the luma gradient magnitude / 255,
//            central differences with edge replication
HandcraftedVector extract_handcrafted(const RasterImage& patch);

// Tiles an image and extracts one handcrafted row per kept patch.
FeatureBag extract_bag(const RasterImage& image, std::string slide_id, std::span<const PatchCoord> coords);

} // namespace milwsi
