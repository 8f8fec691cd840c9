#pragma once

#include <milwsi/tiler.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace milwsi {

// One slide's patch features (N x D, one row per patch) and coordinates.
// Stored as float32 on disk, held as double in memory.
struct FeatureBag {
    std::string slide_id;
    std::int32_t patch_size = 0;
    std::vector<PatchCoord> coords;
    Eigen::MatrixXd features;

    Eigen::Index size() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }

    // Throws ValidationError if N or D is zero, coords and rows disagree,
    // or any feature is non-finite.
    void validate() const;
};

inline constexpr std::uint32_t kFbagVersion = 1;

// Exact on-disk length of an FBAG v1 file.
constexpr std::uint64_t fbag_file_size(std::uint64_t id_len, std::uint64_t n, std::uint64_t d)
{
    return 24 + id_len + 8 * n + 4 * n * d;
}

std::vector<std::uint8_t> encode_bag(const FeatureBag& bag);
FeatureBag decode_bag(const std::vector<std::uint8_t>& bytes);

void write_bag(const FeatureBag& bag, const std::filesystem::path& path);
FeatureBag read_bag(const std::filesystem::path& path);

} // namespace milwsi
