#pragma once

#include <milwsi/mil_model.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace milwsi {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// MILM v1, little-endian: "MILM", u32 version, u64 seed, u32 D, H, A, then
// the ten persisted tensors in fixed order, each as u32 rows, u32 cols and
// rows*cols float64 values row-major. The instance head is not stored and
// reads back as zeros.
std::vector<std::uint8_t> encode_model(const MilModel& model);
MilModel decode_model(const std::vector<std::uint8_t>& bytes);

void write_model(const MilModel& model, const std::filesystem::path& path);
MilModel read_model(const std::filesystem::path& path);

} // namespace milwsi
