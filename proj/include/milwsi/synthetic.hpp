#pragma once

#include <milwsi/feature_bag.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace milwsi {

// Witness-style MIL benchmark. Background instances are i.i.d. standard
// normal per dimension; a positive bag has round(witness_frac * instances)
// (at least one) rows replaced by normals shifted by +witness_shift in every
// dimension. Bags alternate positive/negative starting with positive.
struct SyntheticParams {
    int bags = 200;
    int instances = 64;
    int dim = 32;
    double witness_frac = 0.05;
    double witness_shift = 1.0;
    std::uint64_t seed = 42;
};

struct SyntheticDataset {
    std::vector<FeatureBag> bags;
    std::vector<int> labels;
};

SyntheticDataset make_synthetic(const SyntheticParams& params);

// Writes bags/<id>.fbag and manifest.csv (labels "positive"/"negative")
// under dir. Returns the manifest path.
std::filesystem::path write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir);

} // namespace milwsi
