#pragma once

#include <json.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace milwsi {

struct SplitRound {
    int test_fold = 0;
    int val_fold = 0;
    std::vector<int> train_folds;
};

// k-round rotation over k folds: round r tests fold r, validates on fold
// (r+1) mod k and trains on the other k-2 folds, so every item is tested
// once and validated once.
struct SplitPlan {
    int k = 0;
    std::vector<int> fold_of;
    std::vector<SplitRound> rounds;
    // Some class had fewer than k members; its folds cannot all be populated.
    bool stratification_degraded = false;

    std::vector<std::size_t> fold_indices(int fold) const;
    std::vector<std::size_t> test_indices(int round) const;
    std::vector<std::size_t> val_indices(int round) const;
    std::vector<std::size_t> train_indices(int round) const;
};

// Each class is shuffled with a seeded PRNG (class 0 first, then class 1)
// and dealt round-robin into k folds, the deal continuing across classes so
// total fold sizes also differ by at most one. The larger folds are spread
// around the rotation so per-round train sizes take at most two values.
SplitPlan build_split_plan(std::span<const int> labels, int k, std::uint64_t seed);

nlohmann::json to_json(const SplitPlan& plan);

} // namespace milwsi
