#include <milwsi/splits.hpp>

#include <milwsi/error.hpp>
#include <milwsi/rng.hpp>

#include <algorithm>
#include <string>

namespace milwsi {

std::vector<std::size_t> SplitPlan::fold_indices(int fold) const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] == fold)
            out.push_back(i);
    return out;
}

std::vector<std::size_t> SplitPlan::test_indices(int round) const
{
    return fold_indices(rounds.at(static_cast<std::size_t>(round)).test_fold);
}

std::vector<std::size_t> SplitPlan::val_indices(int round) const
{
    return fold_indices(rounds.at(static_cast<std::size_t>(round)).val_fold);
}

std::vector<std::size_t> SplitPlan::train_indices(int round) const
{
    const auto& r = rounds.at(static_cast<std::size_t>(round));
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] != r.test_fold && fold_of[i] != r.val_fold)
            out.push_back(i);
    return out;
}

namespace {

// Dealing round-robin leaves slots 0..n%k-1 one item larger. Place whichever
// size class is rarer at evenly spaced fold ids so no two of them are
// neighbours in the test/val rotation; train sizes then take at most two
// values.
std::vector<int> spread_slots(std::size_t n, int k)
{
    const int large = static_cast<int>(n % static_cast<std::size_t>(k));
    std::vector<int> fold_of_slot(static_cast<std::size_t>(k));
    const int m = std::min(large, k - large);
    if (m == 0) {
        for (int s = 0; s < k; ++s)
            fold_of_slot[static_cast<std::size_t>(s)] = s;
        return fold_of_slot;
    }
    std::vector<char> spaced(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < m; ++i)
        spaced[static_cast<std::size_t>(i * k / m)] = 1;
    const bool large_is_rare = large <= k - large;
    std::vector<int> rare_ids, common_ids;
    for (int f = 0; f < k; ++f)
        (spaced[static_cast<std::size_t>(f)] ? rare_ids : common_ids).push_back(f);
    const auto& large_ids = large_is_rare ? rare_ids : common_ids;
    const auto& small_ids = large_is_rare ? common_ids : rare_ids;
    for (int s = 0; s < k; ++s)
        fold_of_slot[static_cast<std::size_t>(s)] =
            s < large ? large_ids[static_cast<std::size_t>(s)] : small_ids[static_cast<std::size_t>(s - large)];
    return fold_of_slot;
}

} // namespace

SplitPlan build_split_plan(std::span<const int> labels, int k, std::uint64_t seed)
{
    if (k < 3)
        throw ValidationError("split plan needs k >= 3, got " + std::to_string(k));
    if (labels.size() < static_cast<std::size_t>(k))
        throw ValidationError("split plan needs at least k=" + std::to_string(k) + " items, got " +
                              std::to_string(labels.size()));

    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw ValidationError("labels must be 0 or 1");
        by_class[labels[i]].push_back(i);
    }

    SplitPlan plan;
    plan.k = k;
    plan.fold_of.assign(labels.size(), -1);
    const auto fold_of_slot = spread_slots(labels.size(), k);
    Rng rng(seed);
    std::size_t deal = 0;
    for (auto& members : by_class) {
        if (!members.empty() && members.size() < static_cast<std::size_t>(k))
            plan.stratification_degraded = true;
        rng.shuffle(std::span<std::size_t>(members));
        for (auto idx : members)
            plan.fold_of[idx] = fold_of_slot[deal++ % static_cast<std::size_t>(k)];
    }

    for (int r = 0; r < k; ++r) {
        SplitRound round{r, (r + 1) % k, {}};
        for (int f = 0; f < k; ++f)
            if (f != round.test_fold && f != round.val_fold)
                round.train_folds.push_back(f);
        plan.rounds.push_back(std::move(round));
    }
    return plan;
}

nlohmann::json to_json(const SplitPlan& plan)
{
    nlohmann::json j;
    j["k"] = plan.k;
    j["fold_of"] = plan.fold_of;
    j["stratification_degraded"] = plan.stratification_degraded;
    auto rounds = nlohmann::json::array();
    for (const auto& r : plan.rounds)
        rounds.push_back({{"test_fold", r.test_fold}, {"val_fold", r.val_fold}, {"train_folds", r.train_folds}});
    j["rounds"] = std::move(rounds);
    return j;
}

} // namespace milwsi
