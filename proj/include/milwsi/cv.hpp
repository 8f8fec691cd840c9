#pragma once

#include <milwsi/adam.hpp>
#include <milwsi/feature_bag.hpp>
#include <milwsi/manifest.hpp>
#include <milwsi/metrics.hpp>
#include <milwsi/mil_model.hpp>
#include <milwsi/mil_net.hpp>
#include <milwsi/splits.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace milwsi {

struct TrainConfig {
    int max_epochs = 6;
    int patience = 2;
    std::uint64_t seed = 42;
    AdamConfig adam;
    Eigen::Index hidden = 512;
    Eigen::Index attention = 256;
    bool instance_loss = false;
    double instance_weight = 0.3;
    int instance_k = 8;
    double threshold = 0.5;

    void validate() const;
    LossOptions loss_options() const;
};

// Bags held in memory with their binary labels, all sharing one D.
struct BagDataset {
    std::vector<FeatureBag> bags;
    std::vector<int> labels;

    Eigen::Index dim() const { return bags.empty() ? 0 : bags.front().dim(); }
    void validate() const;
};

// Loads every bag of a labelled dataset. Relative bag paths are resolved
// against base_dir.
BagDataset load_dataset(const LabeledDataset& dataset, const std::filesystem::path& base_dir);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0; // mean training objective over the epoch's steps
    double val_loss = 0.0;   // mean validation cross-entropy after the epoch
};

struct FoldResult {
    MilModel model; // parameters from the best validation epoch
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

// Mean bag cross-entropy of model over the given items.
double mean_cross_entropy(const MilModel& model, const BagDataset& data, std::span<const std::size_t> indices);

// Trains one round: seeded per-epoch shuffle of the training bags, one Adam
// step per bag, validation loss after each epoch, early stopping after
// `patience` epochs without improvement. Model init and shuffling both use
// seed + round.
FoldResult train_fold(const BagDataset& data, const SplitPlan& plan, int round, const TrainConfig& cfg);

struct RoundReport {
    int round = 0;
    int test_fold = 0;
    int val_fold = 0;
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_val_loss = 0.0;
    std::vector<std::size_t> test_indices;
    std::vector<double> test_scores;
    std::vector<int> test_labels;
    std::optional<MetricSet> metrics; // absent when the test fold holds one class
    std::optional<RocCurve> roc;
};

struct CVReport {
    int k = 0;
    TrainConfig config;
    SplitPlan plan;
    std::vector<std::string> slide_ids;
    std::vector<RoundReport> rounds;
    std::vector<double> pooled_scores; // indexed like the dataset
    std::vector<int> pooled_labels;
    MetricSet pooled_metrics;
    RocCurve pooled_roc;
    std::vector<MilModel> models; // best model per round; not serialised
};

// threads caps the number of rounds trained concurrently; results do not
// depend on it.
CVReport run_cross_validation(const BagDataset& data, int k, const TrainConfig& cfg, int threads = 1);

nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const MetricSet& m);
nlohmann::json to_json(const RocCurve& roc);
nlohmann::json to_json(const CVReport& report);

} // namespace milwsi
