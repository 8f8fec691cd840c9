#include <milwsi/cv.hpp>

#include <milwsi/error.hpp>
#include <milwsi/rng.hpp>

#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace milwsi {

void TrainConfig::validate() const
{
    if (max_epochs < 1)
        throw ValidationError("max_epochs must be at least 1");
    if (patience < 1)
        throw ValidationError("patience must be at least 1");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ValidationError("classification threshold must lie in (0, 1)");
    if (hidden < 1 || attention < 1)
        throw ValidationError("hidden and attention sizes must be at least 1");
    if (!(adam.lr > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
        !(adam.eps > 0.0) || !(adam.weight_decay >= 0.0))
        throw ValidationError("invalid optimizer hyperparameters");
    if (instance_loss && (instance_k < 1 || instance_weight < 0.0))
        throw ValidationError("instance loss needs k >= 1 and a non-negative weight");
}

LossOptions TrainConfig::loss_options() const
{
    return {adam.weight_decay, instance_loss, instance_weight, instance_k};
}

void BagDataset::validate() const
{
    if (bags.size() != labels.size())
        throw ValidationError("dataset has " + std::to_string(bags.size()) + " bags but " +
                              std::to_string(labels.size()) + " labels");
    if (bags.empty())
        throw ValidationError("dataset is empty");
    const auto d = bags.front().dim();
    for (const auto& b : bags) {
        b.validate();
        if (b.dim() != d)
            throw ValidationError("bag '" + b.slide_id + "' has dimension " + std::to_string(b.dim()) +
                                  ", expected " + std::to_string(d));
    }
}

BagDataset load_dataset(const LabeledDataset& dataset, const std::filesystem::path& base_dir)
{
    BagDataset out;
    out.bags.reserve(dataset.items.size());
    for (const auto& item : dataset.items) {
        const auto path = item.bag_path.is_absolute() ? item.bag_path : base_dir / item.bag_path;
        auto bag = read_bag(path);
        if (bag.slide_id != item.slide_id)
            throw ValidationError("bag file '" + path.string() + "' holds slide '" + bag.slide_id +
                                  "' but the manifest names '" + item.slide_id + "'");
        out.bags.push_back(std::move(bag));
        out.labels.push_back(item.label);
    }
    out.validate();
    return out;
}

double mean_cross_entropy(const MilModel& model, const BagDataset& data, std::span<const std::size_t> indices)
{
    if (indices.empty())
        throw ValidationError("cannot average a loss over zero bags");
    double total = 0.0;
    for (auto i : indices) {
        const auto out = forward(model, data.bags[i]);
        total -= std::log(out.probs(data.labels[i]));
    }
    return total / static_cast<double>(indices.size());
}

FoldResult train_fold(const BagDataset& data, const SplitPlan& plan, int round, const TrainConfig& cfg)
{
    cfg.validate();
    if (round < 0 || round >= plan.k)
        throw ValidationError("round " + std::to_string(round) + " out of range for k=" + std::to_string(plan.k));
    if (plan.fold_of.size() != data.bags.size())
        throw ValidationError("split plan covers " + std::to_string(plan.fold_of.size()) + " items, dataset has " +
                              std::to_string(data.bags.size()));
    auto train = plan.train_indices(round);
    const auto val = plan.val_indices(round);
    if (train.empty() || val.empty() || plan.test_indices(round).empty())
        throw ValidationError("round " + std::to_string(round) + " has an empty train, validation or test partition");
    const auto d = data.dim();
    for (const auto& b : data.bags)
        if (b.dim() != d)
            throw ValidationError("bag '" + b.slide_id + "' dimension mismatch");

    const std::uint64_t round_seed = cfg.seed + static_cast<std::uint64_t>(round);
    Rng rng(round_seed);
    auto model = init_model(d, cfg.hidden, cfg.attention, round_seed);
    auto state = AdamState::for_model(model, cfg.adam);
    const auto opts = cfg.loss_options();

    FoldResult result;
    result.model = model;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(train));
        double train_loss = 0.0;
        for (auto i : train) {
            const auto step = loss_and_backward(model, data.bags[i], data.labels[i], opts);
            train_loss += step.loss;
            adam_step(model, step.grads, state);
        }
        train_loss /= static_cast<double>(train.size());
        const double val_loss = mean_cross_entropy(model, data, val);
        result.history.push_back({epoch, train_loss, val_loss});
        if (!std::isfinite(train_loss) || !model.all_finite())
            throw Error("training diverged in round " + std::to_string(round) + " at epoch " + std::to_string(epoch));

        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            result.model = model;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    return result;
}

namespace {

RoundReport evaluate_round(const BagDataset& data, const SplitPlan& plan, int round, FoldResult& fold,
                           const TrainConfig& cfg)
{
    RoundReport rep;
    rep.round = round;
    rep.test_fold = plan.rounds[static_cast<std::size_t>(round)].test_fold;
    rep.val_fold = plan.rounds[static_cast<std::size_t>(round)].val_fold;
    rep.history = fold.history;
    rep.best_epoch = fold.best_epoch;
    rep.best_val_loss = fold.best_val_loss;
    rep.test_indices = plan.test_indices(round);
    for (auto i : rep.test_indices) {
        rep.test_scores.push_back(forward(fold.model, data.bags[i]).positive_prob());
        rep.test_labels.push_back(data.labels[i]);
    }
    const auto pos = std::count(rep.test_labels.begin(), rep.test_labels.end(), 1);
    if (pos > 0 && pos < static_cast<std::ptrdiff_t>(rep.test_labels.size())) {
        rep.roc = roc_curve(rep.test_scores, rep.test_labels);
        rep.metrics = classification_metrics(confusion(rep.test_scores, rep.test_labels, cfg.threshold),
                                             auroc(*rep.roc), cfg.threshold);
    }
    return rep;
}

} // namespace

CVReport run_cross_validation(const BagDataset& data, int k, const TrainConfig& cfg, int threads)
{
    cfg.validate();
    data.validate();
    CVReport report;
    report.k = k;
    report.config = cfg;
    report.plan = build_split_plan(data.labels, k, cfg.seed);
    for (const auto& b : data.bags)
        report.slide_ids.push_back(b.slide_id);

    std::vector<FoldResult> folds(static_cast<std::size_t>(k));
    std::vector<RoundReport> rounds(static_cast<std::size_t>(k));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (int r = next++; r < k; r = next++) {
            try {
                folds[static_cast<std::size_t>(r)] = train_fold(data, report.plan, r, cfg);
                rounds[static_cast<std::size_t>(r)] =
                    evaluate_round(data, report.plan, r, folds[static_cast<std::size_t>(r)], cfg);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    const int workers = std::clamp(threads, 1, k);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < workers; ++t)
            pool.emplace_back(worker);
    }
    if (failure)
        std::rethrow_exception(failure);

    report.pooled_scores.assign(data.bags.size(), std::numeric_limits<double>::quiet_NaN());
    report.pooled_labels = data.labels;
    std::vector<int> scored(data.bags.size(), 0);
    for (const auto& rep : rounds)
        for (std::size_t j = 0; j < rep.test_indices.size(); ++j) {
            report.pooled_scores[rep.test_indices[j]] = rep.test_scores[j];
            ++scored[rep.test_indices[j]];
        }
    for (std::size_t i = 0; i < scored.size(); ++i)
        if (scored[i] != 1)
            throw Error("internal: slide " + std::to_string(i) + " scored " + std::to_string(scored[i]) + " times");

    report.pooled_roc = roc_curve(report.pooled_scores, report.pooled_labels);
    report.pooled_metrics =
        classification_metrics(confusion(report.pooled_scores, report.pooled_labels, cfg.threshold),
                               auroc(report.pooled_roc), cfg.threshold);
    report.rounds = std::move(rounds);
    for (auto& f : folds)
        report.models.push_back(std::move(f.model));
    return report;
}

nlohmann::json to_json(const TrainConfig& cfg)
{
    return {
        {"max_epochs", cfg.max_epochs},
        {"patience", cfg.patience},
        {"seed", cfg.seed},
        {"lr", cfg.adam.lr},
        {"beta1", cfg.adam.beta1},
        {"beta2", cfg.adam.beta2},
        {"eps", cfg.adam.eps},
        {"weight_decay", cfg.adam.weight_decay},
        {"hidden", cfg.hidden},
        {"attention", cfg.attention},
        {"instance_loss", cfg.instance_loss},
        {"instance_weight", cfg.instance_weight},
        {"instance_k", cfg.instance_k},
        {"threshold", cfg.threshold},
    };
}

nlohmann::json to_json(const MetricSet& m)
{
    return {
        {"auroc", m.auroc},
        {"f1", m.f1},
        {"precision", m.precision},
        {"recall", m.recall},
        {"specificity", m.specificity},
        {"threshold", m.threshold},
        {"undefined",
         {{"precision", m.precision_undefined},
          {"recall", m.recall_undefined},
          {"specificity", m.specificity_undefined},
          {"f1", m.f1_undefined}}},
    };
}

nlohmann::json to_json(const RocCurve& roc)
{
    auto fpr = nlohmann::json::array();
    auto tpr = nlohmann::json::array();
    auto thr = nlohmann::json::array();
    for (std::size_t i = 0; i < roc.points.size(); ++i) {
        fpr.push_back(roc.points[i].fpr);
        tpr.push_back(roc.points[i].tpr);
        // +inf has no JSON form; the first threshold is emitted as null.
        if (std::isfinite(roc.thresholds[i]))
            thr.push_back(roc.thresholds[i]);
        else
            thr.push_back(nullptr);
    }
    return {{"fpr", fpr}, {"tpr", tpr}, {"thresholds", thr}};
}

nlohmann::json to_json(const CVReport& report)
{
    nlohmann::json j;
    j["k"] = report.k;
    j["seed"] = report.config.seed;
    j["config"] = to_json(report.config);
    j["splits"] = to_json(report.plan);
    j["slide_ids"] = report.slide_ids;
    j["pooled"] = {
        {"scores", report.pooled_scores},
        {"labels", report.pooled_labels},
        {"metrics", to_json(report.pooled_metrics)},
        {"roc", to_json(report.pooled_roc)},
    };
    auto rounds = nlohmann::json::array();
    for (const auto& r : report.rounds) {
        auto history = nlohmann::json::array();
        for (const auto& e : r.history)
            history.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
        rounds.push_back({
            {"round", r.round},
            {"test_fold", r.test_fold},
            {"val_fold", r.val_fold},
            {"best_epoch", r.best_epoch},
            {"best_val_loss", r.best_val_loss},
            {"history", history},
            {"test_indices", r.test_indices},
            {"test_scores", r.test_scores},
            {"test_labels", r.test_labels},
            {"metrics", r.metrics ? to_json(*r.metrics) : nlohmann::json(nullptr)},
            {"roc", r.roc ? to_json(*r.roc) : nlohmann::json(nullptr)},
        });
    }
    j["rounds"] = std::move(rounds);
    return j;
}

} // namespace milwsi
