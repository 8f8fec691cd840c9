#include <milwsi/cli.hpp>

#include <milwsi/checkpoint.hpp>
#include <milwsi/cv.hpp>
#include <milwsi/error.hpp>
#include <milwsi/features.hpp>
#include <milwsi/heatmap.hpp>
#include <milwsi/manifest.hpp>
#include <milwsi/metrics.hpp>
#include <milwsi/splits.hpp>
#include <milwsi/synthetic.hpp>
#include <milwsi/tiler.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace milwsi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSeedEnv = "MILCLI_SEED";

struct TilingOptions {
    int patch_size = kDefaultPatchSize;
    int mask_scale = 16;
    double min_tissue_frac = kDefaultMinTissueFrac;
};

// Resolved `train`/`evaluate` configuration: JSON file, then MILCLI_SEED,
// then command-line flags.
struct RunConfig {
    fs::path manifest;
    fs::path output_dir = "milcli_out";
    TaskSpec task;
    int k = 10;
    int threads = 1;
    TrainConfig train;
    TilingOptions tiling;
};

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec)
            throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

template <typename T>
void take(const json& obj, const char* key, T& dst)
{
    if (!obj.contains(key))
        return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config key '") + key + "': " + e.what());
    }
}

fs::path resolve(const fs::path& base, const fs::path& p)
{
    return p.empty() || p.is_absolute() ? p : base / p;
}

TaskSpec parse_task(const json& j)
{
    TaskSpec t;
    take(j, "name", t.name);
    std::vector<std::string> pos, neg;
    take(j, "positive", pos);
    take(j, "negative", neg);
    take(j, "catch_all_negative", t.catch_all_negative);
    t.positive_labels = {pos.begin(), pos.end()};
    t.negative_labels = {neg.begin(), neg.end()};
    return t;
}

json task_json(const TaskSpec& t)
{
    return {{"name", t.name},
            {"positive", std::vector<std::string>(t.positive_labels.begin(), t.positive_labels.end())},
            {"negative", std::vector<std::string>(t.negative_labels.begin(), t.negative_labels.end())},
            {"catch_all_negative", t.catch_all_negative}};
}

RunConfig load_run_config(const fs::path& path)
{
    const auto j = read_json(path);
    if (!j.is_object())
        throw ValidationError("config '" + path.string() + "' must be a JSON object");
    const auto base = path.parent_path();
    RunConfig cfg;
    std::string manifest, out_dir;
    take(j, "manifest", manifest);
    take(j, "output_dir", out_dir);
    cfg.manifest = resolve(base, manifest);
    if (!out_dir.empty())
        cfg.output_dir = resolve(base, out_dir);
    if (j.contains("task"))
        cfg.task = parse_task(j.at("task"));
    take(j, "k", cfg.k);
    take(j, "threads", cfg.threads);
    take(j, "seed", cfg.train.seed);
    if (j.contains("train")) {
        const auto& t = j.at("train");
        take(t, "max_epochs", cfg.train.max_epochs);
        take(t, "patience", cfg.train.patience);
        take(t, "lr", cfg.train.adam.lr);
        take(t, "beta1", cfg.train.adam.beta1);
        take(t, "beta2", cfg.train.adam.beta2);
        take(t, "eps", cfg.train.adam.eps);
        take(t, "weight_decay", cfg.train.adam.weight_decay);
        take(t, "hidden", cfg.train.hidden);
        take(t, "attention", cfg.train.attention);
        take(t, "instance_loss", cfg.train.instance_loss);
        take(t, "instance_weight", cfg.train.instance_weight);
        take(t, "instance_k", cfg.train.instance_k);
        take(t, "threshold", cfg.train.threshold);
    }
    if (j.contains("tiling")) {
        const auto& t = j.at("tiling");
        take(t, "patch_size", cfg.tiling.patch_size);
        take(t, "mask_scale", cfg.tiling.mask_scale);
        take(t, "min_tissue_frac", cfg.tiling.min_tissue_frac);
    }
    return cfg;
}

std::optional<std::uint64_t> seed_from_env()
{
    const char* v = std::getenv(kSeedEnv);
    if (!v || !*v)
        return std::nullopt;
    try {
        std::size_t used = 0;
        const auto s = std::stoull(v, &used);
        if (used != std::string(v).size())
            throw std::invalid_argument(v);
        return s;
    } catch (const std::exception&) {
        throw ValidationError(std::string(kSeedEnv) + " must be an unsigned integer, got '" + v + "'");
    }
}

std::vector<PatchCoord> tile_image(const RasterImage& image, const TilingOptions& t)
{
    const int scale = std::clamp(t.mask_scale, 1, std::min(image.width(), image.height()));
    const auto mask = build_tissue_mask(image, scale);
    return tile_grid(image.width(), image.height(), t.patch_size, mask, t.min_tissue_frac);
}

void add_tiling_flags(CLI::App* cmd, TilingOptions& t)
{
    cmd->add_option("--patch-size", t.patch_size, "Square patch side in pixels")->capture_default_str();
    cmd->add_option("--mask-scale", t.mask_scale, "Image pixels per tissue-mask pixel")->capture_default_str();
    cmd->add_option("--min-tissue-frac", t.min_tissue_frac, "Minimum tissue fraction per kept patch")
        ->capture_default_str();
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Whole-slide MIL toolkit: tiling, features, cross-validated gated-attention training, heatmaps",
                 "milcli"};
    app.require_subcommand(1);

    // tile
    std::string tile_image_path, tile_out;
    TilingOptions tile_opts;
    auto* tile = app.add_subcommand("tile", "Detect tissue and list patch coordinates as x,y,patch_size lines");
    tile->add_option("--image", tile_image_path, "RGB raster (.png or .ppm)")->required();
    tile->add_option("--out", tile_out, "Output text file (default: stdout)");
    add_tiling_flags(tile, tile_opts);

    // extract
    std::string ex_image, ex_out, ex_id;
    TilingOptions ex_opts;
    auto* extract = app.add_subcommand("extract", "Tile an image and write handcrafted features as an FBAG file");
    extract->add_option("--image", ex_image, "RGB raster (.png or .ppm)")->required();
    extract->add_option("--out", ex_out, "Output .fbag path")->required();
    extract->add_option("--slide-id", ex_id, "Slide id (default: image file stem)");
    add_tiling_flags(extract, ex_opts);

    // splits
    std::string sp_labels, sp_out = "splits.json";
    std::optional<std::size_t> sp_n;
    int sp_k = 10;
    std::optional<std::uint64_t> sp_seed;
    auto* splits = app.add_subcommand("splits", "Build a stratified k-fold rotation plan");
    splits->add_option("--labels", sp_labels, "Text file with one 0/1 label per line");
    splits->add_option("--n", sp_n, "Number of items (checked against --labels; all-negative if no labels)");
    splits->add_option("--k", sp_k, "Fold count")->capture_default_str();
    splits->add_option("--seed", sp_seed, "Shuffle seed (default 42)");
    splits->add_option("--out", sp_out, "Output JSON path")->capture_default_str();

    // train
    std::string tr_config, tr_out_dir;
    std::optional<int> tr_k, tr_threads, tr_epochs, tr_patience;
    std::optional<std::uint64_t> tr_seed;
    std::optional<double> tr_lr;
    bool tr_instance = false;
    auto* train = app.add_subcommand("train", "Run k-fold cross-validated training");
    train->add_option("--config", tr_config, "Run configuration JSON")->required();
    train->add_option("--out-dir", tr_out_dir, "Output directory");
    train->add_option("--k", tr_k, "Fold count");
    train->add_option("--seed", tr_seed, "Seed");
    train->add_option("--threads", tr_threads, "Rounds trained in parallel");
    train->add_option("--max-epochs", tr_epochs, "Maximum epochs per round");
    train->add_option("--patience", tr_patience, "Early-stopping patience");
    train->add_option("--lr", tr_lr, "Adam learning rate");
    train->add_flag("--instance-loss", tr_instance, "Enable the instance-level auxiliary loss");

    // evaluate
    std::string ev_model, ev_config, ev_manifest, ev_out, ev_roc, ev_report;
    std::vector<std::string> ev_pos, ev_neg;
    bool ev_catch_all = false;
    double ev_threshold = 0.5;
    auto* evaluate = app.add_subcommand("evaluate", "Score a manifest with a checkpoint, or export ROC from a report");
    evaluate->add_option("--model", ev_model, "Checkpoint (.milm)");
    evaluate->add_option("--config", ev_config, "Run configuration JSON supplying manifest and task");
    evaluate->add_option("--manifest", ev_manifest, "Manifest CSV");
    evaluate->add_option("--positive", ev_pos, "Positive class labels");
    evaluate->add_option("--negative", ev_neg, "Negative class labels");
    evaluate->add_flag("--catch-all-negative", ev_catch_all, "Map labels outside --positive to the negative class");
    evaluate->add_option("--threshold", ev_threshold, "Decision threshold")->capture_default_str();
    evaluate->add_option("--report", ev_report, "Existing report.json to export pooled ROC from");
    evaluate->add_option("--out", ev_out, "Evaluation JSON path (default: stdout)");
    evaluate->add_option("--roc-out", ev_roc, "Two-column fpr/tpr text file");

    // heatmap
    std::string hm_model, hm_bag, hm_thumb, hm_out, hm_out_dir;
    HeatmapParams hm;
    auto* heatmap = app.add_subcommand("heatmap", "Render attention of a bag over a slide thumbnail");
    heatmap->add_option("--model", hm_model, "Checkpoint (.milm)")->required();
    heatmap->add_option("--bag", hm_bag, "Feature bag (.fbag)")->required();
    heatmap->add_option("--thumb", hm_thumb, "Thumbnail raster")->required();
    heatmap->add_option("--out", hm_out, "Output raster");
    heatmap->add_option("--out-dir", hm_out_dir, "Write <out-dir>/heatmaps/<slide_id>.png instead of --out");
    heatmap->add_option("--scale", hm.thumbnail_scale, "Full-resolution pixels per thumbnail pixel")
        ->capture_default_str();
    heatmap->add_option("--clip-lo", hm.clip_lo, "Lower clip percentile")->capture_default_str();
    heatmap->add_option("--clip-hi", hm.clip_hi, "Upper clip percentile")->capture_default_str();
    heatmap->add_option("--max-alpha", hm.max_alpha, "Overlay opacity at attention 1")->capture_default_str();

    // synth
    std::string sy_out_dir;
    SyntheticParams sy;
    auto* synth = app.add_subcommand("synth", "Write the synthetic witness benchmark (bags, manifest.csv, run.json)");
    synth->add_option("--out-dir", sy_out_dir, "Output directory")->required();
    synth->add_option("--bags", sy.bags)->capture_default_str();
    synth->add_option("--instances", sy.instances)->capture_default_str();
    synth->add_option("--dim", sy.dim)->capture_default_str();
    synth->add_option("--witness-frac", sy.witness_frac)->capture_default_str();
    synth->add_option("--witness-shift", sy.witness_shift)->capture_default_str();
    synth->add_option("--seed", sy.seed)->capture_default_str();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }

    try {
        if (*tile) {
            const auto image = read_image(tile_image_path);
            std::ostringstream text;
            for (const auto& c : tile_image(image, tile_opts))
                text << c.x << ',' << c.y << ',' << c.patch_size << '\n';
            if (tile_out.empty())
                out << text.str();
            else
                write_text(tile_out, text.str());
            return 0;
        }

        if (*extract) {
            const auto image = read_image(ex_image);
            const auto coords = tile_image(image, ex_opts);
            const auto id = ex_id.empty() ? fs::path(ex_image).stem().string() : ex_id;
            const auto bag = extract_bag(image, id, coords);
            write_bag(bag, ex_out);
            out << id << ": " << bag.size() << " patches, D=" << bag.dim() << " -> " << ex_out << '\n';
            return 0;
        }

        if (*splits) {
            std::vector<int> labels;
            if (!sp_labels.empty()) {
                std::ifstream in(sp_labels);
                if (!in)
                    throw IoError("cannot open labels '" + sp_labels + "'");
                std::string line;
                while (std::getline(in, line)) {
                    if (!line.empty() && line.back() == '\r')
                        line.pop_back();
                    if (line.empty())
                        continue;
                    if (line != "0" && line != "1")
                        throw ValidationError("labels file: expected 0 or 1, got '" + line + "'");
                    labels.push_back(line == "1" ? 1 : 0);
                }
                if (sp_n && *sp_n != labels.size())
                    throw ValidationError("--n " + std::to_string(*sp_n) + " does not match " +
                                          std::to_string(labels.size()) + " labels");
            } else if (sp_n) {
                labels.assign(*sp_n, 0);
            } else {
                throw ValidationError("splits needs --labels or --n");
            }
            auto seed = seed_from_env().value_or(42);
            if (sp_seed)
                seed = *sp_seed;
            const auto plan = build_split_plan(labels, sp_k, seed);
            if (plan.stratification_degraded)
                err << "warning: a class has fewer than k members; stratification is approximate\n";
            auto j = to_json(plan);
            j["seed"] = seed;
            write_text(sp_out, dump(j));
            out << "wrote " << sp_out << " (" << labels.size() << " items, k=" << sp_k << ")\n";
            return 0;
        }

        if (*train) {
            auto cfg = load_run_config(tr_config);
            if (auto s = seed_from_env())
                cfg.train.seed = *s;
            if (tr_seed)
                cfg.train.seed = *tr_seed;
            if (!tr_out_dir.empty())
                cfg.output_dir = tr_out_dir;
            if (tr_k)
                cfg.k = *tr_k;
            if (tr_threads)
                cfg.threads = *tr_threads;
            if (tr_epochs)
                cfg.train.max_epochs = *tr_epochs;
            if (tr_patience)
                cfg.train.patience = *tr_patience;
            if (tr_lr)
                cfg.train.adam.lr = *tr_lr;
            if (tr_instance)
                cfg.train.instance_loss = true;
            if (cfg.manifest.empty())
                throw ValidationError("config has no 'manifest'");
            if (cfg.k < 3)
                throw ValidationError("k must be at least 3");

            const auto manifest = parse_manifest(cfg.manifest);
            const auto labeled = resolve_task(manifest, cfg.task);
            const auto data = load_dataset(labeled, cfg.manifest.parent_path());
            const auto report = run_cross_validation(data, cfg.k, cfg.train, cfg.threads);

            std::error_code ec;
            fs::create_directories(cfg.output_dir, ec);
            if (ec)
                throw IoError("cannot create '" + cfg.output_dir.string() + "': " + ec.message());
            auto splits_json = to_json(report.plan);
            splits_json["seed"] = cfg.train.seed;
            write_text(cfg.output_dir / "splits.json", dump(splits_json));
            for (std::size_t r = 0; r < report.models.size(); ++r)
                write_model(report.models[r], cfg.output_dir / ("round_" + std::to_string(r) + ".milm"));
            auto report_json = to_json(report);
            report_json["task"] = task_json(cfg.task);
            write_text(cfg.output_dir / "report.json", dump(report_json));

            const auto& m = report.pooled_metrics;
            out << "task " << cfg.task.name << ": " << data.bags.size() << " slides, k=" << cfg.k << "\n"
                << "pooled AUROC " << m.auroc << "  F1 " << m.f1 << "  precision " << m.precision << "  recall "
                << m.recall << "  specificity " << m.specificity << "\n"
                << "wrote " << (cfg.output_dir / "report.json").string() << '\n';
            return 0;
        }

        if (*evaluate) {
            if (!ev_report.empty()) {
                const auto j = read_json(ev_report);
                std::vector<double> scores;
                std::vector<int> labels;
                try {
                    scores = j.at("pooled").at("scores").get<std::vector<double>>();
                    labels = j.at("pooled").at("labels").get<std::vector<int>>();
                } catch (const json::exception& e) {
                    throw FormatError("'" + ev_report + "' is not a CV report: " + e.what());
                }
                const auto roc = roc_curve(scores, labels);
                const auto metrics = evaluate_scores(scores, labels, ev_threshold);
                if (!ev_roc.empty())
                    write_roc_text(roc, ev_roc);
                const auto result = dump(json{{"metrics", to_json(metrics)}, {"roc", to_json(roc)}});
                if (ev_out.empty())
                    out << result;
                else
                    write_text(ev_out, result);
                return 0;
            }

            if (ev_model.empty())
                throw ValidationError("evaluate needs --model (or --report)");
            fs::path manifest_path = ev_manifest;
            TaskSpec task;
            if (!ev_config.empty()) {
                const auto cfg = load_run_config(ev_config);
                manifest_path = cfg.manifest;
                task = cfg.task;
            }
            if (!ev_manifest.empty())
                manifest_path = ev_manifest;
            if (!ev_pos.empty()) {
                task.name = "cli";
                task.positive_labels = {ev_pos.begin(), ev_pos.end()};
                task.negative_labels = {ev_neg.begin(), ev_neg.end()};
                task.catch_all_negative = ev_catch_all;
            }
            if (manifest_path.empty())
                throw ValidationError("evaluate needs --manifest or --config");

            const auto model = read_model(ev_model);
            const auto labeled = resolve_task(parse_manifest(manifest_path), task);
            const auto data = load_dataset(labeled, manifest_path.parent_path());
            if (data.dim() != model.dims.input)
                throw ValidationError("bag dimension " + std::to_string(data.dim()) +
                                      " does not match model input dimension " + std::to_string(model.dims.input));
            std::vector<double> scores;
            for (const auto& b : data.bags)
                scores.push_back(forward(model, b).positive_prob());
            const auto roc = roc_curve(scores, data.labels);
            const auto metrics =
                classification_metrics(confusion(scores, data.labels, ev_threshold), auroc(roc), ev_threshold);
            if (!ev_roc.empty())
                write_roc_text(roc, ev_roc);
            std::vector<std::string> ids;
            for (const auto& b : data.bags)
                ids.push_back(b.slide_id);
            const auto result = dump(json{{"slide_ids", ids},
                                          {"scores", scores},
                                          {"labels", data.labels},
                                          {"metrics", to_json(metrics)},
                                          {"roc", to_json(roc)}});
            if (ev_out.empty())
                out << result;
            else
                write_text(ev_out, result);
            return 0;
        }

        if (*heatmap) {
            if (hm_out.empty() == hm_out_dir.empty())
                throw ValidationError("heatmap needs exactly one of --out or --out-dir");
            const auto model = read_model(hm_model);
            const auto bag = read_bag(hm_bag);
            const auto thumb = read_image(hm_thumb);
            const auto output = forward(model, bag);
            const std::vector<double> attention(output.attention.data(),
                                                output.attention.data() + output.attention.size());
            const auto values = normalize_attention(attention, hm);
            const auto rendered = render_heatmap(thumb, bag.coords, values, hm);
            fs::path target = hm_out;
            if (!hm_out_dir.empty()) {
                target = fs::path(hm_out_dir) / "heatmaps" / (bag.slide_id + ".png");
                std::error_code ec;
                fs::create_directories(target.parent_path(), ec);
                if (ec)
                    throw IoError("cannot create '" + target.parent_path().string() + "': " + ec.message());
            }
            write_image(rendered, target);
            out << bag.slide_id << ": p(positive)=" << output.positive_prob() << " -> " << target.string() << '\n';
            return 0;
        }

        if (*synth) {
            const auto data = make_synthetic(sy);
            const fs::path dir = sy_out_dir;
            write_synthetic(data, dir);
            const json run = {
                {"manifest", "manifest.csv"},
                {"output_dir", "out"},
                {"task", {{"name", "synthetic"}, {"positive", {"positive"}}, {"negative", {"negative"}}}},
                {"k", 10},
                {"seed", 42},
                {"threads", 1},
            };
            write_text(dir / "run.json", dump(run));
            out << "wrote " << data.bags.size() << " bags to " << dir.string() << '\n';
            return 0;
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

int run_cli(int argc, const char* const* argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace milwsi
