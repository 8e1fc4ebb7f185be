// Command-line surface for the seed-refinement pipeline. Exit codes: 0 on
// success, 1 on validation errors, 2 on I/O errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seedrefine/edgepredict.hpp"
#include "seedrefine/eval.hpp"
#include "seedrefine/grid_ops.hpp"
#include "seedrefine/io.hpp"
#include "seedrefine/mixer.hpp"
#include "seedrefine/pamr.hpp"
#include "seedrefine/rng.hpp"
#include "seedrefine/scg.hpp"
#include "seedrefine/seedloop.hpp"
#include "seedrefine/synthetic.hpp"
#include "seedrefine/types.hpp"

namespace fs = std::filesystem;
using namespace seedrefine;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<float> fg, bg, low, high;
    std::optional<int> iters;
    std::optional<uint64_t> seed;
};

PipelineConfig resolve_config(const CommonOpts& opts) {
    PipelineConfig cfg;
    if (!opts.config_path.empty()) cfg = load_config_file(opts.config_path, cfg);
    if (opts.fg) cfg.delta_fg = *opts.fg;
    if (opts.bg) cfg.delta_bg = *opts.bg;
    if (opts.low) cfg.canny_low = *opts.low;
    if (opts.high) cfg.canny_high = *opts.high;
    if (opts.iters) cfg.pamr_iterations = *opts.iters;
    if (opts.seed) cfg.rng_seed = *opts.seed;
    cfg.check();
    return cfg;
}

ScoreMap load_scoremap(const std::string& path, bool probabilistic) {
    ScoreMap map = tensor_to_scoremap(read_tensor(path));
    map.probabilistic = probabilistic;
    const ValidationReport report = validate(map);
    if (!report.ok) throw std::invalid_argument(path + ": " + report.message);
    return map;
}

FeatureStack load_stack(const std::vector<std::string>& paths) {
    FeatureStack stack;
    for (const auto& path : paths) {
        FeatureStack part = tensor_to_stack(read_tensor(path));
        for (auto& layer : part.layers) stack.layers.push_back(std::move(layer));
    }
    const ValidationReport report = validate(stack);
    if (!report.ok)
        throw std::invalid_argument("features: " + report.message);
    return stack;
}

RgbImage load_image(const std::string& path) {
    RgbImage image = read_image_png(path);
    const ValidationReport report = validate(image);
    if (!report.ok) throw std::invalid_argument(path + ": " + report.message);
    return image;
}

// Files named <prefix><suffix> in a directory, sorted by prefix.
std::vector<std::pair<std::string, fs::path>> list_with_suffix(const fs::path& dir,
                                                               const std::string& suffix) {
    if (!fs::is_directory(dir))
        throw IoError(IoCode::open_failed, dir.string() + " is not a directory");
    std::vector<std::pair<std::string, fs::path>> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() > suffix.size() &&
            name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
            out.emplace_back(name.substr(0, name.size() - suffix.size()), entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<TrainItem> load_dataset(const fs::path& dir, int& num_classes) {
    const auto images = list_with_suffix(dir, "_image.png");
    if (images.empty())
        throw IoError(IoCode::open_failed, dir.string() + ": no *_image.png files found");
    std::vector<TrainItem> items;
    std::vector<LabelMask> truths;
    int max_label = 0;
    for (const auto& [prefix, image_path] : images) {
        const fs::path features_path = dir / (prefix + "_features.sft");
        const fs::path truth_path = dir / (prefix + "_truth.png");
        TrainItem item;
        item.image = load_image(image_path.string());
        item.features = tensor_to_stack(read_tensor(features_path));
        item.truth = read_mask_png(truth_path);
        for (int32_t v : item.truth.labels) max_label = std::max(max_label, v);
        items.push_back(std::move(item));
    }
    num_classes = max_label;
    if (num_classes < 1)
        throw std::invalid_argument(dir.string() + ": truth masks contain no foreground class");
    for (auto& item : items) {
        item.labels.assign(num_classes, 0);
        for (int32_t v : item.truth.labels)
            if (v > 0) item.labels[v - 1] = 1;
    }
    return items;
}

int run_scg(const std::string& cam_path, const std::vector<std::string>& feature_paths,
            const std::string& out_path, const PipelineConfig& cfg) {
    const ScoreMap cam = load_scoremap(cam_path, false);
    const FeatureStack stack = load_stack(feature_paths);
    write_tensor(tensor_from_scoremap(scg_refine(cam, stack, cfg)), out_path);
    return 0;
}

int run_pamr(const std::string& map_path, const std::string& image_path,
             const std::string& out_path, const PipelineConfig& cfg) {
    const ScoreMap map = load_scoremap(map_path, false);
    const RgbImage image = load_image(image_path);
    if (image.height != map.height || image.width != map.width)
        throw std::invalid_argument(image_path + ": shape does not match " + map_path);
    write_tensor(tensor_from_scoremap(pamr_refine(map, image, positive_window(map), cfg)),
                 out_path);
    return 0;
}

int run_refine(const std::string& cam_path, const std::vector<std::string>& feature_paths,
               const std::string& image_path, const std::string& out_path,
               const PipelineConfig& cfg) {
    const ScoreMap cam = load_scoremap(cam_path, false);
    const FeatureStack stack = load_stack(feature_paths);
    const RgbImage image = load_image(image_path);
    if (image.height != cam.height || image.width != cam.width)
        throw std::invalid_argument(image_path + ": shape does not match " + cam_path);
    write_tensor(tensor_from_scoremap(recurseed_step(cam, stack, image, cfg)), out_path);
    return 0;
}

int run_cf(const std::string& map_path, const std::string& out_path, const PipelineConfig& cfg) {
    const ScoreMap rs = load_scoremap(map_path, true);
    write_mask_png(certain_filter(rs, cfg), out_path);
    return 0;
}

int run_ep(const std::string& dec_path, const std::string& out_path, const PipelineConfig& cfg) {
    const ScoreMap dec = load_scoremap(dec_path, true);
    write_tensor(tensor_from_scoremap(ep_refine(dec, cfg)), out_path);
    return 0;
}

int run_mix(const std::string& batch_dir, const std::string& out_dir, const PipelineConfig& cfg) {
    const auto images = list_with_suffix(batch_dir, "_image.png");
    if (images.size() < 2)
        throw std::invalid_argument(batch_dir + ": mixing needs at least 2 *_image.png items");
    std::vector<MixItem> batch;
    std::vector<std::string> prefixes;
    for (const auto& [prefix, image_path] : images) {
        MixItem item;
        item.image = load_image(image_path.string());
        item.ep = load_scoremap((fs::path(batch_dir) / (prefix + "_ep.sft")).string(), true);
        item.rs = load_scoremap((fs::path(batch_dir) / (prefix + "_rs.sft")).string(), true);
        if (item.ep.height != item.image.height || item.ep.width != item.image.width ||
            item.rs.height != item.image.height || item.rs.width != item.image.width)
            throw std::invalid_argument(prefix + ": image and map shapes do not match");
        batch.push_back(std::move(item));
        prefixes.push_back(prefix);
    }
    const std::vector<MixedSample> mixed = mix_batch(batch, cfg.rng_seed, cfg);
    fs::create_directories(out_dir);
    std::string pairs;
    for (size_t i = 0; i < mixed.size(); ++i) {
        const fs::path base = fs::path(out_dir) / prefixes[i];
        write_image_png(mixed[i].image, base.string() + "_image.png");
        write_tensor(tensor_from_scoremap(mixed[i].seg_target), base.string() + "_seg.sft");
        write_tensor(tensor_from_scoremap(mixed[i].rs_target), base.string() + "_rs.sft");
        pairs += std::to_string(mixed[i].source) + " " + std::to_string(mixed[i].destination) + "\n";
    }
    write_text_atomic(fs::path(out_dir) / "pairs.txt", pairs);
    return 0;
}

int run_recurse(const std::string& dataset_dir, int epochs, int mix_after, double lr,
                double poly, const std::string& trace_path, const PipelineConfig& cfg) {
    int num_classes = 0;
    const std::vector<TrainItem> items = load_dataset(dataset_dir, num_classes);
    ToyLearner learner(num_classes, items.front().features.total_channels(), lr,
                       SplitMix64::derive(cfg.rng_seed, 0x1ea51e));
    RecursionOptions opts;
    opts.epochs = epochs;
    opts.mix_after = mix_after;
    opts.poly_power = poly;
    const auto trace = run_recursion(learner, items, opts, cfg);
    write_text_atomic(trace_path, trace_to_jsonl(trace));
    const auto& last = trace.back();
    std::cout << "epoch " << last.epoch << ": miou_cam=" << last.miou_cam
              << " miou_rs=" << last.miou_rs << " miou_dec=" << last.miou_dec
              << " miou_cf=" << last.miou_cf << "\n";
    return 0;
}

int run_eval(const std::string& pred_dir, const std::string& truth_dir,
             const std::string& report_path, std::optional<int> classes_opt) {
    const auto preds = list_with_suffix(pred_dir, ".png");
    if (preds.empty())
        throw IoError(IoCode::open_failed, pred_dir + ": no .png masks found");
    int num_classes = classes_opt.value_or(0);
    std::vector<std::pair<LabelMask, LabelMask>> pairs;
    for (const auto& [prefix, pred_path] : preds) {
        const fs::path truth_path = fs::path(truth_dir) / (prefix + ".png");
        if (!fs::exists(truth_path))
            throw IoError(IoCode::open_failed, truth_path.string() + " missing for " +
                                                   pred_path.string());
        LabelMask pred = read_mask_png(pred_path, classes_opt);
        LabelMask truth = read_mask_png(truth_path, classes_opt);
        if (pred.height != truth.height || pred.width != truth.width)
            throw std::invalid_argument(pred_path.string() + ": shape does not match " +
                                        truth_path.string());
        if (!classes_opt)
            for (const auto& m : {pred, truth})
                for (int32_t v : m.labels) num_classes = std::max(num_classes, v);
        pairs.emplace_back(std::move(pred), std::move(truth));
    }
    ConfusionTally tally(num_classes);
    for (auto& [pred, truth] : pairs) accumulate(resolve_ignore(pred), truth, tally);

    const std::string text = render_report(tally);
    write_text_atomic(report_path, text);
    nlohmann::json record;
    record["miou"] = miou(tally);
    const auto [fp_rate, fn_rate] = fp_fn_rates(tally);
    record["fp_rate"] = fp_rate;
    record["fn_rate"] = fn_rate;
    record["per_class_iou"] = per_class_iou(tally);
    write_text_atomic(report_path + ".json", record.dump(2) + "\n");
    std::cout << text;
    return 0;
}

int run_synth(const std::string& out_dir, int count, int size, int classes, int stride,
              int max_shapes, uint64_t seed) {
    SyntheticOptions opts;
    opts.count = count;
    opts.image_size = size;
    opts.num_classes = classes;
    opts.feature_stride = stride;
    opts.max_shapes = max_shapes;
    opts.seed = seed;
    const std::vector<TrainItem> items = make_synthetic_dataset(opts);
    fs::create_directories(out_dir);
    char name[32];
    for (size_t i = 0; i < items.size(); ++i) {
        std::snprintf(name, sizeof(name), "%03zu", i);
        const fs::path base = fs::path(out_dir) / name;
        write_image_png(items[i].image, base.string() + "_image.png");
        write_tensor(tensor_from_stack(items[i].features), base.string() + "_features.sft");
        write_mask_png(items[i].truth, base.string() + "_truth.png");
    }
    std::cout << "wrote " << items.size() << " samples to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"seed-refinement pipeline for weak-label segmentation"};
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--config", common.config_path, "key = value config file")
        ->expected(1);

    std::string cam_path, map_path, image_path, dec_path, out_path, trace_path;
    std::vector<std::string> feature_paths;
    std::string batch_dir, dataset_dir, pred_dir, truth_dir, report_path, out_dir;
    int epochs = 30, mix_after = 15;
    double lr = 0.5, poly = 0.0;
    std::optional<int> eval_classes;
    int synth_count = 64, synth_size = 48, synth_classes = 3, synth_stride = 2,
        synth_shapes = 2;
    uint64_t synth_seed = 7;

    CLI::App* scg_cmd = app.add_subcommand("scg", "refine a CAM with feature self-correlations");
    scg_cmd->add_option("--cam", cam_path)->required();
    scg_cmd->add_option("--features", feature_paths)->required()->expected(-1);
    scg_cmd->add_option("--out", out_path)->required();

    CLI::App* pamr_cmd = app.add_subcommand("pamr", "pixel-adaptive propagation of a score map");
    pamr_cmd->add_option("--map", map_path)->required();
    pamr_cmd->add_option("--image", image_path)->required();
    pamr_cmd->add_option("--iters", common.iters, "propagation steps");
    pamr_cmd->add_option("--out", out_path)->required();

    CLI::App* refine_cmd =
        app.add_subcommand("refine", "full seed refinement: correlations then propagation");
    refine_cmd->add_option("--cam", cam_path)->required();
    refine_cmd->add_option("--features", feature_paths)->required()->expected(-1);
    refine_cmd->add_option("--image", image_path)->required();
    refine_cmd->add_option("--out", out_path)->required();

    CLI::App* cf_cmd = app.add_subcommand("cf", "filter a refined map into certain pseudo labels");
    cf_cmd->add_option("--map", map_path)->required();
    cf_cmd->add_option("--fg", common.fg, "foreground threshold (default 0.55)");
    cf_cmd->add_option("--bg", common.bg, "background threshold (default 0.10)");
    cf_cmd->add_option("--out", out_path)->required();

    CLI::App* ep_cmd = app.add_subcommand("ep", "relabel uncertain pixels by edge superpixels");
    ep_cmd->add_option("--dec", dec_path)->required();
    ep_cmd->add_option("--low", common.low, "edge low threshold (default 10)");
    ep_cmd->add_option("--high", common.high, "edge high threshold (default 100)");
    ep_cmd->add_option("--out", out_path)->required();

    CLI::App* mix_cmd = app.add_subcommand("mix", "paste foreground regions across a batch");
    mix_cmd->add_option("--batch", batch_dir)->required();
    mix_cmd->add_option("--seed", common.seed, "partner-draw seed");
    mix_cmd->add_option("--out", out_dir)->required();

    CLI::App* recurse_cmd =
        app.add_subcommand("recurse", "train the toy learner with recursive seed refinement");
    recurse_cmd->add_option("--dataset", dataset_dir)->required();
    recurse_cmd->add_option("--epochs", epochs);
    recurse_cmd->add_option("--mix-after", mix_after, "enable mixing from this epoch on");
    recurse_cmd->add_option("--seed", common.seed);
    recurse_cmd->add_option("--lr", lr, "learning rate");
    recurse_cmd->add_option("--poly", poly, "polynomial decay exponent (0 = constant)");
    recurse_cmd->add_option("--trace", trace_path)->required();

    CLI::App* eval_cmd = app.add_subcommand("eval", "mIoU / FP / FN over mask directories");
    eval_cmd->add_option("--pred", pred_dir)->required();
    eval_cmd->add_option("--truth", truth_dir)->required();
    eval_cmd->add_option("--classes", eval_classes, "class count (inferred when omitted)");
    eval_cmd->add_option("--report", report_path)->required();

    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic shapes dataset");
    synth_cmd->add_option("--out", out_dir)->required();
    synth_cmd->add_option("--count", synth_count);
    synth_cmd->add_option("--size", synth_size);
    synth_cmd->add_option("--classes", synth_classes);
    synth_cmd->add_option("--stride", synth_stride, "feature grid stride");
    synth_cmd->add_option("--max-shapes", synth_shapes);
    synth_cmd->add_option("--seed", synth_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        const PipelineConfig cfg = resolve_config(common);
        if (scg_cmd->parsed()) return run_scg(cam_path, feature_paths, out_path, cfg);
        if (pamr_cmd->parsed()) return run_pamr(map_path, image_path, out_path, cfg);
        if (refine_cmd->parsed())
            return run_refine(cam_path, feature_paths, image_path, out_path, cfg);
        if (cf_cmd->parsed()) return run_cf(map_path, out_path, cfg);
        if (ep_cmd->parsed()) return run_ep(dec_path, out_path, cfg);
        if (mix_cmd->parsed()) return run_mix(batch_dir, out_dir, cfg);
        if (recurse_cmd->parsed())
            return run_recurse(dataset_dir, epochs, mix_after, lr, poly, trace_path, cfg);
        if (eval_cmd->parsed()) return run_eval(pred_dir, truth_dir, report_path, eval_classes);
        if (synth_cmd->parsed())
            return run_synth(out_dir, synth_count, synth_size, synth_classes, synth_stride,
                             synth_shapes, synth_seed);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
