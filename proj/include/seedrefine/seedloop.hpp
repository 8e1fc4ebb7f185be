#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seedrefine/config.hpp"
#include "seedrefine/pamr.hpp"
#include "seedrefine/types.hpp"

namespace seedrefine {

/// Pseudo-label filter over a probabilistic C-channel map: per pixel, the argmax
/// class (1..C, ties to the smaller index) where the max score clears delta_fg,
/// background (0) where it falls below delta_bg, ignore (-1) in between.
LabelMask certain_filter(const ScoreMap& rs, const PipelineConfig& cfg);

/// Multi-label soft margin loss: sigmoid of the per-class spatial mean of `cam`
/// against presence bits, mean binary cross entropy over classes. Log arguments
/// are clamped below by epsilon.
double loss_cls(const ScoreMap& cam, const std::vector<uint8_t>& labels, float epsilon);

/// Per-pixel softmax cross entropy of (C+1)-channel logits against a label mask,
/// averaged over pixels not labeled -1; 0 if every pixel is ignored.
double loss_seg(const ScoreMap& pred_logits, const LabelMask& target, float epsilon);

/// Mean absolute difference over all (c,i,j); shapes must match.
double loss_rec(const ScoreMap& a, const ScoreMap& b);

/// Softmax across channels per pixel (numerically stabilized), marked probabilistic.
ScoreMap softmax_map(const ScoreMap& logits);

/// One seed-refinement step: correlation refinement of the CAM, then pixel-adaptive
/// propagation restricted to the window where the refined map is positive.
ScoreMap recurseed_step(const ScoreMap& cam, const FeatureStack& stack, const RgbImage& image,
                        const PipelineConfig& cfg);

struct LossReport {
    double l_cls = 0.0;
    double l_seg = 0.0;
    double l_rec = 0.0;
    double l_seg_mix = 0.0;
    double l_rec_mix = 0.0;
    int64_t seg_pixels = 0;      // pixels contributing to l_seg across the batch
    int64_t seg_mix_pixels = 0;  // same for l_seg_mix

    double total() const { return l_cls + l_seg + l_rec + l_seg_mix + l_rec_mix; }
};

/// Per-pixel linear classification and decoder heads over a frozen feature stack.
/// cam(f)[c] = w_cls[c].f + b_cls[c] (C channels); dec adds a background channel
/// at index 0. Parameters are kept in float64 so analytic gradients can be checked
/// tightly against central finite differences; emitted maps are float32.
class ToyLearner {
public:
    ToyLearner() = default;
    ToyLearner(int num_classes, int feature_channels, double learning_rate, uint64_t seed);

    int num_classes() const { return num_classes_; }
    int feature_channels() const { return feature_channels_; }
    double learning_rate() const { return learning_rate_; }
    void set_learning_rate(double lr) { learning_rate_ = lr; }

    /// C x H x W classification logits from a U x H x W feature plane stack.
    ScoreMap cam_logits(const FeatureLayer& features) const;
    /// (C+1) x H x W decoder logits, background at channel 0.
    ScoreMap dec_logits(const FeatureLayer& features) const;

    bool parameters_finite() const;

    // Row-major heads: w_cls is C x U, w_dec is (C+1) x U.
    std::vector<double> w_cls, b_cls, w_dec, b_dec;

private:
    int num_classes_ = 0;
    int feature_channels_ = 0;
    double learning_rate_ = 0.1;
};

/// Concatenate the layers of a stack channel-wise; all layers must share (h, w).
FeatureLayer concat_features(const FeatureStack& stack);

/// One dataset element. Feature layers share one (height, width) — the working
/// grid of the learner; image and truth may be larger and are resampled once.
struct TrainItem {
    FeatureStack features;
    RgbImage image;
    std::vector<uint8_t> labels;  // presence bit per foreground class 1..C
    LabelMask truth;              // ground truth, used for metrics only
};

struct TrainOptions {
    bool mix = false;
    uint64_t mix_seed = 0;
};

/// Item resampled to the working grid with its affinity field prebuilt, so epochs
/// do not repeat image-only work.
struct PreparedItem {
    FeatureStack features;  // at the working grid
    FeatureLayer concat;
    RgbImage image_ws;
    AffinityField affinity;
    std::vector<uint8_t> labels;
    LabelMask truth_ws;
};

PreparedItem prepare_item(const TrainItem& item, const PipelineConfig& cfg);
std::vector<PreparedItem> prepare_items(const std::vector<TrainItem>& items,
                                        const PipelineConfig& cfg);

/// Everything the losses treat as constant for one epoch: refined seeds, filtered
/// pseudo-labels, and (when mixing) pasted features and targets.
struct EpochTargets {
    struct PerItem {
        ScoreMap rs;            // refined seed map (raw, probabilistic)
        ScoreMap rs_norm;       // per-class normalized reconstruction target
        LabelMask seg;          // certain-filter pseudo labels
        int partner = -1;       // mixing partner, -1 when mixing is off
        std::vector<uint8_t> fg;
        FeatureLayer concat_mix;
        ScoreMap rs_mix_norm;
        LabelMask seg_mix;
        std::vector<uint8_t> labels_mix;
    };
    std::vector<PerItem> items;
    bool mix = false;
};

EpochTargets build_targets(const ToyLearner& learner, const std::vector<PreparedItem>& items,
                           const PipelineConfig& cfg, const TrainOptions& opts);

struct HeadGradients {
    std::vector<double> w_cls, b_cls, w_dec, b_dec;

    void init(int num_classes, int channels);
    void add_scaled(const HeadGradients& g, double scale);
};

/// Gradient of each loss term separately; the update uses their sum.
struct LossGradients {
    HeadGradients cls, seg, rec, seg_mix, rec_mix;
};

/// Batch-mean losses of the learner against fixed targets; no gradient flows
/// through refinement. Pass `grads` to also get the analytic per-loss gradients.
LossReport compute_losses(const ToyLearner& learner, const std::vector<PreparedItem>& items,
                          const EpochTargets& targets, const PipelineConfig& cfg,
                          LossGradients* grads = nullptr);

/// Build targets, compute losses and gradients, and apply one step on the sum of
/// all enabled loss terms. Throws if any gradient is non-finite.
LossReport train_epoch(ToyLearner& learner, const std::vector<PreparedItem>& items,
                       const PipelineConfig& cfg, const TrainOptions& opts = {});
LossReport train_epoch(ToyLearner& learner, const std::vector<TrainItem>& items,
                       const PipelineConfig& cfg, const TrainOptions& opts = {});

struct EpochMetrics {
    int epoch = 0;  // 1-based
    LossReport losses;
    double miou_cam = 0.0;
    double miou_rs = 0.0;
    double miou_dec = 0.0;
    double miou_cf = 0.0;
};

struct RecursionOptions {
    int epochs = 30;
    int mix_after = 15;      // mixing enabled for epochs >= mix_after
    double poly_power = 0.0; // 0 keeps the learning rate constant
};

/// Train for `epochs` full-batch steps, enabling the mixer for epochs >= mix_after,
/// and record losses plus the mIoU of the CAM, refined-seed, decoder, and filtered
/// pseudo masks each epoch. Deterministic given the config seed.
std::vector<EpochMetrics> run_recursion(ToyLearner& learner, const std::vector<TrainItem>& items,
                                        const RecursionOptions& opts, const PipelineConfig& cfg);

/// JSON-lines rendering of a metrics trace (one record per epoch).
std::string trace_to_jsonl(const std::vector<EpochMetrics>& trace);

}  // namespace seedrefine
