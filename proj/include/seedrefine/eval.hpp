#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seedrefine/types.hpp"

namespace seedrefine {

/// Per-class TP/FP/FN pixel counts over a dataset (classes 0..C, background = 0).
/// Tallies are mergeable, so per-image counts can be summed in any order.
struct ConfusionTally {
    std::vector<int64_t> tp, fp, fn;

    ConfusionTally() = default;
    explicit ConfusionTally(int num_classes)
        : tp(num_classes + 1, 0), fp(num_classes + 1, 0), fn(num_classes + 1, 0) {}

    int class_count() const { return static_cast<int>(tp.size()); }
    void merge(const ConfusionTally& other);
};

/// Add one prediction/truth pair. Truth pixels labeled -1 are skipped; prediction
/// pixels labeled -1 count as background.
void accumulate(const LabelMask& pred, const LabelMask& truth, ConfusionTally& tally);

/// Mean over classes of TP/(TP+FP+FN); zero-denominator classes are excluded,
/// and an empty mean yields 0.
double miou(const ConfusionTally& tally);

/// Class-mean FP/(TP+FP+FN) and FN/(TP+FP+FN) with the same exclusion rule, so
/// miou + fp_rate + fn_rate = 1 over the same class set.
std::pair<double, double> fp_fn_rates(const ConfusionTally& tally);

/// Per-class IoU; excluded classes are reported as -1.
std::vector<double> per_class_iou(const ConfusionTally& tally);

/// Plain-text table: per-class IoU plus the mIoU/FP/FN summary line.
std::string render_report(const ConfusionTally& tally);

/// Commit a C-channel score map to labels: argmax class (ties to the smaller
/// index) where the max exceeds bg_threshold, background otherwise.
LabelMask argmax_mask(const ScoreMap& map, float bg_threshold);

/// Commit a (C+1)-channel map to labels by per-pixel argmax over all channels.
LabelMask decoder_mask(const ScoreMap& dec);

/// Map ignore pixels (-1) to background, leaving other labels untouched.
LabelMask resolve_ignore(const LabelMask& mask);

}  // namespace seedrefine
