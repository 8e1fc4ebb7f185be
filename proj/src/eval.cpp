#include "seedrefine/eval.hpp"

#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace seedrefine {

void ConfusionTally::merge(const ConfusionTally& other) {
    if (other.tp.size() != tp.size())
        throw std::invalid_argument("ConfusionTally::merge: class counts differ");
    for (size_t c = 0; c < tp.size(); ++c) {
        tp[c] += other.tp[c];
        fp[c] += other.fp[c];
        fn[c] += other.fn[c];
    }
}

void accumulate(const LabelMask& pred, const LabelMask& truth, ConfusionTally& tally) {
    if (pred.height != truth.height || pred.width != truth.width)
        throw std::invalid_argument("accumulate: prediction and truth shapes differ");
    const int classes = tally.class_count();
    for (size_t p = 0; p < truth.labels.size(); ++p) {
        const int32_t t = truth.labels[p];
        if (t == kIgnoreLabel) continue;
        int32_t g = pred.labels[p];
        if (g == kIgnoreLabel) g = 0;
        if (t < 0 || t >= classes || g < 0 || g >= classes)
            throw std::invalid_argument("accumulate: label outside the tally's class range");
        if (g == t) {
            ++tally.tp[t];
        } else {
            ++tally.fp[g];
            ++tally.fn[t];
        }
    }
}

namespace {

template <typename Fn>
double class_mean(const ConfusionTally& tally, Fn numerator) {
    double sum = 0.0;
    int included = 0;
    for (int c = 0; c < tally.class_count(); ++c) {
        const int64_t denom = tally.tp[c] + tally.fp[c] + tally.fn[c];
        if (denom == 0) continue;
        sum += static_cast<double>(numerator(c)) / static_cast<double>(denom);
        ++included;
    }
    return included == 0 ? 0.0 : sum / included;
}

}  // namespace

double miou(const ConfusionTally& tally) {
    return class_mean(tally, [&](int c) { return tally.tp[c]; });
}

std::pair<double, double> fp_fn_rates(const ConfusionTally& tally) {
    return {class_mean(tally, [&](int c) { return tally.fp[c]; }),
            class_mean(tally, [&](int c) { return tally.fn[c]; })};
}

std::vector<double> per_class_iou(const ConfusionTally& tally) {
    std::vector<double> iou(tally.class_count(), -1.0);
    for (int c = 0; c < tally.class_count(); ++c) {
        const int64_t denom = tally.tp[c] + tally.fp[c] + tally.fn[c];
        if (denom > 0) iou[c] = static_cast<double>(tally.tp[c]) / static_cast<double>(denom);
    }
    return iou;
}

std::string render_report(const ConfusionTally& tally) {
    const std::vector<double> iou = per_class_iou(tally);
    const auto [fp_rate, fn_rate] = fp_fn_rates(tally);
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "class        iou        tp          fp          fn\n";
    for (int c = 0; c < tally.class_count(); ++c) {
        os << std::setw(5) << c << "  ";
        if (iou[c] < 0.0)
            os << std::setw(9) << "-";
        else
            os << std::setw(9) << iou[c];
        os << "  " << std::setw(10) << tally.tp[c] << "  " << std::setw(10) << tally.fp[c]
           << "  " << std::setw(10) << tally.fn[c] << "\n";
    }
    os << "mIoU " << miou(tally) << "  FP " << fp_rate << "  FN " << fn_rate << "\n";
    return os.str();
}

LabelMask argmax_mask(const ScoreMap& map, float bg_threshold) {
    LabelMask mask(map.height, map.width, 0);
    const size_t plane = map.plane_size();
    for (size_t p = 0; p < plane; ++p) {
        float best = map.values[p];
        int best_c = 0;
        for (int c = 1; c < map.classes; ++c) {
            const float v = map.values[static_cast<size_t>(c) * plane + p];
            if (v > best) {
                best = v;
                best_c = c;
            }
        }
        mask.labels[p] = best > bg_threshold ? best_c + 1 : 0;
    }
    return mask;
}

LabelMask decoder_mask(const ScoreMap& dec) {
    LabelMask mask(dec.height, dec.width, 0);
    const size_t plane = dec.plane_size();
    for (size_t p = 0; p < plane; ++p) {
        float best = dec.values[p];
        int best_c = 0;
        for (int c = 1; c < dec.classes; ++c) {
            const float v = dec.values[static_cast<size_t>(c) * plane + p];
            if (v > best) {
                best = v;
                best_c = c;
            }
        }
        mask.labels[p] = best_c;
    }
    return mask;
}

LabelMask resolve_ignore(const LabelMask& mask) {
    LabelMask out = mask;
    for (auto& v : out.labels)
        if (v == kIgnoreLabel) v = 0;
    return out;
}

}  // namespace seedrefine
