#include "seedrefine/seedloop.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "seedrefine/edgepredict.hpp"
#include "seedrefine/eval.hpp"
#include "seedrefine/grid_ops.hpp"
#include "seedrefine/mixer.hpp"
#include "seedrefine/rng.hpp"
#include "seedrefine/scg.hpp"

namespace seedrefine {

LabelMask certain_filter(const ScoreMap& rs, const PipelineConfig& cfg) {
    if (!rs.probabilistic)
        throw std::invalid_argument("certain_filter: input map must be probabilistic");
    LabelMask out(rs.height, rs.width, 0);
    const size_t plane = rs.plane_size();
    for (size_t p = 0; p < plane; ++p) {
        float best = rs.values[p];
        int best_c = 0;
        for (int c = 1; c < rs.classes; ++c) {
            const float v = rs.values[static_cast<size_t>(c) * plane + p];
            if (v > best) {
                best = v;
                best_c = c;
            }
        }
        if (best > cfg.delta_fg) out.labels[p] = best_c + 1;
        else if (best < cfg.delta_bg) out.labels[p] = 0;
        else out.labels[p] = kIgnoreLabel;
    }
    return out;
}

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double log_clamped(double v, double eps) { return std::log(std::max(v, eps)); }

}  // namespace

double loss_cls(const ScoreMap& cam, const std::vector<uint8_t>& labels, float epsilon) {
    if (static_cast<int>(labels.size()) != cam.classes)
        throw std::invalid_argument("loss_cls: label vector size does not match class count");
    const double eps = epsilon;
    const size_t plane = cam.plane_size();
    double sum = 0.0;
    for (int c = 0; c < cam.classes; ++c) {
        const std::span<const float> values = cam.plane(c);
        double z = 0.0;
        for (size_t p = 0; p < plane; ++p) z += values[p];
        z /= static_cast<double>(plane);
        const double yhat = sigmoid(z);
        const double y = labels[c] ? 1.0 : 0.0;
        sum += -(y * log_clamped(yhat, eps) + (1.0 - y) * log_clamped(1.0 - yhat, eps));
    }
    return sum / cam.classes;
}

double loss_seg(const ScoreMap& pred_logits, const LabelMask& target, float epsilon) {
    if (pred_logits.height != target.height || pred_logits.width != target.width)
        throw std::invalid_argument("loss_seg: prediction and target shapes differ");
    const int channels = pred_logits.classes;
    const size_t plane = pred_logits.plane_size();
    const double eps = epsilon;
    double sum = 0.0;
    int64_t count = 0;
    std::vector<double> logits(channels);
    for (size_t p = 0; p < plane; ++p) {
        const int32_t t = target.labels[p];
        if (t == kIgnoreLabel) continue;
        if (t < 0 || t >= channels)
            throw std::invalid_argument("loss_seg: target label outside the channel range");
        double mx = -1e300;
        for (int c = 0; c < channels; ++c) {
            logits[c] = pred_logits.values[static_cast<size_t>(c) * plane + p];
            mx = std::max(mx, logits[c]);
        }
        double denom = 0.0;
        for (int c = 0; c < channels; ++c) denom += std::exp(logits[c] - mx);
        const double q = std::exp(logits[t] - mx) / denom;
        sum += -log_clamped(q, eps);
        ++count;
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double loss_rec(const ScoreMap& a, const ScoreMap& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("loss_rec: shapes differ");
    double sum = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i)
        sum += std::abs(static_cast<double>(a.values[i]) - b.values[i]);
    return sum / static_cast<double>(a.values.size());
}

ScoreMap softmax_map(const ScoreMap& logits) {
    ScoreMap out(logits.classes, logits.height, logits.width, true);
    const size_t plane = logits.plane_size();
    std::vector<double> v(logits.classes);
    for (size_t p = 0; p < plane; ++p) {
        double mx = -1e300;
        for (int c = 0; c < logits.classes; ++c) {
            v[c] = logits.values[static_cast<size_t>(c) * plane + p];
            mx = std::max(mx, v[c]);
        }
        double denom = 0.0;
        for (int c = 0; c < logits.classes; ++c) {
            v[c] = std::exp(v[c] - mx);
            denom += v[c];
        }
        for (int c = 0; c < logits.classes; ++c)
            out.values[static_cast<size_t>(c) * plane + p] = static_cast<float>(v[c] / denom);
    }
    return out;
}

ScoreMap recurseed_step(const ScoreMap& cam, const FeatureStack& stack, const RgbImage& image,
                        const PipelineConfig& cfg) {
    const ScoreMap refined = scg_refine(cam, stack, cfg);
    const WindowMask window = positive_window(refined);
    return pamr_refine(refined, image, window, cfg);
}

// ---------------------------------------------------------------------------
// Toy learner
// ---------------------------------------------------------------------------

ToyLearner::ToyLearner(int num_classes, int feature_channels, double learning_rate, uint64_t seed)
    : num_classes_(num_classes), feature_channels_(feature_channels), learning_rate_(learning_rate) {
    if (num_classes < 1 || feature_channels < 1)
        throw std::invalid_argument("ToyLearner: class and channel counts must be positive");
    SplitMix64 rng(seed);
    auto init = [&](std::vector<double>& v, size_t n, double scale) {
        v.resize(n);
        for (auto& x : v) x = scale * rng.next_normal();
    };
    init(w_cls, static_cast<size_t>(num_classes) * feature_channels, 0.1);
    b_cls.assign(num_classes, 0.0);
    init(w_dec, static_cast<size_t>(num_classes + 1) * feature_channels, 0.1);
    b_dec.assign(num_classes + 1, 0.0);
}

namespace {

// out[c*hw + p] = b[c] + sum_u w[c*U + u] * f[u*hw + p], all accumulation in double
void forward_head(const std::vector<double>& w, const std::vector<double>& b,
                  const FeatureLayer& f, int num_out, std::vector<double>& out) {
    const size_t hw = f.plane_size();
    const int u_count = f.channels;
    out.assign(static_cast<size_t>(num_out) * hw, 0.0);
    for (int c = 0; c < num_out; ++c) {
        double* plane = out.data() + static_cast<size_t>(c) * hw;
        for (size_t p = 0; p < hw; ++p) plane[p] = b[c];
        for (int u = 0; u < u_count; ++u) {
            const double wv = w[static_cast<size_t>(c) * u_count + u];
            const float* fp = f.values.data() + static_cast<size_t>(u) * hw;
            for (size_t p = 0; p < hw; ++p) plane[p] += wv * fp[p];
        }
    }
}

ScoreMap to_scoremap(const std::vector<double>& planes, int classes, int h, int w) {
    ScoreMap map(classes, h, w, false);
    for (size_t i = 0; i < planes.size(); ++i) map.values[i] = static_cast<float>(planes[i]);
    return map;
}

}  // namespace

ScoreMap ToyLearner::cam_logits(const FeatureLayer& features) const {
    if (features.channels != feature_channels_)
        throw std::invalid_argument("ToyLearner: feature channel count mismatch");
    std::vector<double> planes;
    forward_head(w_cls, b_cls, features, num_classes_, planes);
    return to_scoremap(planes, num_classes_, features.height, features.width);
}

ScoreMap ToyLearner::dec_logits(const FeatureLayer& features) const {
    if (features.channels != feature_channels_)
        throw std::invalid_argument("ToyLearner: feature channel count mismatch");
    std::vector<double> planes;
    forward_head(w_dec, b_dec, features, num_classes_ + 1, planes);
    return to_scoremap(planes, num_classes_ + 1, features.height, features.width);
}

bool ToyLearner::parameters_finite() const {
    auto ok = [](const std::vector<double>& v) {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    return ok(w_cls) && ok(b_cls) && ok(w_dec) && ok(b_dec);
}

FeatureLayer concat_features(const FeatureStack& stack) {
    if (stack.empty()) throw std::invalid_argument("concat_features: no layers");
    const int h = stack.layers.front().height;
    const int w = stack.layers.front().width;
    for (const auto& l : stack.layers)
        if (l.height != h || l.width != w)
            throw std::invalid_argument("concat_features: layers must share one (height, width)");
    FeatureLayer out(stack.total_channels(), h, w);
    size_t offset = 0;
    for (const auto& l : stack.layers) {
        std::copy(l.values.begin(), l.values.end(), out.values.begin() + offset);
        offset += l.values.size();
    }
    return out;
}

PreparedItem prepare_item(const TrainItem& item, const PipelineConfig& cfg) {
    PreparedItem out;
    out.concat = concat_features(item.features);
    out.features = item.features;
    out.image_ws = resize_bilinear(item.image, out.concat.height, out.concat.width);
    out.affinity = build_affinity(out.image_ws, cfg.pamr_dilations, cfg);
    out.labels = item.labels;
    if (!item.truth.labels.empty())
        out.truth_ws = resize_nearest(item.truth, out.concat.height, out.concat.width);
    return out;
}

std::vector<PreparedItem> prepare_items(const std::vector<TrainItem>& items,
                                        const PipelineConfig& cfg) {
    std::vector<PreparedItem> out;
    out.reserve(items.size());
    for (const auto& item : items) out.push_back(prepare_item(item, cfg));
    return out;
}

// ---------------------------------------------------------------------------
// Targets (constants for the epoch: no gradient flows through refinement)
// ---------------------------------------------------------------------------

namespace {

// Per-class normalized CAM with absent-class planes zeroed; the map refinement
// always sees activations scaled to [0,1] and only for classes present in the
// image-level labels.
ScoreMap masked_normalized_cam(const ToyLearner& learner, const PreparedItem& item) {
    ScoreMap cam = learner.cam_logits(item.concat);
    minmax_normalize_per_class(cam);
    for (int c = 0; c < cam.classes; ++c)
        if (!item.labels[c]) {
            auto plane = cam.plane(c);
            std::fill(plane.begin(), plane.end(), 0.0f);
        }
    return cam;
}

}  // namespace

EpochTargets build_targets(const ToyLearner& learner, const std::vector<PreparedItem>& items,
                           const PipelineConfig& cfg, const TrainOptions& opts) {
    const int num_classes = learner.num_classes();
    EpochTargets targets;
    targets.mix = opts.mix;
    targets.items.resize(items.size());

    std::vector<ScoreMap> ep_maps;
    if (opts.mix) ep_maps.reserve(items.size());

    for (size_t b = 0; b < items.size(); ++b) {
        const PreparedItem& item = items[b];
        if (static_cast<int>(item.labels.size()) != num_classes)
            throw std::invalid_argument("build_targets: label vector size does not match classes");
        EpochTargets::PerItem& tg = targets.items[b];

        const ScoreMap cam = masked_normalized_cam(learner, item);
        const ScoreMap refined = scg_refine(cam, item.features, cfg);
        const WindowMask window = positive_window(refined);
        tg.rs = pamr_propagate(refined, item.affinity, window, cfg.pamr_iterations);
        tg.rs_norm = tg.rs;
        minmax_normalize_per_class(tg.rs_norm);
        tg.seg = certain_filter(tg.rs, cfg);

        if (opts.mix) {
            const ScoreMap dec_prob = softmax_map(learner.dec_logits(item.concat));
            const WindowMask dec_window = positive_window(dec_prob);
            const ScoreMap dec_refined =
                pamr_propagate(dec_prob, item.affinity, dec_window, cfg.pamr_iterations);
            ep_maps.push_back(ep_refine(dec_refined, cfg));
        }
    }

    if (opts.mix) {
        if (items.size() < 2)
            throw std::invalid_argument("build_targets: mixing needs a batch of at least 2");
        const std::vector<int> partners =
            mix_partners(static_cast<int>(items.size()), opts.mix_seed);
        for (size_t b = 0; b < items.size(); ++b) {
            EpochTargets::PerItem& tg = targets.items[b];
            const int j = partners[b];
            tg.partner = j;
            tg.fg = foreground_union(ep_maps[b], cfg);
            const size_t plane = items[b].concat.plane_size();

            tg.concat_mix = items[b].concat;
            tg.concat_mix.values =
                masked_combine(items[b].concat.values, items[j].concat.values, tg.fg, plane);

            ScoreMap rs_mix = targets.items[b].rs;
            rs_mix.values =
                masked_combine(targets.items[b].rs.values, targets.items[j].rs.values, tg.fg, plane);
            tg.rs_mix_norm = rs_mix;
            minmax_normalize_per_class(tg.rs_mix_norm);

            ScoreMap seg_score = ep_maps[b];
            seg_score.values =
                masked_combine(ep_maps[b].values, ep_maps[j].values, tg.fg, plane);
            // Certainty filtering operates on the foreground channels of the pasted map.
            ScoreMap fg_slice(num_classes, seg_score.height, seg_score.width, true);
            std::copy(seg_score.values.begin() + plane, seg_score.values.end(),
                      fg_slice.values.begin());
            tg.seg_mix = certain_filter(fg_slice, cfg);

            tg.labels_mix.assign(num_classes, 0);
            for (int32_t v : tg.seg_mix.labels)
                if (v > 0) tg.labels_mix[v - 1] = 1;
        }
    }
    return targets;
}

// ---------------------------------------------------------------------------
// Losses and analytic gradients
// ---------------------------------------------------------------------------

void HeadGradients::init(int num_classes, int channels) {
    w_cls.assign(static_cast<size_t>(num_classes) * channels, 0.0);
    b_cls.assign(num_classes, 0.0);
    w_dec.assign(static_cast<size_t>(num_classes + 1) * channels, 0.0);
    b_dec.assign(num_classes + 1, 0.0);
}

void HeadGradients::add_scaled(const HeadGradients& g, double scale) {
    for (size_t i = 0; i < w_cls.size(); ++i) w_cls[i] += scale * g.w_cls[i];
    for (size_t i = 0; i < b_cls.size(); ++i) b_cls[i] += scale * g.b_cls[i];
    for (size_t i = 0; i < w_dec.size(); ++i) w_dec[i] += scale * g.w_dec[i];
    for (size_t i = 0; i < b_dec.size(); ++i) b_dec[i] += scale * g.b_dec[i];
}

namespace {

// dL/d(plane) -> dL/dw, dL/db for one head output channel.
void scatter_plane(const std::vector<double>& dplane, const FeatureLayer& f, int channel,
                   std::vector<double>& gw, std::vector<double>& gb) {
    const size_t hw = f.plane_size();
    const int u_count = f.channels;
    double bsum = 0.0;
    for (size_t p = 0; p < hw; ++p) bsum += dplane[p];
    gb[channel] += bsum;
    for (int u = 0; u < u_count; ++u) {
        const float* fp = f.values.data() + static_cast<size_t>(u) * hw;
        double s = 0.0;
        for (size_t p = 0; p < hw; ++p) s += dplane[p] * fp[p];
        gw[static_cast<size_t>(channel) * u_count + u] += s;
    }
}

struct ItemLosses {
    double cls = 0.0, seg = 0.0, rec = 0.0;
    int64_t seg_pixels = 0;
};

// Classification loss on the cam head plus its gradient (scaled by `scale`).
double item_loss_cls(const std::vector<double>& cam, const FeatureLayer& f,
                     const std::vector<uint8_t>& labels, double eps, double scale,
                     HeadGradients* g) {
    const size_t hw = f.plane_size();
    const int classes = static_cast<int>(labels.size());
    const int u_count = f.channels;
    std::vector<double> fbar;
    if (g) {
        fbar.resize(u_count);
        for (int u = 0; u < u_count; ++u) {
            const float* fp = f.values.data() + static_cast<size_t>(u) * hw;
            double s = 0.0;
            for (size_t p = 0; p < hw; ++p) s += fp[p];
            fbar[u] = s / static_cast<double>(hw);
        }
    }
    double sum = 0.0;
    for (int c = 0; c < classes; ++c) {
        const double* plane = cam.data() + static_cast<size_t>(c) * hw;
        double z = 0.0;
        for (size_t p = 0; p < hw; ++p) z += plane[p];
        z /= static_cast<double>(hw);
        const double yhat = sigmoid(z);
        const double y = labels[c] ? 1.0 : 0.0;
        sum += -(y * log_clamped(yhat, eps) + (1.0 - y) * log_clamped(1.0 - yhat, eps));
        if (g) {
            double dz = 0.0;
            if (yhat > eps) dz += -y * (1.0 - yhat);
            if (1.0 - yhat > eps) dz += (1.0 - y) * yhat;
            const double k = scale * dz / classes;
            for (int u = 0; u < u_count; ++u)
                g->w_cls[static_cast<size_t>(c) * u_count + u] += k * fbar[u];
            g->b_cls[c] += k;
        }
    }
    return sum / classes;
}

// Softmax cross entropy on the dec head against hard labels with ignore.
double item_loss_seg(const std::vector<double>& dec, const FeatureLayer& f, const LabelMask& target,
                     double eps, double scale, HeadGradients* g, int64_t* pixels) {
    const size_t hw = f.plane_size();
    const int channels = static_cast<int>(dec.size() / hw);
    int64_t count = 0;
    for (int32_t t : target.labels)
        if (t != kIgnoreLabel) ++count;
    *pixels = count;
    if (count == 0) return 0.0;

    std::vector<double> dplanes;
    if (g) dplanes.assign(dec.size(), 0.0);
    std::vector<double> q(channels);
    double sum = 0.0;
    const double inv_count = 1.0 / static_cast<double>(count);
    for (size_t p = 0; p < hw; ++p) {
        const int32_t t = target.labels[p];
        if (t == kIgnoreLabel) continue;
        double mx = -1e300;
        for (int c = 0; c < channels; ++c)
            mx = std::max(mx, dec[static_cast<size_t>(c) * hw + p]);
        double denom = 0.0;
        for (int c = 0; c < channels; ++c) {
            q[c] = std::exp(dec[static_cast<size_t>(c) * hw + p] - mx);
            denom += q[c];
        }
        for (int c = 0; c < channels; ++c) q[c] /= denom;
        sum += -log_clamped(q[t], eps);
        if (g && q[t] > eps) {
            for (int c = 0; c < channels; ++c)
                dplanes[static_cast<size_t>(c) * hw + p] =
                    scale * inv_count * (q[c] - (c == t ? 1.0 : 0.0));
        }
    }
    if (g) {
        std::vector<double> one(hw);
        for (int c = 0; c < channels; ++c) {
            std::copy(dplanes.begin() + static_cast<size_t>(c) * hw,
                      dplanes.begin() + static_cast<size_t>(c + 1) * hw, one.begin());
            scatter_plane(one, f, c, g->w_dec, g->b_dec);
        }
    }
    return sum * inv_count;
}

// L1 between the per-class min-max normalized cam (masked to present classes)
// and a fixed normalized target. The gradient runs through the normalization,
// including the argmin/argmax terms.
double item_loss_rec(const std::vector<double>& cam, const FeatureLayer& f,
                     const std::vector<uint8_t>& labels, const ScoreMap& target, double scale,
                     HeadGradients* g) {
    const size_t hw = f.plane_size();
    const int classes = static_cast<int>(labels.size());
    const double inv_n = 1.0 / (static_cast<double>(classes) * hw);
    double sum = 0.0;
    std::vector<double> dplane(hw);
    for (int c = 0; c < classes; ++c) {
        const double* plane = cam.data() + static_cast<size_t>(c) * hw;
        const std::span<const float> t = target.plane(c);
        size_t i_mn = 0, i_mx = 0;
        for (size_t p = 1; p < hw; ++p) {
            if (plane[p] < plane[i_mn]) i_mn = p;
            if (plane[p] > plane[i_mx]) i_mx = p;
        }
        const double mn = plane[i_mn], mx = plane[i_mx];
        const double range = mx - mn;
        const bool active = labels[c] && range > 0.0;
        if (!active) {
            // Prediction plane is identically zero (absent class or degenerate
            // normalization); the term is constant in the parameters.
            for (size_t p = 0; p < hw; ++p) sum += std::abs(static_cast<double>(t[p]));
            continue;
        }
        double s_sum = 0.0, q_sum = 0.0;
        for (size_t p = 0; p < hw; ++p) {
            const double n = (plane[p] - mn) / range;
            const double diff = n - t[p];
            sum += std::abs(diff);
            const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            dplane[p] = s;
            s_sum += s;
            q_sum += s * n;
        }
        if (g) {
            const double k = scale * inv_n / range;
            for (size_t p = 0; p < hw; ++p) dplane[p] *= k;
            dplane[i_mn] -= k * s_sum;
            dplane[i_mx] -= k * q_sum;
            dplane[i_mn] += k * q_sum;
            scatter_plane(dplane, f, c, g->w_cls, g->b_cls);
        }
    }
    return sum * inv_n;
}

}  // namespace

LossReport compute_losses(const ToyLearner& learner, const std::vector<PreparedItem>& items,
                          const EpochTargets& targets, const PipelineConfig& cfg,
                          LossGradients* grads) {
    if (items.size() != targets.items.size())
        throw std::invalid_argument("compute_losses: item and target counts differ");
    const int classes = learner.num_classes();
    const int channels = learner.feature_channels();
    if (grads) {
        grads->cls.init(classes, channels);
        grads->seg.init(classes, channels);
        grads->rec.init(classes, channels);
        grads->seg_mix.init(classes, channels);
        grads->rec_mix.init(classes, channels);
    }
    LossReport report;
    const double eps = cfg.epsilon;
    const double inv_b = 1.0 / static_cast<double>(items.size());
    std::vector<double> cam, dec;
    for (size_t b = 0; b < items.size(); ++b) {
        const PreparedItem& item = items[b];
        const EpochTargets::PerItem& tg = targets.items[b];

        forward_head(learner.w_cls, learner.b_cls, item.concat, classes, cam);
        forward_head(learner.w_dec, learner.b_dec, item.concat, classes + 1, dec);

        report.l_cls += inv_b * item_loss_cls(cam, item.concat, item.labels, eps, inv_b,
                                              grads ? &grads->cls : nullptr);
        int64_t px = 0;
        report.l_seg += inv_b * item_loss_seg(dec, item.concat, tg.seg, eps, inv_b,
                                              grads ? &grads->seg : nullptr, &px);
        report.seg_pixels += px;
        report.l_rec += inv_b * item_loss_rec(cam, item.concat, item.labels, tg.rs_norm, inv_b,
                                              grads ? &grads->rec : nullptr);

        if (targets.mix) {
            forward_head(learner.w_cls, learner.b_cls, tg.concat_mix, classes, cam);
            forward_head(learner.w_dec, learner.b_dec, tg.concat_mix, classes + 1, dec);
            int64_t px_mix = 0;
            report.l_seg_mix +=
                inv_b * item_loss_seg(dec, tg.concat_mix, tg.seg_mix, eps, inv_b,
                                      grads ? &grads->seg_mix : nullptr, &px_mix);
            report.seg_mix_pixels += px_mix;
            report.l_rec_mix +=
                inv_b * item_loss_rec(cam, tg.concat_mix, tg.labels_mix, tg.rs_mix_norm, inv_b,
                                      grads ? &grads->rec_mix : nullptr);
        }
    }
    return report;
}

namespace {

void check_finite(const HeadGradients& g, const char* which) {
    auto ok = [](const std::vector<double>& v) {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    };
    if (!ok(g.w_cls) || !ok(g.b_cls) || !ok(g.w_dec) || !ok(g.b_dec))
        throw std::runtime_error(std::string("train_epoch: non-finite gradient in ") + which);
}

void apply_step(ToyLearner& learner, const LossGradients& grads, double lr) {
    HeadGradients total;
    total.init(learner.num_classes(), learner.feature_channels());
    total.add_scaled(grads.cls, 1.0);
    total.add_scaled(grads.seg, 1.0);
    total.add_scaled(grads.rec, 1.0);
    total.add_scaled(grads.seg_mix, 1.0);
    total.add_scaled(grads.rec_mix, 1.0);
    check_finite(total, "total");
    for (size_t i = 0; i < learner.w_cls.size(); ++i) learner.w_cls[i] -= lr * total.w_cls[i];
    for (size_t i = 0; i < learner.b_cls.size(); ++i) learner.b_cls[i] -= lr * total.b_cls[i];
    for (size_t i = 0; i < learner.w_dec.size(); ++i) learner.w_dec[i] -= lr * total.w_dec[i];
    for (size_t i = 0; i < learner.b_dec.size(); ++i) learner.b_dec[i] -= lr * total.b_dec[i];
}

}  // namespace

LossReport train_epoch(ToyLearner& learner, const std::vector<PreparedItem>& items,
                       const PipelineConfig& cfg, const TrainOptions& opts) {
    if (opts.mix && items.size() < 2)
        throw std::invalid_argument("train_epoch: mixing needs a batch of at least 2");
    if (!learner.parameters_finite())
        throw std::runtime_error("train_epoch: learner parameters are not finite");
    const EpochTargets targets = build_targets(learner, items, cfg, opts);
    LossGradients grads;
    const LossReport report = compute_losses(learner, items, targets, cfg, &grads);
    apply_step(learner, grads, learner.learning_rate());
    return report;
}

LossReport train_epoch(ToyLearner& learner, const std::vector<TrainItem>& items,
                       const PipelineConfig& cfg, const TrainOptions& opts) {
    return train_epoch(learner, prepare_items(items, cfg), cfg, opts);
}

std::vector<EpochMetrics> run_recursion(ToyLearner& learner, const std::vector<TrainItem>& items,
                                        const RecursionOptions& opts, const PipelineConfig& cfg) {
    if (opts.epochs < 1) throw std::invalid_argument("run_recursion: epochs must be >= 1");
    if (items.empty()) throw std::invalid_argument("run_recursion: empty dataset");
    const std::vector<PreparedItem> prepared = prepare_items(items, cfg);
    for (const auto& item : prepared)
        if (item.truth_ws.labels.empty())
            throw std::invalid_argument("run_recursion: items need ground truth for the metrics");

    const int classes = learner.num_classes();
    const double base_lr = learner.learning_rate();
    std::vector<EpochMetrics> trace;
    trace.reserve(opts.epochs);

    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        TrainOptions epoch_opts;
        epoch_opts.mix = epoch >= opts.mix_after;
        epoch_opts.mix_seed = SplitMix64::derive(cfg.rng_seed, static_cast<uint64_t>(epoch));

        const EpochTargets targets = build_targets(learner, prepared, cfg, epoch_opts);
        LossGradients grads;
        EpochMetrics m;
        m.epoch = epoch;
        m.losses = compute_losses(learner, prepared, targets, cfg, &grads);

        // Metrics come from this epoch's forward pass, before the update.
        ConfusionTally tally_cam(classes), tally_rs(classes), tally_dec(classes),
            tally_cf(classes);
        for (size_t b = 0; b < prepared.size(); ++b) {
            const PreparedItem& item = prepared[b];
            const ScoreMap cam = masked_normalized_cam(learner, item);
            accumulate(argmax_mask(cam, cfg.delta_bg), item.truth_ws, tally_cam);
            accumulate(argmax_mask(targets.items[b].rs, cfg.delta_bg), item.truth_ws, tally_rs);
            const ScoreMap dec_prob = softmax_map(learner.dec_logits(item.concat));
            accumulate(decoder_mask(dec_prob), item.truth_ws, tally_dec);
            accumulate(resolve_ignore(targets.items[b].seg), item.truth_ws, tally_cf);
        }
        m.miou_cam = miou(tally_cam);
        m.miou_rs = miou(tally_rs);
        m.miou_dec = miou(tally_dec);
        m.miou_cf = miou(tally_cf);

        const double decay =
            opts.poly_power == 0.0
                ? 1.0
                : std::pow(1.0 - static_cast<double>(epoch - 1) / opts.epochs, opts.poly_power);
        apply_step(learner, grads, base_lr * decay);
        trace.push_back(std::move(m));
    }
    return trace;
}

std::string trace_to_jsonl(const std::vector<EpochMetrics>& trace) {
    std::ostringstream os;
    for (const auto& m : trace) {
        nlohmann::json record{{"epoch", m.epoch},
                              {"loss_cls", m.losses.l_cls},
                              {"loss_seg", m.losses.l_seg},
                              {"loss_rec", m.losses.l_rec},
                              {"loss_seg_mix", m.losses.l_seg_mix},
                              {"loss_rec_mix", m.losses.l_rec_mix},
                              {"seg_pixels", m.losses.seg_pixels},
                              {"seg_mix_pixels", m.losses.seg_mix_pixels},
                              {"miou_cam", m.miou_cam},
                              {"miou_rs", m.miou_rs},
                              {"miou_dec", m.miou_dec},
                              {"miou_cf", m.miou_cf}};
        os << record.dump() << "\n";
    }
    return os.str();
}

}  // namespace seedrefine
