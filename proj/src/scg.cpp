#include "seedrefine/scg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seedrefine/grid_ops.hpp"

namespace seedrefine {

namespace {

// Feature rows scaled by 1/max(norm, eps), kept in double so correlation entries
// round only once, when stored into the float volume.
struct NormalizedRows {
    int hw = 0;
    int channels = 0;
    std::vector<double> rows;  // hw x channels

    const double* row(int p) const { return rows.data() + static_cast<size_t>(p) * channels; }
};

NormalizedRows normalize_rows(const FeatureLayer& layer, float epsilon) {
    NormalizedRows g;
    g.hw = layer.height * layer.width;
    g.channels = layer.channels;
    g.rows.resize(static_cast<size_t>(g.hw) * g.channels);
    const size_t plane = layer.plane_size();
    for (int p = 0; p < g.hw; ++p) {
        double sq = 0.0;
        for (int c = 0; c < g.channels; ++c) {
            const double v = layer.values[static_cast<size_t>(c) * plane + p];
            sq += v * v;
        }
        const double inv = 1.0 / std::max(std::sqrt(sq), static_cast<double>(epsilon));
        for (int c = 0; c < g.channels; ++c)
            g.rows[static_cast<size_t>(p) * g.channels + c] =
                layer.values[static_cast<size_t>(c) * plane + p] * inv;
    }
    return g;
}

double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

// Gram = G^T G (channels x channels) and H = G * Gram, so that
// avg_k cos(p,k) cos(k,q) = dot(H_p, g_q) / hw without an hw^3 product.
struct SecondOrderFactors {
    std::vector<double> h;  // hw x channels
    int hw = 0;
    int channels = 0;

    const double* row(int p) const { return h.data() + static_cast<size_t>(p) * channels; }
};

SecondOrderFactors second_order_factors(const NormalizedRows& g) {
    const int u = g.channels;
    std::vector<double> gram(static_cast<size_t>(u) * u, 0.0);
    for (int p = 0; p < g.hw; ++p) {
        const double* r = g.row(p);
        for (int a = 0; a < u; ++a)
            for (int b = 0; b < u; ++b) gram[static_cast<size_t>(a) * u + b] += r[a] * r[b];
    }
    SecondOrderFactors f;
    f.hw = g.hw;
    f.channels = u;
    f.h.resize(static_cast<size_t>(g.hw) * u);
    for (int p = 0; p < g.hw; ++p) {
        const double* r = g.row(p);
        double* out = f.h.data() + static_cast<size_t>(p) * u;
        for (int b = 0; b < u; ++b) {
            double s = 0.0;
            for (int a = 0; a < u; ++a) s += r[a] * gram[static_cast<size_t>(a) * u + b];
            out[b] = s;
        }
    }
    return f;
}

void check_layer(const FeatureLayer& layer) {
    if (layer.channels < 1 || layer.height < 1 || layer.width < 1)
        throw std::invalid_argument("self-correlation: layer has non-positive shape");
}

// One HSC row in double precision, streamed without materializing any volume.
class HscRowEngine {
public:
    HscRowEngine(const FeatureStack& stack, float epsilon) {
        for (const auto& layer : stack.layers) {
            check_layer(layer);
            g_.push_back(normalize_rows(layer, epsilon));
            f_.push_back(second_order_factors(g_.back()));
        }
        hw_ = g_.front().hw;
        sc1_.resize(hw_);
        sc2_.resize(hw_);
    }

    int pixel_count() const { return hw_; }

    // out must hold hw doubles; receives (1/L) sum_l max(SC1_l[p,.], SC2_l[p,.]).
    void row(int p, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        const double inv_l = 1.0 / static_cast<double>(g_.size());
        for (size_t l = 0; l < g_.size(); ++l) {
            const NormalizedRows& g = g_[l];
            const SecondOrderFactors& f = f_[l];
            const int u = g.channels;
            const double* gp = g.row(p);
            const double* hp = f.row(p);
            double mn = 0.0, mx = 0.0;
            for (int q = 0; q < hw_; ++q) {
                const double* gq = g.row(q);
                sc1_[q] = std::max(0.0, dot(gp, gq, u));
                const double pre = dot(hp, gq, u) / hw_;
                sc2_[q] = pre;
                if (q == 0 || pre < mn) mn = pre;
                if (q == 0 || pre > mx) mx = pre;
            }
            const double range = mx - mn;
            for (int q = 0; q < hw_; ++q) {
                const double sc2n = range > 0.0 ? (sc2_[q] - mn) / range : 0.0;
                out[q] += std::max(sc1_[q], sc2n) * inv_l;
            }
        }
    }

private:
    std::vector<NormalizedRows> g_;
    std::vector<SecondOrderFactors> f_;
    std::vector<double> sc1_, sc2_;
    int hw_ = 0;
};

std::vector<int> threshold_set(std::span<const float> plane, float threshold, bool above) {
    std::vector<int> set;
    for (int p = 0; p < static_cast<int>(plane.size()); ++p) {
        if (above ? plane[p] > threshold : plane[p] < threshold) set.push_back(p);
    }
    return set;
}

}  // namespace

CorrelationVolume first_order_sc(const FeatureLayer& layer, float epsilon) {
    check_layer(layer);
    const NormalizedRows g = normalize_rows(layer, epsilon);
    CorrelationVolume vol(layer.height, layer.width);
    const int hw = g.hw;
    for (int p = 0; p < hw; ++p) {
        for (int q = p; q < hw; ++q) {
            const float v = static_cast<float>(std::max(0.0, dot(g.row(p), g.row(q), g.channels)));
            vol.values[static_cast<size_t>(p) * hw + q] = v;
            vol.values[static_cast<size_t>(q) * hw + p] = v;
        }
    }
    return vol;
}

CorrelationVolume second_order_sc(const FeatureLayer& layer, float epsilon) {
    check_layer(layer);
    const NormalizedRows g = normalize_rows(layer, epsilon);
    const SecondOrderFactors f = second_order_factors(g);
    CorrelationVolume vol(layer.height, layer.width);
    const int hw = g.hw;
    std::vector<double> row(hw);
    for (int p = 0; p < hw; ++p) {
        double mn = 0.0, mx = 0.0;
        for (int q = 0; q < hw; ++q) {
            row[q] = dot(f.row(p), g.row(q), g.channels) / hw;
            if (q == 0 || row[q] < mn) mn = row[q];
            if (q == 0 || row[q] > mx) mx = row[q];
        }
        const double range = mx - mn;
        float* out = vol.values.data() + static_cast<size_t>(p) * hw;
        for (int q = 0; q < hw; ++q)
            out[q] = range > 0.0 ? static_cast<float>((row[q] - mn) / range) : 0.0f;
    }
    return vol;
}

CorrelationVolume hsc(const FeatureStack& stack, float epsilon) {
    if (stack.empty()) throw std::invalid_argument("hsc: no layers");
    const int h = stack.layers.front().height;
    const int w = stack.layers.front().width;
    for (const auto& layer : stack.layers)
        if (layer.height != h || layer.width != w)
            throw std::invalid_argument("hsc: layers must share one (height, width)");
    const size_t hw2 = static_cast<size_t>(h) * w * h * w;
    std::vector<double> acc(hw2, 0.0);
    for (const auto& layer : stack.layers) {
        const CorrelationVolume sc1 = first_order_sc(layer, epsilon);
        const CorrelationVolume sc2 = second_order_sc(layer, epsilon);
        for (size_t i = 0; i < hw2; ++i)
            acc[i] += std::max(sc1.values[i], sc2.values[i]);
    }
    CorrelationVolume vol(h, w);
    const double inv_l = 1.0 / static_cast<double>(stack.size());
    for (size_t i = 0; i < hw2; ++i) vol.values[i] = static_cast<float>(acc[i] * inv_l);
    return vol;
}

std::vector<float> k_scg(const CorrelationVolume& volume, const std::vector<int>& pixel_set) {
    const int hw = volume.pixel_count();
    std::vector<float> grid(hw, 0.0f);
    if (pixel_set.empty()) return grid;
    std::vector<double> acc(hw, 0.0);
    for (int p : pixel_set) {
        if (p < 0 || p >= hw) throw std::invalid_argument("k_scg: pixel index out of range");
        const std::span<const float> row = volume.row(p);
        for (int q = 0; q < hw; ++q) acc[q] += row[q];
    }
    const double inv = 1.0 / static_cast<double>(pixel_set.size());
    for (int q = 0; q < hw; ++q) grid[q] = static_cast<float>(acc[q] * inv);
    return grid;
}

ScoreMap scg_refine(const ScoreMap& cam, const FeatureStack& stack, const PipelineConfig& cfg) {
    if (stack.empty()) throw std::invalid_argument("scg_refine: no layers");
    FeatureStack resampled;
    resampled.layers.reserve(stack.size());
    for (const auto& layer : stack.layers)
        resampled.layers.push_back(resize_bilinear(layer, cam.height, cam.width));

    ScoreMap ncam = cam;
    minmax_normalize_per_class(ncam);

    const int hw = cam.height * cam.width;
    ScoreMap out(cam.classes, cam.height, cam.width, true);

    std::vector<std::vector<int>> high(cam.classes), low(cam.classes);
    for (int c = 0; c < cam.classes; ++c) {
        high[c] = threshold_set(ncam.plane(c), cfg.delta_h, true);
        low[c] = threshold_set(ncam.plane(c), cfg.delta_l, false);
    }

    auto finish_class = [&](int c, std::span<const double> k_high, std::span<const double> k_low) {
        std::span<float> plane = out.plane(c);
        for (int p = 0; p < hw; ++p)
            plane[p] = static_cast<float>(std::max(0.0, k_high[p] - k_low[p]));
        minmax_normalize_slice(plane);
    };

    if (hw <= cfg.scg_max_volume_pixels) {
        const CorrelationVolume volume = hsc(resampled, cfg.epsilon);
        for (int c = 0; c < cam.classes; ++c) {
            const std::vector<float> kh = k_scg(volume, high[c]);
            const std::vector<float> kl = k_scg(volume, low[c]);
            std::vector<double> dh(kh.begin(), kh.end()), dl(kl.begin(), kl.end());
            finish_class(c, dh, dl);
        }
    } else {
        // Too large to hold the hw x hw volume: stream rows once, scattering each
        // into the high/low accumulators of every class that selected it.
        HscRowEngine engine(resampled, cfg.epsilon);
        std::vector<std::vector<double>> acc_high(cam.classes, std::vector<double>(hw, 0.0));
        std::vector<std::vector<double>> acc_low(cam.classes, std::vector<double>(hw, 0.0));
        std::vector<uint8_t> needed(hw, 0);
        std::vector<std::vector<uint8_t>> in_high(cam.classes, std::vector<uint8_t>(hw, 0));
        std::vector<std::vector<uint8_t>> in_low(cam.classes, std::vector<uint8_t>(hw, 0));
        for (int c = 0; c < cam.classes; ++c) {
            for (int p : high[c]) in_high[c][p] = needed[p] = 1;
            for (int p : low[c]) in_low[c][p] = needed[p] = 1;
        }
        std::vector<double> row(hw);
        for (int p = 0; p < hw; ++p) {
            if (!needed[p]) continue;
            engine.row(p, row);
            for (int c = 0; c < cam.classes; ++c) {
                if (in_high[c][p])
                    for (int q = 0; q < hw; ++q) acc_high[c][q] += row[q];
                if (in_low[c][p])
                    for (int q = 0; q < hw; ++q) acc_low[c][q] += row[q];
            }
        }
        for (int c = 0; c < cam.classes; ++c) {
            if (!high[c].empty()) {
                const double inv = 1.0 / static_cast<double>(high[c].size());
                for (int q = 0; q < hw; ++q) acc_high[c][q] *= inv;
            }
            if (!low[c].empty()) {
                const double inv = 1.0 / static_cast<double>(low[c].size());
                for (int q = 0; q < hw; ++q) acc_low[c][q] *= inv;
            }
            finish_class(c, acc_high[c], acc_low[c]);
        }
    }
    return out;
}

}  // namespace seedrefine
