#pragma once

// Test-only reference implementations: straight-line naive versions of the
// pipeline math. They share nothing with the library internals beyond the
// public data types, so tests can compare both routes.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "seedrefine/config.hpp"
#include "seedrefine/types.hpp"

namespace oracle {

using seedrefine::FeatureLayer;
using seedrefine::FeatureStack;
using seedrefine::LabelMask;
using seedrefine::PipelineConfig;
using seedrefine::RgbImage;
using seedrefine::ScoreMap;
using seedrefine::WindowMask;

inline std::vector<double> pixel_vector(const FeatureLayer& layer, int p) {
    std::vector<double> v(layer.channels);
    const size_t plane = layer.plane_size();
    for (int c = 0; c < layer.channels; ++c)
        v[c] = layer.values[static_cast<size_t>(c) * plane + p];
    return v;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b, double eps) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::max(std::sqrt(na), eps) * std::max(std::sqrt(nb), eps));
}

inline void minmax_slice(std::vector<double>& v) {
    const double mn = *std::min_element(v.begin(), v.end());
    const double mx = *std::max_element(v.begin(), v.end());
    if (mx == mn) {
        std::fill(v.begin(), v.end(), 0.0);
        return;
    }
    for (double& x : v) x = (x - mn) / (mx - mn);
}

inline std::vector<double> sc1(const FeatureLayer& layer, double eps) {
    const int hw = layer.height * layer.width;
    std::vector<double> out(static_cast<size_t>(hw) * hw);
    for (int p = 0; p < hw; ++p)
        for (int q = 0; q < hw; ++q)
            out[static_cast<size_t>(p) * hw + q] =
                std::max(0.0, cosine(pixel_vector(layer, p), pixel_vector(layer, q), eps));
    return out;
}

inline std::vector<double> sc2(const FeatureLayer& layer, double eps) {
    const int hw = layer.height * layer.width;
    std::vector<double> out(static_cast<size_t>(hw) * hw);
    for (int p = 0; p < hw; ++p) {
        std::vector<double> row(hw, 0.0);
        for (int q = 0; q < hw; ++q) {
            double acc = 0.0;
            for (int k = 0; k < hw; ++k)
                acc += cosine(pixel_vector(layer, p), pixel_vector(layer, k), eps) *
                       cosine(pixel_vector(layer, k), pixel_vector(layer, q), eps);
            row[q] = acc / hw;
        }
        minmax_slice(row);
        for (int q = 0; q < hw; ++q) out[static_cast<size_t>(p) * hw + q] = row[q];
    }
    return out;
}

inline std::vector<double> hsc(const FeatureStack& stack, double eps) {
    const int hw = stack.layers.front().height * stack.layers.front().width;
    std::vector<double> out(static_cast<size_t>(hw) * hw, 0.0);
    for (const auto& layer : stack.layers) {
        const std::vector<double> a = sc1(layer, eps);
        const std::vector<double> b = sc2(layer, eps);
        for (size_t i = 0; i < out.size(); ++i) out[i] += std::max(a[i], b[i]);
    }
    for (double& v : out) v /= static_cast<double>(stack.size());
    return out;
}

inline std::vector<double> kscg(const std::vector<double>& hsc_volume, int hw,
                                const std::vector<int>& set) {
    std::vector<double> grid(hw, 0.0);
    if (set.empty()) return grid;
    for (int p : set)
        for (int q = 0; q < hw; ++q) grid[q] += hsc_volume[static_cast<size_t>(p) * hw + q];
    for (double& v : grid) v /= static_cast<double>(set.size());
    return grid;
}

// End-to-end reference for the correlation refinement; the stack must already
// be at the CAM resolution.
inline ScoreMap scg_refine(const ScoreMap& cam, const FeatureStack& stack,
                           const PipelineConfig& cfg) {
    const int hw = cam.height * cam.width;
    const std::vector<double> volume = hsc(stack, cfg.epsilon);
    ScoreMap out(cam.classes, cam.height, cam.width, true);
    for (int c = 0; c < cam.classes; ++c) {
        std::vector<double> plane(hw);
        for (int p = 0; p < hw; ++p) plane[p] = cam.plane(c)[p];
        minmax_slice(plane);
        std::vector<int> high, low;
        for (int p = 0; p < hw; ++p) {
            if (plane[p] > cfg.delta_h) high.push_back(p);
            if (plane[p] < cfg.delta_l) low.push_back(p);
        }
        const std::vector<double> kh = kscg(volume, hw, high);
        const std::vector<double> kl = kscg(volume, hw, low);
        std::vector<double> result(hw);
        for (int p = 0; p < hw; ++p) result[p] = std::max(0.0, kh[p] - kl[p]);
        minmax_slice(result);
        for (int p = 0; p < hw; ++p) out.plane(c)[p] = static_cast<float>(result[p]);
    }
    return out;
}

inline double sigma_at(const RgbImage& image, int y, int x, int window, double sigma_sq_floor) {
    const int r = window / 2;
    double sum_sigma = 0.0;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> vals;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                const int yy = std::clamp(y + dy, 0, image.height - 1);
                const int xx = std::clamp(x + dx, 0, image.width - 1);
                vals.push_back(image.at(c, yy, xx));
            }
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        var /= static_cast<double>(vals.size());
        sum_sigma += std::sqrt(var);
    }
    return std::max(sum_sigma / 3.0, std::sqrt(sigma_sq_floor));
}

// In-bounds neighbor weights at one pixel: softmax of the channel-averaged
// kernel, computed the plain way.
inline std::map<std::pair<int, int>, double> affinity_at(const RgbImage& image, int y, int x,
                                                         const std::vector<int>& dilations,
                                                         const PipelineConfig& cfg) {
    const double sigma =
        sigma_at(image, y, x, cfg.pamr_sigma_window, cfg.pamr_sigma_sq_floor);
    const double sig_sq = sigma * sigma;
    std::map<std::pair<int, int>, double> kbar;
    for (int d : dilations)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dy == 0 && dx == 0) continue;
                const int yy = y + dy * d, xx = x + dx * d;
                if (yy < 0 || yy >= image.height || xx < 0 || xx >= image.width) continue;
                double k = 0.0;
                for (int c = 0; c < 3; ++c)
                    k -= std::abs(static_cast<double>(image.at(c, y, x)) - image.at(c, yy, xx)) /
                         sig_sq;
                kbar[{dy * d, dx * d}] = k / 3.0;
            }
    double denom = 0.0;
    for (const auto& [off, k] : kbar) denom += std::exp(k);
    std::map<std::pair<int, int>, double> alpha;
    for (const auto& [off, k] : kbar) alpha[off] = std::exp(k) / denom;
    return alpha;
}

inline ScoreMap pamr(const ScoreMap& map, const RgbImage& image, const WindowMask& window,
                     const PipelineConfig& cfg) {
    const int h = map.height, w = map.width;
    // Precompute the per-pixel weight tables once.
    std::vector<std::map<std::pair<int, int>, double>> alpha(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            alpha[static_cast<size_t>(y) * w + x] =
                affinity_at(image, y, x, cfg.pamr_dilations, cfg);

    ScoreMap out = map;
    for (int c = 0; c < map.classes; ++c) {
        std::vector<double> cur(map.plane(c).begin(), map.plane(c).end());
        for (int t = 0; t < cfg.pamr_iterations; ++t) {
            std::vector<double> next(cur.size());
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const size_t p = static_cast<size_t>(y) * w + x;
                    if (alpha[p].empty()) {
                        next[p] = cur[p];
                        continue;
                    }
                    double acc = 0.0;
                    for (const auto& [off, wgt] : alpha[p])
                        acc += wgt * cur[static_cast<size_t>(y + off.first) * w + (x + off.second)];
                    next[p] = acc;
                }
            cur.swap(next);
        }
        for (size_t p = 0; p < cur.size(); ++p)
            out.plane(c)[p] = window.member[p] ? static_cast<float>(cur[p]) : 0.0f;
    }
    return out;
}

// Union-find connected components over non-edge pixels, relabeled to dense ids
// in raster order of first occurrence.
inline std::vector<int32_t> flood_components(const std::vector<uint8_t>& edge, int h, int w,
                                             int connectivity) {
    const size_t n = static_cast<size_t>(h) * w;
    std::vector<int32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<int32_t> out(n, -1);
    auto find = [&](int32_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    auto unite = [&](int32_t a, int32_t b) { parent[find(a)] = find(b); };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t p = static_cast<size_t>(y) * w + x;
            if (edge[p]) continue;
            const int dy_lim = 1, dx_lim = 1;
            for (int dy = -dy_lim; dy <= dy_lim; ++dy)
                for (int dx = -dx_lim; dx <= dx_lim; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    if (connectivity == 4 && dy != 0 && dx != 0) continue;
                    const int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    const size_t q = static_cast<size_t>(yy) * w + xx;
                    if (!edge[q]) unite(static_cast<int32_t>(p), static_cast<int32_t>(q));
                }
        }
    std::map<int32_t, int32_t> relabel;
    int32_t next_id = 0;
    for (size_t p = 0; p < n; ++p) {
        if (edge[p]) continue;
        const int32_t root = find(static_cast<int32_t>(p));
        auto it = relabel.find(root);
        if (it == relabel.end()) it = relabel.emplace(root, next_id++).first;
        out[p] = it->second;
    }
    return out;
}

}  // namespace oracle
