#include "seedrefine/pamr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace seedrefine {

std::vector<float> local_sigma(const RgbImage& image, int window, float sigma_sq_floor) {
    if (window < 3 || window % 2 == 0)
        throw std::invalid_argument("local_sigma: window must be odd and >= 3");
    if (!(sigma_sq_floor > 0.0f))
        throw std::invalid_argument("local_sigma: sigma_sq_floor must be positive");
    const int h = image.height, w = image.width;
    const int r = window / 2;
    const double floor_sigma = std::sqrt(static_cast<double>(sigma_sq_floor));
    std::vector<float> out(static_cast<size_t>(h) * w);
    const double n = static_cast<double>(window) * window;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sigma_sum = 0.0;
            for (int c = 0; c < 3; ++c) {
                double s = 0.0, s2 = 0.0;
                for (int dy = -r; dy <= r; ++dy) {
                    const int yy = std::clamp(y + dy, 0, h - 1);
                    for (int dx = -r; dx <= r; ++dx) {
                        const int xx = std::clamp(x + dx, 0, w - 1);
                        const double v = image.at(c, yy, xx);
                        s += v;
                        s2 += v * v;
                    }
                }
                const double mean = s / n;
                const double var = std::max(0.0, s2 / n - mean * mean);
                sigma_sum += std::sqrt(var);
            }
            out[static_cast<size_t>(y) * w + x] =
                static_cast<float>(std::max(sigma_sum / 3.0, floor_sigma));
        }
    }
    return out;
}

AffinityField build_affinity(const RgbImage& image, const std::vector<int>& dilations,
                             const PipelineConfig& cfg) {
    if (dilations.empty()) throw std::invalid_argument("build_affinity: empty dilation set");
    AffinityField field;
    field.height = image.height;
    field.width = image.width;
    for (int d : dilations) {
        if (d < 1) throw std::invalid_argument("build_affinity: dilations must be positive");
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dy == 0 && dx == 0) continue;
                field.offsets.emplace_back(dy * d, dx * d);
            }
    }

    const int h = image.height, w = image.width;
    const size_t plane = static_cast<size_t>(h) * w;
    const int num_off = static_cast<int>(field.offsets.size());
    field.weights.assign(num_off * plane, 0.0f);
    field.has_support.assign(plane, 0);

    const std::vector<float> sigma =
        local_sigma(image, cfg.pamr_sigma_window, cfg.pamr_sigma_sq_floor);

    std::vector<double> kbar(num_off);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t p = static_cast<size_t>(y) * w + x;
            const double sig_sq = static_cast<double>(sigma[p]) * sigma[p];
            double kmax = 0.0;
            bool any = false;
            for (int o = 0; o < num_off; ++o) {
                const int yy = y + field.offsets[o].first;
                const int xx = x + field.offsets[o].second;
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) {
                    kbar[o] = std::numeric_limits<double>::quiet_NaN();
                    continue;
                }
                double k = 0.0;
                for (int c = 0; c < 3; ++c)
                    k -= std::abs(static_cast<double>(image.at(c, y, x)) - image.at(c, yy, xx)) /
                         sig_sq;
                kbar[o] = k / 3.0;
                if (!any || kbar[o] > kmax) kmax = kbar[o];
                any = true;
            }
            if (!any) continue;  // no in-bounds neighbor; propagation keeps the value
            field.has_support[p] = 1;
            double denom = 0.0;
            for (int o = 0; o < num_off; ++o)
                if (!std::isnan(kbar[o])) denom += std::exp(kbar[o] - kmax);
            for (int o = 0; o < num_off; ++o)
                if (!std::isnan(kbar[o]))
                    field.weights[static_cast<size_t>(o) * plane + p] =
                        static_cast<float>(std::exp(kbar[o] - kmax) / denom);
        }
    }
    return field;
}

ScoreMap pamr_propagate(const ScoreMap& map, const AffinityField& field, const WindowMask& window,
                        int iterations) {
    if (field.height != map.height || field.width != map.width)
        throw std::invalid_argument("pamr: affinity field shape does not match the map");
    if (window.height != map.height || window.width != map.width)
        throw std::invalid_argument("pamr: window shape does not match the map");
    if (iterations < 0) throw std::invalid_argument("pamr: iterations must be >= 0");

    const int h = map.height, w = map.width;
    const size_t plane = static_cast<size_t>(h) * w;
    const int num_off = static_cast<int>(field.offsets.size());

    ScoreMap out = map;
    std::vector<float> cur(plane), next(plane);
    for (int c = 0; c < map.classes; ++c) {
        std::span<const float> src = map.plane(c);
        std::copy(src.begin(), src.end(), cur.begin());
        for (int t = 0; t < iterations; ++t) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const size_t p = static_cast<size_t>(y) * w + x;
                    if (!field.has_support[p]) {
                        next[p] = cur[p];
                        continue;
                    }
                    double acc = 0.0;
                    for (int o = 0; o < num_off; ++o) {
                        const float wt = field.weights[static_cast<size_t>(o) * plane + p];
                        if (wt == 0.0f) continue;
                        const int yy = y + field.offsets[o].first;
                        const int xx = x + field.offsets[o].second;
                        acc += static_cast<double>(wt) * cur[static_cast<size_t>(yy) * w + xx];
                    }
                    next[p] = static_cast<float>(acc);
                }
            }
            cur.swap(next);
        }
        std::span<float> dst = out.plane(c);
        for (size_t p = 0; p < plane; ++p) dst[p] = window.member[p] ? cur[p] : 0.0f;
    }
    return out;
}

ScoreMap pamr_refine(const ScoreMap& map, const RgbImage& image, const WindowMask& window,
                     const PipelineConfig& cfg) {
    if (image.height != map.height || image.width != map.width)
        throw std::invalid_argument("pamr_refine: image shape does not match the map");
    const AffinityField field = build_affinity(image, cfg.pamr_dilations, cfg);
    return pamr_propagate(map, field, window, cfg.pamr_iterations);
}

}  // namespace seedrefine
