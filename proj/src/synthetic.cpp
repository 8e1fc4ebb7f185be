#include "seedrefine/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "seedrefine/grid_ops.hpp"
#include "seedrefine/rng.hpp"

namespace seedrefine {

namespace {

constexpr double kPalette[3][3] = {
    {0.85, 0.15, 0.15},  // class 1
    {0.15, 0.80, 0.20},  // class 2
    {0.15, 0.25, 0.85},  // class 3
};

// Width of the color-signature response; wide enough that rim pixels (halfway
// to the background) still respond visibly.
constexpr double kResponseSigma = 0.30;

inline float clamp01(double v) {
    return static_cast<float>(std::min(1.0, std::max(0.0, v)));
}

struct Shape {
    int cls;   // 1..C
    int kind;  // 0 disc, 1 square
    double cx, cy, r;

    // 0 = outside, 1 = rim, 2 = core
    int region(double x, double y, double rim_scale) const {
        double d;
        if (kind == 0) {
            const double dx = x - cx, dy = y - cy;
            d = std::sqrt(dx * dx + dy * dy);
        } else {
            d = std::max(std::abs(x - cx), std::abs(y - cy));
        }
        if (d <= r) return 2;
        if (d <= r * rim_scale) return 1;
        return 0;
    }
};

}  // namespace

std::vector<TrainItem> make_synthetic_dataset(const SyntheticOptions& opts) {
    if (opts.num_classes < 1 || opts.num_classes > 3)
        throw std::invalid_argument("make_synthetic_dataset: num_classes must be 1..3");
    if (opts.image_size < 8 || opts.feature_stride < 1 ||
        opts.image_size % opts.feature_stride != 0)
        throw std::invalid_argument(
            "make_synthetic_dataset: image_size must be a multiple of feature_stride");
    if (opts.count < 1 || opts.max_shapes < 1)
        throw std::invalid_argument("make_synthetic_dataset: count and max_shapes must be positive");
    if (opts.rim_scale < 1.0f)
        throw std::invalid_argument("make_synthetic_dataset: rim_scale must be >= 1");

    const int s = opts.image_size;
    const int fs = s / opts.feature_stride;
    std::vector<TrainItem> items;
    items.reserve(opts.count);

    for (int i = 0; i < opts.count; ++i) {
        SplitMix64 rng(SplitMix64::derive(opts.seed, static_cast<uint64_t>(i)));
        TrainItem item;
        item.image = RgbImage(s, s);
        item.truth = LabelMask(s, s, 0);
        item.labels.assign(opts.num_classes, 0);

        // Textured background: per-image base color, a low-frequency wave, and noise.
        double base[3];
        for (double& b : base) b = 0.25 + 0.5 * rng.next_double();
        const double wave_fx = (1.0 + rng.next_below(3)) * 2.0 * M_PI / s;
        const double wave_fy = (1.0 + rng.next_below(3)) * 2.0 * M_PI / s;
        const double wave_phase = 2.0 * M_PI * rng.next_double();

        const int num_shapes = 1 + static_cast<int>(rng.next_below(opts.max_shapes));
        std::vector<Shape> shapes;
        const double total_weight = opts.num_classes - 1 + opts.last_class_weight;
        for (int k = 0; k < num_shapes; ++k) {
            Shape sh;
            if (opts.num_classes > 1) {
                const double u = rng.next_double() * total_weight;
                sh.cls = u < opts.num_classes - 1 ? 1 + static_cast<int>(u) : opts.num_classes;
            } else {
                sh.cls = 1;
            }
            sh.kind = static_cast<int>(rng.next_below(2));
            const double max_r = s / 5.0 / opts.rim_scale;
            const double min_r = s / 8.0 / opts.rim_scale;
            sh.r = min_r + rng.next_double() * (max_r - min_r);
            const double extent = sh.r * opts.rim_scale;
            sh.cx = extent + rng.next_double() * (s - 2.0 * extent);
            sh.cy = extent + rng.next_double() * (s - 2.0 * extent);
            shapes.push_back(sh);
        }

        for (int y = 0; y < s; ++y)
            for (int x = 0; x < s; ++x) {
                int cls = 0, region = 0;
                for (const Shape& sh : shapes) {  // later shapes overwrite earlier ones
                    const int r = sh.region(x + 0.5, y + 0.5, opts.rim_scale);
                    if (r > 0) {
                        cls = sh.cls;
                        region = r;
                    }
                }
                item.truth.at(y, x) = cls;
                const double wave = 0.04 * std::sin(wave_fx * x + wave_fy * y + wave_phase);
                for (int c = 0; c < 3; ++c) {
                    double color;
                    if (region == 2) color = kPalette[cls - 1][c];
                    else if (region == 1)
                        color = 0.5 * (kPalette[cls - 1][c] + base[c] + wave);
                    else color = base[c] + wave;
                    item.image.at(c, y, x) = clamp01(color + 0.05 * rng.next_normal());
                }
                if (cls > 0) item.labels[cls - 1] = 1;
            }

        // Features live on the reduced grid and are local functions of the image,
        // so pasting features matches pasting pixels. All layers carry 8
        // channels so the stack serializes as one rank-4 tensor.
        const RgbImage small = resize_bilinear(item.image, fs, fs);
        const double noise = opts.feature_noise;
        FeatureLayer low(8, fs, fs);       // color statistics
        FeatureLayer semantic(8, fs, fs);  // signature responses
        FeatureLayer distract(8, fs, fs);  // class-independent structured texture
        for (int y = 0; y < fs; ++y)
            for (int x = 0; x < fs; ++x) {
                const double r = small.at(0, y, x);
                const double g = small.at(1, y, x);
                const double b = small.at(2, y, x);
                const double lum = (r + g + b) / 3.0;
                const double lowv[8] = {r, g, b, r - g, r - b, g - b, lum, 1.0};
                for (int c = 0; c < 8; ++c)
                    low.at(c, y, x) =
                        static_cast<float>(lowv[c] + 1.3 * noise * rng.next_normal());

                double smax = 0.0;
                for (int c = 0; c < opts.num_classes; ++c) {
                    const double dr = r - kPalette[c][0];
                    const double dg = g - kPalette[c][1];
                    const double db = b - kPalette[c][2];
                    const double d2 = dr * dr + dg * dg + db * db;
                    const double resp = std::exp(-d2 / (2.0 * kResponseSigma * kResponseSigma));
                    smax = std::max(smax, resp);
                    semantic.at(c, y, x) =
                        static_cast<float>(resp + noise * rng.next_normal());
                }
                semantic.at(opts.num_classes, y, x) =
                    static_cast<float>(1.0 - smax + noise * rng.next_normal());
                semantic.at(opts.num_classes + 1, y, x) =
                    static_cast<float>(lum + noise * rng.next_normal());
                for (int c = opts.num_classes + 2; c < 8; ++c)
                    semantic.at(c, y, x) = static_cast<float>(noise * rng.next_normal());
            }
        // The distractor layer carries spatially coherent waves unrelated to any
        // class. It degrades the correlation volume (and with it the refined
        // seeds) without informing or hindering the linear heads.
        const double wave_amp = opts.distractor_wave;
        for (int c = 0; c < 8; ++c) {
            const double fx = (1.0 + rng.next_below(4)) * 2.0 * M_PI / fs;
            const double fy = (1.0 + rng.next_below(4)) * 2.0 * M_PI / fs;
            const double phase = 2.0 * M_PI * rng.next_double();
            for (int y = 0; y < fs; ++y)
                for (int x = 0; x < fs; ++x)
                    distract.at(c, y, x) = static_cast<float>(
                        wave_amp * std::sin(fx * x + fy * y + phase) + 0.6 * rng.next_normal());
        }
        item.features.layers.push_back(std::move(semantic));
        item.features.layers.push_back(std::move(low));
        item.features.layers.push_back(std::move(distract));
        items.push_back(std::move(item));
    }
    return items;
}

}  // namespace seedrefine
