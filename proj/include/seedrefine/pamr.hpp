#pragma once

#include <utility>
#include <vector>

#include "seedrefine/config.hpp"
#include "seedrefine/types.hpp"

namespace seedrefine {

/// Softmax-normalized neighbor weights derived from image intensities.
/// weights[o * h*w + p] is the weight of neighbor offsets[o] at pixel p;
/// out-of-bounds neighbors carry weight 0 and are excluded from the softmax.
struct AffinityField {
    int height = 0;
    int width = 0;
    std::vector<std::pair<int, int>> offsets;  // (dy, dx), 8 per dilation
    std::vector<float> weights;
    std::vector<uint8_t> has_support;  // 0 only when every neighbor is out of bounds

    float weight(int o, int y, int x) const {
        return weights[(static_cast<size_t>(o) * height + y) * width + x];
    }
};

/// Channel-averaged local standard deviation of the image (replicate-padded
/// window), clamped so sigma^2 >= sigma_sq_floor. Returns an h*w grid.
std::vector<float> local_sigma(const RgbImage& image, int window, float sigma_sq_floor);

/// Affinity kernel k = -|I(i,j) - I(k,n)| / sigma^2(i,j) per channel, averaged over
/// RGB, softmax-normalized over the in-bounds dilated 3x3 neighborhood.
AffinityField build_affinity(const RgbImage& image, const std::vector<int>& dilations,
                             const PipelineConfig& cfg);

/// Propagate each class plane through `iterations` weighted-average steps of a
/// prebuilt field, then zero every pixel outside `window`.
ScoreMap pamr_propagate(const ScoreMap& map, const AffinityField& field, const WindowMask& window,
                        int iterations);

/// build_affinity + pamr_propagate with the config's iteration count and dilations.
ScoreMap pamr_refine(const ScoreMap& map, const RgbImage& image, const WindowMask& window,
                     const PipelineConfig& cfg);

}  // namespace seedrefine
