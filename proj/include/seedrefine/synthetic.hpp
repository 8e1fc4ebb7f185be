#pragma once

#include <cstdint>
#include <vector>

#include "seedrefine/seedloop.hpp"
#include "seedrefine/types.hpp"

namespace seedrefine {

/// Generator settings for the colored-shapes-on-textured-background dataset used
/// by the end-to-end recursion demo. Foreground classes are color signatures;
/// shapes and placement are random per image.
struct SyntheticOptions {
    int count = 64;
    int image_size = 48;
    int num_classes = 3;   // at most 3 (one color signature per class)
    int feature_stride = 2;  // feature grid = image_size / feature_stride
    int max_shapes = 2;      // 1..max_shapes shapes per image
    float feature_noise = 0.06f;  // additive noise on every feature channel
    float last_class_weight = 1.0f;  // relative draw weight of the last class
    // Shapes carry a dim rim (color blended halfway toward the background)
    // around the strongly colored core; the rim belongs to the class in the
    // ground truth but activates far more weakly.
    float rim_scale = 1.45f;  // rim outer radius as a multiple of the core radius
    float distractor_wave = 0.25f;  // wave amplitude of the distractor layer
    uint64_t seed = 7;
};

/// Items carry the image, a two-layer feature stack at the reduced grid (color
/// statistics and class-signature responses, both with additive noise), the
/// ground-truth mask, and the image-level presence labels derived from it.
std::vector<TrainItem> make_synthetic_dataset(const SyntheticOptions& opts);

}  // namespace seedrefine
