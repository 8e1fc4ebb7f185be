#pragma once

#include <random>

#include "seedrefine/types.hpp"

namespace testutil {

using seedrefine::FeatureLayer;
using seedrefine::FeatureStack;
using seedrefine::RgbImage;
using seedrefine::ScoreMap;

inline FeatureLayer random_layer(std::mt19937& rng, int channels, int h, int w,
                                 float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> dist(lo, hi);
    FeatureLayer layer(channels, h, w);
    for (auto& v : layer.values) v = dist(rng);
    return layer;
}

inline ScoreMap random_map(std::mt19937& rng, int classes, int h, int w, bool probabilistic) {
    std::uniform_real_distribution<float> dist(probabilistic ? 0.0f : -2.0f,
                                               probabilistic ? 1.0f : 2.0f);
    ScoreMap map(classes, h, w, probabilistic);
    for (auto& v : map.values) v = dist(rng);
    return map;
}

inline RgbImage random_image(std::mt19937& rng, int h, int w) {
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    RgbImage image(h, w);
    for (auto& v : image.values) v = dist(rng);
    return image;
}

}  // namespace testutil
