#pragma once

#include <vector>

#include "seedrefine/config.hpp"
#include "seedrefine/types.hpp"

namespace seedrefine {

struct EdgeMap {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> edge;

    EdgeMap() = default;
    EdgeMap(int height_, int width_)
        : height(height_), width(width_), edge(static_cast<size_t>(height_) * width_, 0) {}

    bool at(int y, int x) const { return edge[static_cast<size_t>(y) * width + x] != 0; }
    void set(int y, int x, bool v) { edge[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
    size_t count() const;
};

/// Component id per pixel; -1 marks edge pixels, other ids are dense and assigned
/// in raster-scan order of first occurrence.
struct SuperpixelLabels {
    int height = 0;
    int width = 0;
    int count = 0;
    std::vector<int32_t> id;

    int32_t at(int y, int x) const { return id[static_cast<size_t>(y) * width + x]; }
};

/// Classic Canny on a single-channel grid scaled to [0,255]: 5x5 Gaussian
/// (sigma 1.4), Sobel gradients, 4-direction non-maximum suppression, and
/// double-threshold hysteresis (weak pixels kept iff 8-connected to a strong one).
EdgeMap canny(const std::vector<float>& gray, int height, int width, float low, float high);

/// Label non-edge pixels under 4- or 8-connectivity; edge pixels get -1.
SuperpixelLabels connected_components(const EdgeMap& edges, int connectivity);

/// Relabel uncertain pixels of a probabilistic (C+1)-channel map by the majority
/// certain class of their edge-delimited superpixel. Certain pixels (max above
/// delta_fg or below delta_bg) are never modified; superpixels without certain
/// pixels and pixels on edges are left unchanged.
ScoreMap ep_refine(const ScoreMap& dec, const PipelineConfig& cfg);

}  // namespace seedrefine
